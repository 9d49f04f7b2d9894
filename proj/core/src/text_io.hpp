#pragma once

// Internal helpers for CSV reading/writing with deterministic number
// formatting (shortest round-trip doubles via std::to_chars).

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace touchpred::detail {

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

template <typename Int>
inline void append_int(std::string& out, Int v) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("int formatting failed");
  out.append(buf, ptr);
}

inline void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  out.append(buf, ptr);
}

// Buffered line writer; flushes in ~1 MiB chunks.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
    buf_.reserve(kFlushAt + 4096);
  }
  ~CsvWriter() { flush(); }

  std::string& buffer() { return buf_; }

  void maybe_flush() {
    if (buf_.size() >= kFlushAt) flush();
  }

  void flush() {
    if (!buf_.empty()) {
      out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
      buf_.clear();
    }
  }

 private:
  static constexpr std::size_t kFlushAt = 1 << 20;
  std::ofstream out_;
  std::string buf_;
};

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

template <typename Int>
inline Int parse_int_field(std::string_view field, const std::string& file, std::size_t line_no,
                           const char* what) {
  Int value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw std::runtime_error(file + ":" + std::to_string(line_no) + ": malformed " + what + " '" +
                             std::string(field) + "'");
  }
  return value;
}

// Reads all lines (without trailing \r\n) and hands them to fn(line_no, line).
// line_no is 1-based and counts the header as line 1.
template <typename Fn>
inline void for_each_csv_row(const std::filesystem::path& path, const std::string& expected_header,
                             Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != expected_header) {
        throw std::runtime_error(path.string() + ":1: expected header '" + expected_header +
                                 "', got '" + line + "'");
      }
      continue;
    }
    if (line.empty()) continue;
    fn(line_no, std::string_view(line));
  }
}

}  // namespace touchpred::detail
