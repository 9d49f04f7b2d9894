#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace touchpred {

inline constexpr int kNumTouchpoints = 31;

struct TouchpointInfo {
  int code;  // 1-based numeric code
  std::string_view name;
  std::int64_t overall_count;  // observed total over the 40-month horizon
};

// Catalog of the 31 touchpoint types, index i holds code i+1.
const std::array<TouchpointInfo, kNumTouchpoints>& touchpoint_table();

std::string_view touchpoint_name(int code);

// Overall counts as a vector aligned to codes 1..31.
std::array<std::int64_t, kNumTouchpoints> touchpoint_overall_counts();

}  // namespace touchpred
