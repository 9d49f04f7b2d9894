#include "touchpred/touchpoints.hpp"

#include <stdexcept>

namespace touchpred {

const std::array<TouchpointInfo, kNumTouchpoints>& touchpoint_table() {
  static const std::array<TouchpointInfo, kNumTouchpoints> table = {{
      {1, "Earned social click none", 12495},
      {2, "Owned social click none", 5167},
      {3, "Paid affiliate click none", 2178},
      {4, "Paid display click awareness", 1700},
      {5, "Paid display click nonstock consideration", 161},
      {6, "Paid display click nonstock ROI", 1287},
      {7, "Paid display click stock consideration", 240},
      {8, "Paid display click stock ROI", 84},
      {9, "Paid display impression awareness", 3278563},
      {10, "Paid display impression nonstock consideration", 194759},
      {11, "Paid display impression nonstock ROI", 6995656},
      {12, "Paid display impression stock consideration", 160837},
      {13, "Paid display impression stock ROI", 355639},
      {14, "Paid email click awareness", 123190},
      {15, "Paid email click promo", 2137},
      {16, "Paid email click ROI", 53556},
      {17, "Paid email click stock", 8810},
      {18, "Paid email open awareness", 1907397},
      {19, "Paid email open promo", 65680},
      {20, "Paid email open ROI", 814296},
      {21, "Paid email open stock", 180003},
      {22, "Paid email sent awareness", 2324088},
      {23, "Paid email sent promo", 126088},
      {24, "Paid email sent ROI", 864342},
      {25, "Paid email sent stock", 251481},
      {26, "Paid search click nonstock brand", 36123},
      {27, "Paid search click nonstock nonbrand", 11781},
      {28, "Paid search click stock brand", 19139},
      {29, "Paid search click stock nonbrand", 3240},
      {30, "Paid social click paid FB", 78},
      {31, "Paid social impression paid FB", 30402},
  }};
  return table;
}

std::string_view touchpoint_name(int code) {
  if (code < 1 || code > kNumTouchpoints) {
    throw std::invalid_argument("touchpoint code out of range 1..31");
  }
  return touchpoint_table()[static_cast<std::size_t>(code - 1)].name;
}

std::array<std::int64_t, kNumTouchpoints> touchpoint_overall_counts() {
  std::array<std::int64_t, kNumTouchpoints> counts{};
  for (const auto& info : touchpoint_table()) {
    counts[static_cast<std::size_t>(info.code - 1)] = info.overall_count;
  }
  return counts;
}

}  // namespace touchpred
