// SPDX-License-Identifier: Apache-2.0
#include "varichar/types.hpp"

namespace varichar {

std::string_view to_string(ChipVariant v) noexcept {
  return v == ChipVariant::Michigan ? "Michigan" : "UCLA";
}

std::optional<ChipVariant> parse_variant(std::string_view s) noexcept {
  if (s == "Michigan" || s == "michigan") return ChipVariant::Michigan;
  if (s == "UCLA" || s == "ucla") return ChipVariant::UCLA;
  return std::nullopt;
}

std::string_view to_string(Rail r) noexcept {
  switch (r) {
    case Rail::DVDD: return "DVDD";
    case Rail::DVDD2: return "DVDD2";
    case Rail::AVDD: return "AVDD";
    case Rail::AVDD2: return "AVDD2";
    case Rail::WRAPPERVDD: return "WRAPPERVDD";
    case Rail::SENSEVDD: return "SENSEVDD";
    case Rail::SRAMVDD: return "SRAMVDD";
    case Rail::COREVDD: return "COREVDD";
  }
  return "?";
}

std::optional<Rail> parse_rail(std::string_view s) noexcept {
  for (Rail r : kAllRails) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::string_view to_string(LeakDevice d) noexcept {
  switch (d) {
    case LeakDevice::RVTP: return "RVTP";
    case LeakDevice::RVTN: return "RVTN";
    case LeakDevice::HVTP: return "HVTP";
    case LeakDevice::HVTN: return "HVTN";
  }
  return "?";
}

}  // namespace varichar
