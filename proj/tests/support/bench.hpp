// SPDX-License-Identifier: Apache-2.0
//
// Small helpers that put a chip into a known state for tests.
#pragma once

#include <functional>

#include <gtest/gtest.h>

#include "varichar/chip.hpp"
#include "varichar/error.hpp"
#include "varichar/power.hpp"

namespace bench {

/// Applies the default power-up sequence directly to the rails.
inline void power_on(varichar::ChipInstance& chip, double vcore = 900.0, double vsram = 900.0) {
  for (const auto& s : varichar::default_power_sequence(vcore, vsram).steps) chip.apply_rail(s.rail, s.target_mv);
}

inline void power_off(varichar::ChipInstance& chip) {
  const auto steps = varichar::default_power_sequence().steps;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) chip.apply_rail(it->rail, 0.0);
}

/// Powered, debug port enabled, core halted.
inline void debug_ready(varichar::ChipInstance& chip) {
  power_on(chip);
  chip.dap_access(varichar::dap_enable_txn());
  chip.dap_access(varichar::dhcsr_debug_enable());
}

inline varichar::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const varichar::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return varichar::ErrorCode::PreconditionViolation;
}

/// Config with every variability sigma at zero: all scale factors are 1.
inline varichar::ModelConfig nominal_config() {
  varichar::ModelConfig c;
  c.sigma_leak = 0.0;
  c.sigma_active = 0.0;
  c.sigma_ro = 0.0;
  c.sigma_sram = 0.0;
  return c;
}

}  // namespace bench
