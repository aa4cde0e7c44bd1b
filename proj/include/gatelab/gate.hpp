#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "gatelab/rng.hpp"

namespace gatelab {

enum class FailReason { None, Parse, Probe, Runtime };

std::string_view fail_reason_name(FailReason r);

struct ExecOutcome {
  bool exec = false;                        // full validation verdict
  std::optional<std::string> output;        // decimal result, present iff exec
  FailReason reason = FailReason::None;
};

// Validation pipeline for a proposed task: parse the program text, probe the
// 5x5 grid, evaluate at the task's own input (twice; the runs must agree).
// The input can still reject after a clean probe — the probe grid only
// covers {-2..2}^2.
ExecOutcome exec_check(std::string_view program_text, std::int64_t x, std::int64_t y);

struct GateConfig {
  double epsilon = 0.0;        // leak rate for invalid tasks
  std::uint64_t seed = 1;      // seeds the dedicated leak stream
};

// Validated tasks pass unconditionally; failed ones pass with probability
// epsilon via exactly one draw from the dedicated leak stream. epsilon = 0
// is a strict gate, epsilon = 1 disables it.
bool admit(const ExecOutcome& outcome, const GateConfig& cfg, Rng& leak_stream);

// Gate quality as a binary classifier of task validity: sensitivity is 1
// (valid tasks always pass), specificity is 1 - epsilon.
constexpr double youden_index(double epsilon) { return 1.0 - epsilon; }

}  // namespace gatelab
