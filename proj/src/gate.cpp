#include "gatelab/gate.hpp"

#include "gatelab/expr.hpp"

namespace gatelab {

std::string_view fail_reason_name(FailReason r) {
  switch (r) {
    case FailReason::None: return "none";
    case FailReason::Parse: return "parse";
    case FailReason::Probe: return "probe";
    case FailReason::Runtime: return "runtime";
  }
  return "?";
}

ExecOutcome exec_check(std::string_view program_text, std::int64_t x, std::int64_t y) {
  auto e = parse(program_text);
  if (!e) return {false, std::nullopt, FailReason::Parse};
  if (!probe_validate(*e)) return {false, std::nullopt, FailReason::Probe};
  auto first = evaluate(*e, x, y);
  if (!first) return {false, std::nullopt, FailReason::Runtime};
  auto second = evaluate(*e, x, y);  // repeat-run agreement check
  if (!second || *second != *first) return {false, std::nullopt, FailReason::Runtime};
  return {true, first->str(), FailReason::None};
}

bool admit(const ExecOutcome& outcome, const GateConfig& cfg, Rng& leak_stream) {
  if (outcome.exec) return true;
  return leak_stream.bernoulli(cfg.epsilon);
}

}  // namespace gatelab
