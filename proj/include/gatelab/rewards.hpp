#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gatelab/expr.hpp"
#include "gatelab/policy.hpp"
#include "gatelab/rng.hpp"

namespace gatelab {

struct MissingGold : std::runtime_error {
  MissingGold() : std::runtime_error("task carries no reference answer") {}
};

// 1 iff both sides canonicalize to the same integer. Whitespace and
// leading-zero variation never matter; non-integer text never matches.
double grounded_reward(std::string_view answer, std::string_view gold);

// Self-inclusive agreement share per answer: reward_i = |{j : κ(a_j) = κ(a_i)}| / n.
// Ranges over {1/n, ..., 1}; all-agree gives 1, all-distinct gives 1/n. The
// group mean equals the sum of (class_size/n)^2 over agreement classes.
std::vector<double> intrinsic_rewards(const std::vector<std::string>& answers);

enum class Reference { Executor, Claimed };

struct AccuracyEstimate {
  double alpha = 0.0;  // fraction of fresh rollouts matching the reference
  int rollouts = 0;
  Reference source = Reference::Executor;
};

// Draws n_s fresh solver rollouts on the question and scores them against
// the chosen reference answer. question may be null (unparseable text);
// the solver then answers without its evaluation strategy.
AccuracyEstimate estimate_accuracy(const Expr* question, std::int64_t x, std::int64_t y,
                                   const std::optional<std::string>& exec_output,
                                   const std::optional<std::string>& claimed_output,
                                   Reference ref, const SolverParams& solver, int n_s,
                                   Rng& rng);

// Difficulty-seeking proposer reward: hardest tasks (never solved) score 1.
double proposer_reward(const AccuracyEstimate& est);

// Group-normalized advantages: (r - mean) / (population std + 1e-6). An
// all-equal group short-circuits to exact zeros. Requires n >= 2.
std::vector<double> grpo_advantages(const std::vector<double>& rewards);

// Mean intrinsic reward minus mean grounded accuracy for one rollout group.
// Undefined (nullopt) when no reference answer exists.
std::optional<double> intrinsic_grounded_gap(const std::vector<std::string>& answers,
                                             const std::optional<std::string>& gold);

}  // namespace gatelab
