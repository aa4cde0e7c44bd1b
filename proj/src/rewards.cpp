#include "gatelab/rewards.hpp"

#include <cassert>
#include <cmath>

namespace gatelab {

double grounded_reward(std::string_view answer, std::string_view gold) {
  return answers_match_as_integers(canonicalize_answer(answer), canonicalize_answer(gold))
             ? 1.0
             : 0.0;
}

std::vector<double> intrinsic_rewards(const std::vector<std::string>& answers) {
  assert(!answers.empty());
  const std::size_t n = answers.size();
  std::vector<CanonicalAnswer> canon;
  canon.reserve(n);
  for (const auto& a : answers) canon.push_back(canonicalize_answer(a));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    int k = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (canon[j] == canon[i]) ++k;
    out[i] = static_cast<double>(k) / static_cast<double>(n);
  }
  return out;
}

AccuracyEstimate estimate_accuracy(const Expr* question, std::int64_t x, std::int64_t y,
                                   const std::optional<std::string>& exec_output,
                                   const std::optional<std::string>& claimed_output,
                                   Reference ref, const SolverParams& solver, int n_s,
                                   Rng& rng) {
  const auto& reference = ref == Reference::Executor ? exec_output : claimed_output;
  if (!reference) throw MissingGold();
  assert(n_s >= 1);
  int hits = 0;
  for (int i = 0; i < n_s; ++i) {
    const SolverSample s = solver_sample(solver, question, x, y, rng);
    hits += static_cast<int>(grounded_reward(s.answer, *reference));
  }
  AccuracyEstimate est;
  est.alpha = static_cast<double>(hits) / static_cast<double>(n_s);
  est.rollouts = n_s;
  est.source = ref;
  return est;
}

double proposer_reward(const AccuracyEstimate& est) { return 1.0 - est.alpha; }

std::vector<double> grpo_advantages(const std::vector<double>& rewards) {
  const std::size_t n = rewards.size();
  assert(n >= 2);
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  bool all_equal = true;
  for (double r : rewards) {
    var += (r - mean) * (r - mean);
    all_equal = all_equal && r == rewards[0];
  }
  if (all_equal) return std::vector<double>(n, 0.0);
  const double std_dev = std::sqrt(var / static_cast<double>(n));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (rewards[i] - mean) / (std_dev + 1e-6);
  return out;
}

std::optional<double> intrinsic_grounded_gap(const std::vector<std::string>& answers,
                                             const std::optional<std::string>& gold) {
  if (!gold) return std::nullopt;
  const auto intr = intrinsic_rewards(answers);
  double intr_mean = 0.0, grounded_mean = 0.0;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    intr_mean += intr[i];
    grounded_mean += grounded_reward(answers[i], *gold);
  }
  const double n = static_cast<double>(answers.size());
  return intr_mean / n - grounded_mean / n;
}

}  // namespace gatelab
