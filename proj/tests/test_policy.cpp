#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "gatelab/policy.hpp"

using namespace gatelab;

namespace {

// Central finite differences over the flattened parameter vector.
template <class Params, class Objective>
void check_gradient(const Params& grad, Params at, Objective obj, double h, double tol) {
  const Eigen::VectorXd g = grad.flatten();
  Eigen::VectorXd v = at.flatten();
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double keep = v[k];
    v[k] = keep + h;
    at.unflatten(v);
    const double up = obj(at);
    v[k] = keep - h;
    at.unflatten(v);
    const double down = obj(at);
    v[k] = keep;
    at.unflatten(v);
    const double fd = (up - down) / (2.0 * h);
    CHECK(std::abs(g[k] - fd) <= tol * std::max(1.0, std::abs(g[k])));
  }
}

ProposerParams perturbed_proposer(Rng& rng, double scale) {
  ProposerParams p = ProposerParams::make(3, -2, 2, -5, 5, -1.0, 1.0);
  Eigen::VectorXd v = p.flatten();
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += scale * (rng.uniform01() - 0.5);
  p.unflatten(v);
  return p;
}

SolverParams perturbed_solver(Rng& rng, double scale) {
  SolverParams s = SolverParams::make(1.0, -1.0);
  Eigen::VectorXd v = s.flatten();
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += scale * (rng.uniform01() - 0.5);
  s.unflatten(v);
  return s;
}

}  // namespace

TEST_CASE("structural masks shape the grammar") {
  const ProposerParams p = ProposerParams::make(4, -2, 2, -10, 10, -1.0, 1.0);
  CHECK(p.expr_logits.rows() == 5);
  CHECK(p.expr_logits.cols() == kNumExprProductions);
  CHECK(p.literal_logits.size() == 5);

  // Only leaves at the deepest bucket.
  CHECK(p.expr_mask(4) == std::vector<int>{kProdLit, kProdVarX, kProdVarY});
  // The conditional needs two levels below it.
  auto m3 = p.expr_mask(3);
  CHECK(m3.size() == kNumExprProductions - 1);
  CHECK(std::find(m3.begin(), m3.end(), kProdIte) == m3.end());
  CHECK(p.expr_mask(0).size() == kNumExprProductions);
}

TEST_CASE("proposer sampling is deterministic and self-scoring") {
  const ProposerParams p = ProposerParams::make(4, -2, 2, -10, 10, -1.0, 1.0);
  Rng a(77), b(77);
  for (int i = 0; i < 50; ++i) {
    const CandidateTask ca = proposer_sample(p, a);
    const CandidateTask cb = proposer_sample(p, b);
    CHECK(ca.program_text == cb.program_text);
    CHECK(ca.x == cb.x);
    CHECK(ca.y == cb.y);
    CHECK(ca.claimed_output == cb.claimed_output);
    CHECK(ca.logprob == cb.logprob);
    // The stored score is the trace's log-probability at the sampling params.
    CHECK(proposer_logprob(p, ca) == ca.logprob);
    CHECK(ca.logprob <= 0.0);
  }
  CandidateTask no_trace;
  CHECK_THROWS_AS(proposer_logprob(p, no_trace), MissingTrace);
}

TEST_CASE("root production frequencies follow the softmax") {
  ProposerParams p = ProposerParams::make(2, -2, 2, -3, 3, -20.0, 20.0);
  p.expr_logits(0, kProdAdd) = 1.0;
  const int n = 20000;
  std::vector<int> counts(kNumExprProductions, 0);
  Rng rng(13);
  for (int i = 0; i < n; ++i) {
    const CandidateTask c = proposer_sample(p, rng);
    const ProposerDraw& root = c.trace->draws.front();
    CHECK(root.slot == 0);
    CHECK(root.bucket == 0);
    ++counts[root.index];
  }
  const double z = 12.0 + std::exp(1.0);
  for (int k = 0; k < kNumExprProductions; ++k) {
    const double expect = (k == kProdAdd ? std::exp(1.0) : 1.0) / z;
    const double got = static_cast<double>(counts[static_cast<std::size_t>(k)]) / n;
    const double se = std::sqrt(expect * (1.0 - expect) / n);
    CHECK(std::abs(got - expect) <= 4.0 * se);
  }
}

TEST_CASE("the malformed-emission gate fires at its sigmoid rate") {
  const ProposerParams p = ProposerParams::make(2, -2, 2, -3, 3, -1.0, 20.0);
  const int n = 20000;
  int malformed = 0;
  Rng rng(21);
  for (int i = 0; i < n; ++i) {
    const CandidateTask c = proposer_sample(p, rng);
    if (c.trace->malformed) {
      ++malformed;
      // One surface token is gone; the lexer-level texts differ.
      CHECK(c.trace->token_count > 0);
      CHECK(c.trace->deleted_token < c.trace->token_count);
    }
  }
  const double expect = sigmoid(-1.0);
  const double got = static_cast<double>(malformed) / n;
  const double se = std::sqrt(expect * (1.0 - expect) / n);
  CHECK(std::abs(got - expect) <= 4.0 * se);
}

TEST_CASE("solver strategy frequencies follow the masked softmax") {
  const SolverParams s = SolverParams::make(1.4, -0.9);
  const auto q = parse("ADD(x, y)");
  const int n = 20000;
  std::vector<int> counts(kNumStrategies, 0);
  Rng rng(3);
  for (int i = 0; i < n; ++i) {
    const SolverSample out = solver_sample(s, &*q, 1, 2, rng);
    ++counts[out.trace.strategy];
    CHECK(out.trace.eval_available);
    CHECK(solver_trace_logprob(s, out.trace) == out.logprob);
  }
  const double z = std::exp(1.4) + 4.0;
  for (int k = 0; k < kNumStrategies; ++k) {
    const double expect = (k == kStrategyEval ? std::exp(1.4) : 1.0) / z;
    const double got = static_cast<double>(counts[static_cast<std::size_t>(k)]) / n;
    const double se = std::sqrt(expect * (1.0 - expect) / n);
    CHECK(std::abs(got - expect) <= 4.0 * se);
  }
}

TEST_CASE("an unparseable question masks the evaluation strategy") {
  const SolverParams s = SolverParams::make(5.0, -1.0);  // eval-heavy
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    const SolverSample out = solver_sample(s, nullptr, 3, 4, rng);
    CHECK_FALSE(out.trace.eval_available);
    CHECK(out.trace.strategy != kStrategyEval);
    // Remaining strategies answer from their own rule, never the program.
    if (out.trace.strategy == kStrategyCopyX) CHECK(out.answer == "3");
  }
}

TEST_CASE("noiseless evaluation answers exactly; corruption rate follows the channel") {
  const auto q = parse("ADD(MUL(x, x), y)");
  SolverParams exact = SolverParams::make(40.0, -40.0);  // always EVAL, never corrupt
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    const SolverSample out = solver_sample(exact, &*q, 5, -3, rng);
    CHECK(out.answer == "22");
    CHECK(out.trace.corrupt_count == 0);
  }

  SolverParams noisy = SolverParams::make(40.0, 0.0);  // sigma = 1/2 per node
  int corrupt = 0, total = 0;
  for (int i = 0; i < 5000; ++i) {
    const SolverSample out = solver_sample(noisy, &*q, 5, -3, rng);
    corrupt += out.trace.corrupt_count;
    total += out.trace.corrupt_count + out.trace.clean_count;
  }
  const double got = static_cast<double>(corrupt) / total;
  const double se = std::sqrt(0.25 / total);
  CHECK(std::abs(got - 0.5) <= 4.0 * se);
}

TEST_CASE("a rejecting evaluation walk answers with a scattered guess") {
  const auto q = parse("DIV(1, x)");
  SolverParams s = SolverParams::make(40.0, -40.0);
  Rng rng(23);
  int distinct[19] = {};
  for (int i = 0; i < 400; ++i) {
    const SolverSample out = solver_sample(s, &*q, 0, 0, rng);  // divisor is zero
    CHECK(out.trace.guessed);
    const long v = std::stol(out.answer);
    CHECK(v >= kGuessLo);
    CHECK(v <= kGuessHi);
    ++distinct[v - kGuessLo];
  }
  int support = 0;
  for (int c : distinct) support += c > 0;
  CHECK(support > 10);  // guesses scatter instead of clustering
}

TEST_CASE("parameter vectors flatten and unflatten losslessly") {
  Rng rng(41);
  const ProposerParams p = perturbed_proposer(rng, 2.0);
  ProposerParams q = p.zeros_like();
  q.unflatten(p.flatten());
  CHECK(q.flatten() == p.flatten());

  const SolverParams s = perturbed_solver(rng, 2.0);
  SolverParams t = s.zeros_like();
  t.unflatten(s.flatten());
  CHECK(t.flatten() == s.flatten());
}

TEST_CASE("proposer analytic gradients match finite differences") {
  Rng rng(51);
  for (int trial = 0; trial < 3; ++trial) {
    const ProposerParams p0 = perturbed_proposer(rng, 0.3);
    std::vector<Episode<ProposerTrace>> eps;
    for (int i = 0; i < 6; ++i) {
      const CandidateTask c = proposer_sample(p0, rng);
      eps.push_back({*c.trace, 4.0 * (rng.uniform01() - 0.5), c.logprob});
    }
    ProposerParams p = p0;
    {
      Eigen::VectorXd v = p.flatten();
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 0.04 * (rng.uniform01() - 0.5);
      p.unflatten(v);
    }
    const ProposerParams ref = perturbed_proposer(rng, 0.3);
    const UpdateConfig cfg{0.05, 0.5, 0.01};
    const ProposerParams g = proposer_gradient(p, ref, eps, cfg);
    check_gradient(g, p,
                   [&](const ProposerParams& q) { return proposer_objective(q, ref, eps, cfg); },
                   1e-6, 1e-5);
  }
}

TEST_CASE("solver analytic gradients match finite differences") {
  Rng rng(52);
  const auto q = parse("ADD(MUL(x, y), 2)");
  for (int trial = 0; trial < 3; ++trial) {
    const SolverParams s0 = perturbed_solver(rng, 0.3);
    std::vector<Episode<SolverTrace>> eps;
    for (int i = 0; i < 8; ++i) {
      const SolverSample out = solver_sample(s0, &*q, 2, -1, rng);
      eps.push_back({out.trace, 4.0 * (rng.uniform01() - 0.5), out.logprob});
    }
    SolverParams s = s0;
    {
      Eigen::VectorXd v = s.flatten();
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 0.04 * (rng.uniform01() - 0.5);
      s.unflatten(v);
    }
    const SolverParams ref = perturbed_solver(rng, 0.3);
    const UpdateConfig cfg{0.05, 0.5, 0.01};
    const SolverParams g = solver_gradient(s, ref, eps, cfg);
    check_gradient(g, s,
                   [&](const SolverParams& t) { return solver_objective(t, ref, eps, cfg); },
                   1e-6, 1e-5);
  }
}

TEST_CASE("at the anchor with unit ratios the objective reduces to the mean advantage") {
  Rng rng(61);
  const SolverParams s = perturbed_solver(rng, 0.2);
  const auto q = parse("SUB(x, y)");
  std::vector<Episode<SolverTrace>> eps;
  double mean_adv = 0.0;
  for (int i = 0; i < 10; ++i) {
    const SolverSample out = solver_sample(s, &*q, 4, 1, rng);
    const double adv = 2.0 * (rng.uniform01() - 0.5);
    eps.push_back({out.trace, adv, out.logprob});
    mean_adv += adv;
  }
  mean_adv /= 10.0;
  const UpdateConfig cfg{0.05, 0.2, 0.01};
  // params == ref and logprob_old == current logprob: ratio 1, zero anchor pull.
  CHECK(solver_objective(s, s, eps, cfg) == doctest::Approx(mean_adv).epsilon(1e-12));

  // Pure anchor divergence is a penalty: zero advantages, ref far away.
  // (The shift must be asymmetric — adding a constant to every logit would
  // leave the softmax unchanged.)
  for (auto& e : eps) e.advantage = 0.0;
  SolverParams far = s;
  far.strategy_logits[0] += 1.5;
  CHECK(solver_objective(s, far, eps, cfg) < 0.0);
  CHECK(solver_objective(s, s, eps, cfg) == doctest::Approx(0.0));
}

TEST_CASE("an update moves probability toward positive advantages") {
  SolverParams s = SolverParams::make(0.0, -1.0);
  const auto q = parse("ADD(x, 1)");
  Rng rng(71);
  std::vector<Episode<SolverTrace>> eps;
  while (eps.size() < 30) {
    const SolverSample out = solver_sample(s, &*q, 1, 1, rng);
    if (out.trace.strategy == 1)
      eps.push_back({out.trace, 1.0, out.logprob});
    else if (out.trace.strategy == 2)
      eps.push_back({out.trace, -1.0, out.logprob});
  }
  const SolverParams next = policy_update(s, eps, s, UpdateConfig{0.05, 0.2, 0.01});
  CHECK(next.strategy_logits[1] > s.strategy_logits[1]);
  CHECK(next.strategy_logits[2] < s.strategy_logits[2]);
}

TEST_CASE("non-finite gradients abort the update loudly") {
  SolverParams s = SolverParams::make(0.0, -1.0);
  const auto q = parse("ADD(x, 1)");
  Rng rng(81);
  const SolverSample out = solver_sample(s, &*q, 1, 1, rng);
  std::vector<Episode<SolverTrace>> eps(2, Episode<SolverTrace>{out.trace, 1.0, out.logprob});
  eps[0].advantage = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(policy_update(s, eps, s, UpdateConfig{}), NonFiniteGradient);
}

TEST_CASE("parameters serialize to text and back bit-exactly") {
  Rng rng(91);
  const ProposerParams p = perturbed_proposer(rng, 1.7);
  const SolverParams s = perturbed_solver(rng, 1.7);
  std::ostringstream os;
  save_params(os, "prop", p);
  save_params(os, "solv", s);

  std::istringstream is(os.str());
  const KvMap kv = read_kv(is);
  const ProposerParams p2 = proposer_from_kv(kv, "prop");
  const SolverParams s2 = solver_from_kv(kv, "solv");
  CHECK(p2.flatten() == p.flatten());
  CHECK(s2.flatten() == s.flatten());
  CHECK(p2.max_depth == p.max_depth);
  CHECK(p2.literal_lo == p.literal_lo);
  CHECK(p2.input_hi == p.input_hi);
}

TEST_CASE("stable sigmoid helpers") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(sigmoid(700.0) == doctest::Approx(1.0));
  CHECK(sigmoid(-700.0) == doctest::Approx(0.0));
  for (double z : {-30.0, -2.5, 0.0, 1.3, 25.0}) {
    CHECK(std::exp(log_sigmoid(z)) == doctest::Approx(sigmoid(z)).epsilon(1e-12));
    CHECK(sigmoid(z) + sigmoid(-z) == doctest::Approx(1.0).epsilon(1e-12));
  }
}
