#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gatelab/expr.hpp"
#include "gatelab/rng.hpp"

namespace gatelab {

// ---------------------------------------------------------------------------
// Proposer: a PCFG over the task grammar plus three scalar channels — a
// malformed-emission gate (emit the sampled program with one token deleted),
// a claim-fidelity gate (claim the true output vs. a near-miss distractor),
// and uniform input sampling. Every random draw is recorded in a trace whose
// exact log-probability is differentiable in the logits.

// Productions available in an expression slot, indexed per depth bucket.
enum ExprProduction : int {
  kProdLit = 0, kProdVarX, kProdVarY,
  kProdNeg, kProdAbs,
  kProdAdd, kProdSub, kProdMul, kProdDiv, kProdMod, kProdMax, kProdMin,
  kProdIte,
  kNumExprProductions,
};

inline constexpr int kNumCmpProductions = 5;  // GT, LT, EQ, GEQ, LEQ

struct ProposerParams {
  // Structure (not trained, but part of the distribution's identity).
  int max_depth = 4;
  std::int64_t literal_lo = -2, literal_hi = 2;
  std::int64_t input_lo = -10, input_hi = 10;

  // Trained logits. Row = depth bucket (0..max_depth). Structural masks:
  // only leaves at bucket max_depth, no ITE at bucket max_depth-1.
  Eigen::MatrixXd expr_logits;     // (max_depth+1) x kNumExprProductions
  Eigen::MatrixXd cmp_logits;      // (max_depth+1) x kNumCmpProductions
  Eigen::VectorXd literal_logits;  // literal_hi - literal_lo + 1
  double malformed_logit = -1.0;
  double claim_logit = 1.0;

  static ProposerParams make(int max_depth, std::int64_t literal_lo, std::int64_t literal_hi,
                             std::int64_t input_lo, std::int64_t input_hi,
                             double malformed_logit, double claim_logit);

  // Indices of productions legal at a bucket, in index order.
  std::vector<int> expr_mask(int bucket) const;

  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& v);
  ProposerParams zeros_like() const;
  void axpy(double a, const ProposerParams& g);  // *this += a * g
  bool all_finite() const;
};

struct ProposerDraw {
  std::uint8_t slot;    // 0 = expr production, 1 = comparison, 2 = literal
  std::uint8_t bucket;  // depth bucket of the slot
  std::uint16_t index;  // chosen entry
};

struct ProposerTrace {
  std::vector<ProposerDraw> draws;   // in sampling (DFS) order
  bool malformed = false;
  int deleted_token = 0;             // only meaningful when malformed
  int token_count = 0;
  std::int64_t x = 0, y = 0;
  bool claim_babbled = false;        // evaluation rejected; base was hallucinated
  bool claim_true = true;
  int distractor = 0;                // 0 -> "0", 1 -> base+1, 2 -> base-1
};

struct CandidateTask {
  std::string program_text;
  std::int64_t x = 0, y = 0;
  std::string claimed_output;
  std::optional<ProposerTrace> trace;
  double logprob = 0.0;  // at the sampling parameters
};

struct MissingTrace : std::runtime_error {
  MissingTrace() : std::runtime_error("candidate carries no sampling trace") {}
};

// Draw order: malformed gate, program tree (DFS; ITE draws its comparison
// before descending), token deletion if malformed, x, y, hallucinated claim
// base if the evaluation rejects, claim gate, distractor if the claim is
// unfaithful. Identical rng state reproduces the candidate bit for bit.
//
// The claim base is the tree's true evaluation at (x, y); when that rejects
// there is no truth to report and the base is a uniform guess in
// [kGuessLo, kGuessHi] — scattered, like any made-up answer.
CandidateTask proposer_sample(const ProposerParams& p, Rng& rng);

double proposer_trace_logprob(const ProposerParams& p, const ProposerTrace& t);
double proposer_logprob(const ProposerParams& p, const CandidateTask& c);  // MissingTrace

// grad += coeff * d logprob(t) / d params
void proposer_grad_logprob(const ProposerParams& p, const ProposerTrace& t,
                           double coeff, ProposerParams& grad);

// ---------------------------------------------------------------------------
// Solver: a mixture over answer strategies. EVAL walks the expression with a
// per-node corruption channel (each computed value is bumped by +-1 with
// probability sigmoid(noise_logit)); a rejected evaluation answers with a
// uniform guess. CONST(c) and COPY_X ignore the program. Unparseable
// questions mask EVAL out of the mixture.

inline constexpr std::array<std::int64_t, 3> kSolverConstants = {-1, 0, 1};
inline constexpr int kNumStrategies = 5;  // EVAL, CONST(-1), CONST(0), CONST(1), COPY_X
inline constexpr int kStrategyEval = 0;
inline constexpr int kStrategyCopyX = 4;
inline constexpr std::int64_t kGuessLo = -9, kGuessHi = 9;

struct SolverParams {
  Eigen::VectorXd strategy_logits;  // kNumStrategies
  double noise_logit = -3.2;

  static SolverParams make(double eval_logit, double noise_logit);

  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& v);
  SolverParams zeros_like() const;
  void axpy(double a, const SolverParams& g);
  bool all_finite() const;
};

struct SolverTrace {
  std::uint8_t strategy = 0;
  bool eval_available = true;  // false masks EVAL (unparseable question)
  int corrupt_count = 0;       // EVAL only: per-node corruption outcomes
  int clean_count = 0;
  bool guessed = false;        // EVAL hit a rejection and answered a guess
};

struct SolverSample {
  std::string answer;
  SolverTrace trace;
  double logprob = 0.0;
};

// question == nullptr means the task text never parsed; only CONST / COPY_X
// are available then.
SolverSample solver_sample(const SolverParams& s, const Expr* question,
                           std::int64_t x, std::int64_t y, Rng& rng);

double solver_trace_logprob(const SolverParams& s, const SolverTrace& t);
void solver_grad_logprob(const SolverParams& s, const SolverTrace& t,
                         double coeff, SolverParams& grad);

// ---------------------------------------------------------------------------
// One clipped-surrogate gradient-ascent step with a forward-KL anchor.
//
//   J = mean_i [ min(r_i A_i, clamp(r_i, 1-clip, 1+clip) A_i) - beta * k3_i ]
//   r_i  = exp(logprob(params, t_i) - logprob_old_i)
//   k3_i = exp(d_i) - d_i - 1,  d_i = logprob(ref, t_i) - logprob(params, t_i)
//
// k3 is the nonnegative low-variance forward-KL estimator; it vanishes iff
// the current parameters match the reference on the sampled traces.

struct UpdateConfig {
  double lr = 0.05;
  double clip = 0.2;
  double kl_beta = 0.01;
};

template <class Trace>
struct Episode {
  Trace trace;
  double advantage = 0.0;
  double logprob_old = 0.0;
};

struct NonFiniteGradient : std::runtime_error {
  explicit NonFiniteGradient(const std::string& what) : std::runtime_error(what) {}
};

double proposer_objective(const ProposerParams& p, const ProposerParams& ref,
                          const std::vector<Episode<ProposerTrace>>& eps,
                          const UpdateConfig& cfg);
ProposerParams proposer_gradient(const ProposerParams& p, const ProposerParams& ref,
                                 const std::vector<Episode<ProposerTrace>>& eps,
                                 const UpdateConfig& cfg);
ProposerParams policy_update(const ProposerParams& p,
                             const std::vector<Episode<ProposerTrace>>& eps,
                             const ProposerParams& ref, const UpdateConfig& cfg);

double solver_objective(const SolverParams& s, const SolverParams& ref,
                        const std::vector<Episode<SolverTrace>>& eps,
                        const UpdateConfig& cfg);
SolverParams solver_gradient(const SolverParams& s, const SolverParams& ref,
                             const std::vector<Episode<SolverTrace>>& eps,
                             const UpdateConfig& cfg);
SolverParams policy_update(const SolverParams& s,
                           const std::vector<Episode<SolverTrace>>& eps,
                           const SolverParams& ref, const UpdateConfig& cfg);

// Flat key-value serialization for both parameter sets; doubles round-trip
// bit-exactly. Lines look like "prefix.expr_logits.2 = v v v ...". Several
// sections share one file via distinct prefixes.
using KvMap = std::map<std::string, std::string, std::less<>>;
KvMap read_kv(std::istream& is);
void save_params(std::ostream& os, const std::string& prefix, const ProposerParams& p);
void save_params(std::ostream& os, const std::string& prefix, const SolverParams& s);
ProposerParams proposer_from_kv(const KvMap& kv, const std::string& prefix);
SolverParams solver_from_kv(const KvMap& kv, const std::string& prefix);

// Numerically stable helpers shared by sampling and scoring.
double sigmoid(double z);
double log_sigmoid(double z);

}  // namespace gatelab
