#include "gatelab/policy.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace gatelab {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

namespace {

// --- masked softmax ---------------------------------------------------------

double masked_logsumexp(const Eigen::VectorXd& z, const std::vector<int>& mask) {
  double m = z[mask[0]];
  for (int k : mask) m = std::max(m, z[k]);
  double s = 0.0;
  for (int k : mask) s += std::exp(z[k] - m);
  return m + std::log(s);
}

double masked_log_softmax_at(const Eigen::VectorXd& z, const std::vector<int>& mask, int idx) {
  return z[idx] - masked_logsumexp(z, mask);
}

int masked_categorical(const Eigen::VectorXd& z, const std::vector<int>& mask, Rng& rng) {
  const double lse = masked_logsumexp(z, mask);
  std::vector<double> probs;
  probs.reserve(mask.size());
  for (int k : mask) probs.push_back(std::exp(z[k] - lse));
  return mask[rng.categorical(probs.data(), probs.size())];
}

void masked_softmax_grad(const Eigen::VectorXd& z, const std::vector<int>& mask, int idx,
                         double coeff, Eigen::Ref<Eigen::VectorXd> grad) {
  const double lse = masked_logsumexp(z, mask);
  for (int k : mask)
    grad[k] += coeff * ((k == idx ? 1.0 : 0.0) - std::exp(z[k] - lse));
}

std::vector<int> full_mask(int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = i;
  return m;
}

// --- number formatting (bit-exact round trips) ------------------------------

std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc()) throw std::runtime_error("bad double: " + std::string(s));
  return v;
}

std::vector<double> parse_doubles(std::string_view s) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.push_back(parse_double(s.substr(i, j - i)));
    i = j;
  }
  return out;
}

// --- surface tokens (for malformed emission) --------------------------------

std::vector<std::string> surface_tokens(std::string_view text) {
  std::vector<std::string> toks;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
    if (c == '(' || c == ')' || c == ',') {
      toks.emplace_back(1, c);
      ++i;
      continue;
    }
    std::size_t j = i;
    if (std::isalpha(static_cast<unsigned char>(c))) {
      while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
    } else {  // signed integer
      if (text[j] == '-') ++j;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    }
    toks.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return toks;
}

constexpr std::array<Op, kNumExprProductions> kProductionOp = {
    Op::Lit, Op::Var, Op::Var, Op::Neg, Op::Abs, Op::Add, Op::Sub,
    Op::Mul, Op::Div, Op::Mod, Op::Max, Op::Min, Op::Ite,
};
constexpr std::array<Op, kNumCmpProductions> kCmpOp = {Op::Gt, Op::Lt, Op::Eq, Op::Geq, Op::Leq};

}  // namespace

// ---------------------------------------------------------------------------
// ProposerParams

ProposerParams ProposerParams::make(int max_depth, std::int64_t literal_lo,
                                    std::int64_t literal_hi, std::int64_t input_lo,
                                    std::int64_t input_hi, double malformed_logit,
                                    double claim_logit) {
  assert(max_depth >= 2);  // ITE needs two levels below the root
  assert(literal_lo <= literal_hi && input_lo <= input_hi);
  ProposerParams p;
  p.max_depth = max_depth;
  p.literal_lo = literal_lo;
  p.literal_hi = literal_hi;
  p.input_lo = input_lo;
  p.input_hi = input_hi;
  p.expr_logits = Eigen::MatrixXd::Zero(max_depth + 1, kNumExprProductions);
  p.cmp_logits = Eigen::MatrixXd::Zero(max_depth + 1, kNumCmpProductions);
  p.literal_logits = Eigen::VectorXd::Zero(literal_hi - literal_lo + 1);
  p.malformed_logit = malformed_logit;
  p.claim_logit = claim_logit;
  return p;
}

std::vector<int> ProposerParams::expr_mask(int bucket) const {
  assert(bucket >= 0 && bucket <= max_depth);
  if (bucket == max_depth) return {kProdLit, kProdVarX, kProdVarY};
  std::vector<int> m = full_mask(kNumExprProductions);
  if (bucket == max_depth - 1) m.pop_back();  // kProdIte is last
  return m;
}

Eigen::VectorXd ProposerParams::flatten() const {
  const Eigen::Index n = expr_logits.size() + cmp_logits.size() + literal_logits.size() + 2;
  Eigen::VectorXd v(n);
  Eigen::Index at = 0;
  for (Eigen::Index r = 0; r < expr_logits.rows(); ++r)
    for (Eigen::Index c = 0; c < expr_logits.cols(); ++c) v[at++] = expr_logits(r, c);
  for (Eigen::Index r = 0; r < cmp_logits.rows(); ++r)
    for (Eigen::Index c = 0; c < cmp_logits.cols(); ++c) v[at++] = cmp_logits(r, c);
  for (Eigen::Index i = 0; i < literal_logits.size(); ++i) v[at++] = literal_logits[i];
  v[at++] = malformed_logit;
  v[at++] = claim_logit;
  return v;
}

void ProposerParams::unflatten(const Eigen::VectorXd& v) {
  Eigen::Index at = 0;
  for (Eigen::Index r = 0; r < expr_logits.rows(); ++r)
    for (Eigen::Index c = 0; c < expr_logits.cols(); ++c) expr_logits(r, c) = v[at++];
  for (Eigen::Index r = 0; r < cmp_logits.rows(); ++r)
    for (Eigen::Index c = 0; c < cmp_logits.cols(); ++c) cmp_logits(r, c) = v[at++];
  for (Eigen::Index i = 0; i < literal_logits.size(); ++i) literal_logits[i] = v[at++];
  malformed_logit = v[at++];
  claim_logit = v[at++];
  assert(at == v.size());
}

ProposerParams ProposerParams::zeros_like() const {
  ProposerParams g = *this;
  g.expr_logits.setZero();
  g.cmp_logits.setZero();
  g.literal_logits.setZero();
  g.malformed_logit = 0.0;
  g.claim_logit = 0.0;
  return g;
}

void ProposerParams::axpy(double a, const ProposerParams& g) {
  expr_logits += a * g.expr_logits;
  cmp_logits += a * g.cmp_logits;
  literal_logits += a * g.literal_logits;
  malformed_logit += a * g.malformed_logit;
  claim_logit += a * g.claim_logit;
}

bool ProposerParams::all_finite() const {
  return expr_logits.allFinite() && cmp_logits.allFinite() && literal_logits.allFinite() &&
         std::isfinite(malformed_logit) && std::isfinite(claim_logit);
}

// ---------------------------------------------------------------------------
// Proposer sampling

namespace {

Expr sample_tree(const ProposerParams& p, Rng& rng, int bucket, ProposerTrace& t) {
  const auto mask = p.expr_mask(bucket);
  const int prod = masked_categorical(p.expr_logits.row(bucket).transpose(), mask, rng);
  t.draws.push_back({0, static_cast<std::uint8_t>(bucket), static_cast<std::uint16_t>(prod)});
  switch (prod) {
    case kProdLit: {
      const auto lit_mask = full_mask(static_cast<int>(p.literal_logits.size()));
      const int li = masked_categorical(p.literal_logits, lit_mask, rng);
      t.draws.push_back({2, static_cast<std::uint8_t>(bucket), static_cast<std::uint16_t>(li)});
      return Expr::lit(Value(p.literal_lo + li));
    }
    case kProdVarX: return Expr::variable('x');
    case kProdVarY: return Expr::variable('y');
    case kProdNeg: case kProdAbs:
      return Expr::unary(kProductionOp[static_cast<std::size_t>(prod)],
                         sample_tree(p, rng, bucket + 1, t));
    case kProdIte: {
      const int cmp_bucket = bucket + 1;
      const auto cmp_mask = full_mask(kNumCmpProductions);
      const int ci =
          masked_categorical(p.cmp_logits.row(cmp_bucket).transpose(), cmp_mask, rng);
      t.draws.push_back(
          {1, static_cast<std::uint8_t>(cmp_bucket), static_cast<std::uint16_t>(ci)});
      Expr a = sample_tree(p, rng, bucket + 2, t);
      Expr b = sample_tree(p, rng, bucket + 2, t);
      Expr cond = Expr::compare(kCmpOp[static_cast<std::size_t>(ci)], std::move(a), std::move(b));
      Expr then_branch = sample_tree(p, rng, bucket + 1, t);
      Expr else_branch = sample_tree(p, rng, bucket + 1, t);
      return Expr::ite(std::move(cond), std::move(then_branch), std::move(else_branch));
    }
    default: {
      Expr a = sample_tree(p, rng, bucket + 1, t);
      Expr b = sample_tree(p, rng, bucket + 1, t);
      return Expr::binary(kProductionOp[static_cast<std::size_t>(prod)], std::move(a),
                          std::move(b));
    }
  }
}

}  // namespace

CandidateTask proposer_sample(const ProposerParams& p, Rng& rng) {
  ProposerTrace t;
  t.malformed = rng.bernoulli(sigmoid(p.malformed_logit));
  Expr tree = sample_tree(p, rng, 0, t);
  std::string text = render(tree);
  if (t.malformed) {
    const auto toks = surface_tokens(text);
    t.token_count = static_cast<int>(toks.size());
    t.deleted_token =
        static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(toks.size()) - 1));
    std::string corrupted;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (static_cast<int>(i) == t.deleted_token) continue;
      if (!corrupted.empty()) corrupted += ' ';
      corrupted += toks[i];
    }
    text = std::move(corrupted);
  }
  t.x = rng.uniform_int(p.input_lo, p.input_hi);
  t.y = rng.uniform_int(p.input_lo, p.input_hi);

  // The claim channel reports the true evaluation or a near-miss distractor.
  // A rejected evaluation has no truth to report; the base is hallucinated.
  Value base;
  if (auto v = evaluate(tree, t.x, t.y)) {
    base = *v;
  } else {
    t.claim_babbled = true;
    base = rng.uniform_int(kGuessLo, kGuessHi);
  }
  t.claim_true = rng.bernoulli(sigmoid(p.claim_logit));
  Value claimed = base;
  if (!t.claim_true) {
    t.distractor = static_cast<int>(rng.uniform_int(0, 2));
    claimed = t.distractor == 0 ? Value(0) : (t.distractor == 1 ? Value(base + 1) : Value(base - 1));
  }

  CandidateTask c;
  c.program_text = std::move(text);
  c.x = t.x;
  c.y = t.y;
  c.claimed_output = claimed.str();
  c.trace = std::move(t);
  c.logprob = proposer_trace_logprob(p, *c.trace);
  return c;
}

double proposer_trace_logprob(const ProposerParams& p, const ProposerTrace& t) {
  double lp = t.malformed ? log_sigmoid(p.malformed_logit) : log_sigmoid(-p.malformed_logit);
  for (const ProposerDraw& d : t.draws) {
    switch (d.slot) {
      case 0:
        lp += masked_log_softmax_at(p.expr_logits.row(d.bucket).transpose(),
                                    p.expr_mask(d.bucket), d.index);
        break;
      case 1:
        lp += masked_log_softmax_at(p.cmp_logits.row(d.bucket).transpose(),
                                    full_mask(kNumCmpProductions), d.index);
        break;
      default:
        lp += masked_log_softmax_at(p.literal_logits,
                                    full_mask(static_cast<int>(p.literal_logits.size())),
                                    d.index);
        break;
    }
  }
  if (t.malformed) lp -= std::log(static_cast<double>(t.token_count));
  lp -= 2.0 * std::log(static_cast<double>(p.input_hi - p.input_lo + 1));
  if (t.claim_babbled) lp -= std::log(static_cast<double>(kGuessHi - kGuessLo + 1));
  lp += t.claim_true ? log_sigmoid(p.claim_logit) : log_sigmoid(-p.claim_logit);
  if (!t.claim_true) lp -= std::log(3.0);
  return lp;
}

double proposer_logprob(const ProposerParams& p, const CandidateTask& c) {
  if (!c.trace) throw MissingTrace();
  return proposer_trace_logprob(p, *c.trace);
}

void proposer_grad_logprob(const ProposerParams& p, const ProposerTrace& t, double coeff,
                           ProposerParams& grad) {
  grad.malformed_logit += coeff * ((t.malformed ? 1.0 : 0.0) - sigmoid(p.malformed_logit));
  grad.claim_logit += coeff * ((t.claim_true ? 1.0 : 0.0) - sigmoid(p.claim_logit));
  for (const ProposerDraw& d : t.draws) {
    switch (d.slot) {
      case 0: {
        Eigen::VectorXd row = grad.expr_logits.row(d.bucket).transpose();
        masked_softmax_grad(p.expr_logits.row(d.bucket).transpose(), p.expr_mask(d.bucket),
                            d.index, coeff, row);
        grad.expr_logits.row(d.bucket) = row.transpose();
        break;
      }
      case 1: {
        Eigen::VectorXd row = grad.cmp_logits.row(d.bucket).transpose();
        masked_softmax_grad(p.cmp_logits.row(d.bucket).transpose(),
                            full_mask(kNumCmpProductions), d.index, coeff, row);
        grad.cmp_logits.row(d.bucket) = row.transpose();
        break;
      }
      default:
        masked_softmax_grad(p.literal_logits,
                            full_mask(static_cast<int>(p.literal_logits.size())), d.index,
                            coeff, grad.literal_logits);
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// SolverParams

SolverParams SolverParams::make(double eval_logit, double noise_logit) {
  SolverParams s;
  s.strategy_logits = Eigen::VectorXd::Zero(kNumStrategies);
  s.strategy_logits[kStrategyEval] = eval_logit;
  s.noise_logit = noise_logit;
  return s;
}

Eigen::VectorXd SolverParams::flatten() const {
  Eigen::VectorXd v(kNumStrategies + 1);
  v.head(kNumStrategies) = strategy_logits;
  v[kNumStrategies] = noise_logit;
  return v;
}

void SolverParams::unflatten(const Eigen::VectorXd& v) {
  strategy_logits = v.head(kNumStrategies);
  noise_logit = v[kNumStrategies];
}

SolverParams SolverParams::zeros_like() const {
  SolverParams g = *this;
  g.strategy_logits.setZero();
  g.noise_logit = 0.0;
  return g;
}

void SolverParams::axpy(double a, const SolverParams& g) {
  strategy_logits += a * g.strategy_logits;
  noise_logit += a * g.noise_logit;
}

bool SolverParams::all_finite() const {
  return strategy_logits.allFinite() && std::isfinite(noise_logit);
}

namespace {

std::vector<int> strategy_mask(bool eval_available) {
  if (eval_available) return full_mask(kNumStrategies);
  return {1, 2, 3, 4};
}

}  // namespace

SolverSample solver_sample(const SolverParams& s, const Expr* question, std::int64_t x,
                           std::int64_t y, Rng& rng) {
  SolverTrace t;
  t.eval_available = question != nullptr;
  const auto mask = strategy_mask(t.eval_available);
  t.strategy =
      static_cast<std::uint8_t>(masked_categorical(s.strategy_logits, mask, rng));

  std::string answer;
  if (t.strategy == kStrategyEval) {
    const double sigma = sigmoid(s.noise_logit);
    auto res = detail::eval_tapped(*question, Value(x), Value(y), [&](Value v) {
      if (rng.bernoulli(sigma)) {
        ++t.corrupt_count;
        v += rng.bernoulli(0.5) ? 1 : -1;
      } else {
        ++t.clean_count;
      }
      return v;
    });
    if (res) {
      answer = res->str();
    } else {
      // A rejected walk leaves nothing to report; the solver babbles. This is
      // what keeps broken tasks from forming an agreement cluster.
      t.guessed = true;
      answer = std::to_string(rng.uniform_int(kGuessLo, kGuessHi));
    }
  } else if (t.strategy == kStrategyCopyX) {
    answer = std::to_string(x);
  } else {
    answer = std::to_string(kSolverConstants[static_cast<std::size_t>(t.strategy - 1)]);
  }
  SolverSample out;
  out.answer = std::move(answer);
  out.trace = t;
  out.logprob = solver_trace_logprob(s, t);
  return out;
}

double solver_trace_logprob(const SolverParams& s, const SolverTrace& t) {
  double lp = masked_log_softmax_at(s.strategy_logits, strategy_mask(t.eval_available),
                                    t.strategy);
  if (t.strategy == kStrategyEval) {
    lp += t.corrupt_count * (log_sigmoid(s.noise_logit) + std::log(0.5));
    lp += t.clean_count * log_sigmoid(-s.noise_logit);
    if (t.guessed) lp -= std::log(static_cast<double>(kGuessHi - kGuessLo + 1));
  }
  return lp;
}

void solver_grad_logprob(const SolverParams& s, const SolverTrace& t, double coeff,
                         SolverParams& grad) {
  masked_softmax_grad(s.strategy_logits, strategy_mask(t.eval_available), t.strategy, coeff,
                      grad.strategy_logits);
  if (t.strategy == kStrategyEval) {
    const double sigma = sigmoid(s.noise_logit);
    grad.noise_logit += coeff * (t.corrupt_count * (1.0 - sigma) - t.clean_count * sigma);
  }
}

// ---------------------------------------------------------------------------
// Clipped update

namespace {

template <class Params, class Trace, class LogProb, class GradAccum>
double objective_impl(const Params& p, const Params& ref,
                      const std::vector<Episode<Trace>>& eps, const UpdateConfig& cfg,
                      LogProb logprob, GradAccum) {
  if (eps.empty()) return 0.0;
  double j = 0.0;
  for (const auto& e : eps) {
    const double lp = logprob(p, e.trace);
    const double rho = std::exp(lp - e.logprob_old);
    const double unclipped = rho * e.advantage;
    const double clipped = std::clamp(rho, 1.0 - cfg.clip, 1.0 + cfg.clip) * e.advantage;
    const double d = logprob(ref, e.trace) - lp;
    const double k3 = std::exp(d) - d - 1.0;
    j += std::min(unclipped, clipped) - cfg.kl_beta * k3;
  }
  return j / static_cast<double>(eps.size());
}

template <class Params, class Trace, class LogProb, class GradAccum>
Params gradient_impl(const Params& p, const Params& ref,
                     const std::vector<Episode<Trace>>& eps, const UpdateConfig& cfg,
                     LogProb logprob, GradAccum grad_accum) {
  Params g = p.zeros_like();
  if (eps.empty()) return g;
  const double inv_m = 1.0 / static_cast<double>(eps.size());
  for (const auto& e : eps) {
    const double lp = logprob(p, e.trace);
    const double rho = std::exp(lp - e.logprob_old);
    const double unclipped = rho * e.advantage;
    const double clipped = std::clamp(rho, 1.0 - cfg.clip, 1.0 + cfg.clip) * e.advantage;
    // The surrogate's slope in logprob: rho*A on the unclipped branch, zero
    // once the clip is active (ties resolve to the unclipped branch).
    const double pg = unclipped <= clipped ? rho * e.advantage : 0.0;
    const double d = logprob(ref, e.trace) - lp;
    const double kl = cfg.kl_beta * (std::exp(d) - 1.0);
    grad_accum(p, e.trace, (pg + kl) * inv_m, g);
  }
  return g;
}

template <class Params, class Trace, class LogProb, class GradAccum>
Params update_impl(const Params& p, const std::vector<Episode<Trace>>& eps, const Params& ref,
                   const UpdateConfig& cfg, LogProb logprob, GradAccum grad_accum) {
  Params g = gradient_impl(p, ref, eps, cfg, logprob, grad_accum);
  if (!g.all_finite()) {
    double worst = 0.0;
    for (const auto& e : eps) worst = std::max(worst, std::abs(e.advantage));
    throw NonFiniteGradient("non-finite policy gradient (episodes=" +
                            std::to_string(eps.size()) +
                            ", max |advantage|=" + std::to_string(worst) + ")");
  }
  Params out = p;
  out.axpy(cfg.lr, g);
  return out;
}

const auto kProposerLp = [](const ProposerParams& p, const ProposerTrace& t) {
  return proposer_trace_logprob(p, t);
};
const auto kProposerGrad = [](const ProposerParams& p, const ProposerTrace& t, double c,
                              ProposerParams& g) { proposer_grad_logprob(p, t, c, g); };
const auto kSolverLp = [](const SolverParams& s, const SolverTrace& t) {
  return solver_trace_logprob(s, t);
};
const auto kSolverGrad = [](const SolverParams& s, const SolverTrace& t, double c,
                            SolverParams& g) { solver_grad_logprob(s, t, c, g); };

}  // namespace

double proposer_objective(const ProposerParams& p, const ProposerParams& ref,
                          const std::vector<Episode<ProposerTrace>>& eps,
                          const UpdateConfig& cfg) {
  return objective_impl(p, ref, eps, cfg, kProposerLp, kProposerGrad);
}

ProposerParams proposer_gradient(const ProposerParams& p, const ProposerParams& ref,
                                 const std::vector<Episode<ProposerTrace>>& eps,
                                 const UpdateConfig& cfg) {
  return gradient_impl(p, ref, eps, cfg, kProposerLp, kProposerGrad);
}

ProposerParams policy_update(const ProposerParams& p,
                             const std::vector<Episode<ProposerTrace>>& eps,
                             const ProposerParams& ref, const UpdateConfig& cfg) {
  return update_impl(p, eps, ref, cfg, kProposerLp, kProposerGrad);
}

double solver_objective(const SolverParams& s, const SolverParams& ref,
                        const std::vector<Episode<SolverTrace>>& eps, const UpdateConfig& cfg) {
  return objective_impl(s, ref, eps, cfg, kSolverLp, kSolverGrad);
}

SolverParams solver_gradient(const SolverParams& s, const SolverParams& ref,
                             const std::vector<Episode<SolverTrace>>& eps,
                             const UpdateConfig& cfg) {
  return gradient_impl(s, ref, eps, cfg, kSolverLp, kSolverGrad);
}

SolverParams policy_update(const SolverParams& s, const std::vector<Episode<SolverTrace>>& eps,
                           const SolverParams& ref, const UpdateConfig& cfg) {
  return update_impl(s, eps, ref, cfg, kSolverLp, kSolverGrad);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string row_values(const Eigen::MatrixXd& m, Eigen::Index r) {
  std::string out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (c > 0) out += ' ';
    out += fmt_double(m(r, c));
  }
  return out;
}

const std::string& kv_at(const KvMap& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("missing key: " + key);
  return it->second;
}

}  // namespace

KvMap read_kv(std::istream& is) {
  KvMap kv;
  std::string line;
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed key-value line: " + line);
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

void save_params(std::ostream& os, const std::string& prefix, const ProposerParams& p) {
  os << prefix << ".max_depth = " << p.max_depth << '\n';
  os << prefix << ".literal_lo = " << p.literal_lo << '\n';
  os << prefix << ".literal_hi = " << p.literal_hi << '\n';
  os << prefix << ".input_lo = " << p.input_lo << '\n';
  os << prefix << ".input_hi = " << p.input_hi << '\n';
  for (Eigen::Index r = 0; r < p.expr_logits.rows(); ++r)
    os << prefix << ".expr_logits." << r << " = " << row_values(p.expr_logits, r) << '\n';
  for (Eigen::Index r = 0; r < p.cmp_logits.rows(); ++r)
    os << prefix << ".cmp_logits." << r << " = " << row_values(p.cmp_logits, r) << '\n';
  os << prefix << ".literal_logits = " << row_values(p.literal_logits.transpose(), 0) << '\n';
  os << prefix << ".malformed_logit = " << fmt_double(p.malformed_logit) << '\n';
  os << prefix << ".claim_logit = " << fmt_double(p.claim_logit) << '\n';
}

void save_params(std::ostream& os, const std::string& prefix, const SolverParams& s) {
  os << prefix << ".strategy_logits = " << row_values(s.strategy_logits.transpose(), 0) << '\n';
  os << prefix << ".noise_logit = " << fmt_double(s.noise_logit) << '\n';
}

ProposerParams proposer_from_kv(const KvMap& kv, const std::string& prefix) {
  const int max_depth = static_cast<int>(std::stoll(kv_at(kv, prefix + ".max_depth")));
  ProposerParams p = ProposerParams::make(
      max_depth, std::stoll(kv_at(kv, prefix + ".literal_lo")),
      std::stoll(kv_at(kv, prefix + ".literal_hi")), std::stoll(kv_at(kv, prefix + ".input_lo")),
      std::stoll(kv_at(kv, prefix + ".input_hi")),
      parse_double(kv_at(kv, prefix + ".malformed_logit")),
      parse_double(kv_at(kv, prefix + ".claim_logit")));
  for (Eigen::Index r = 0; r <= max_depth; ++r) {
    auto ev = parse_doubles(kv_at(kv, prefix + ".expr_logits." + std::to_string(r)));
    auto cv = parse_doubles(kv_at(kv, prefix + ".cmp_logits." + std::to_string(r)));
    if (ev.size() != static_cast<std::size_t>(kNumExprProductions) ||
        cv.size() != static_cast<std::size_t>(kNumCmpProductions))
      throw std::runtime_error("bad logit row width in " + prefix);
    for (Eigen::Index c = 0; c < kNumExprProductions; ++c)
      p.expr_logits(r, c) = ev[static_cast<std::size_t>(c)];
    for (Eigen::Index c = 0; c < kNumCmpProductions; ++c)
      p.cmp_logits(r, c) = cv[static_cast<std::size_t>(c)];
  }
  auto lv = parse_doubles(kv_at(kv, prefix + ".literal_logits"));
  if (static_cast<Eigen::Index>(lv.size()) != p.literal_logits.size())
    throw std::runtime_error("bad literal logit width in " + prefix);
  for (Eigen::Index i = 0; i < p.literal_logits.size(); ++i)
    p.literal_logits[i] = lv[static_cast<std::size_t>(i)];
  return p;
}

SolverParams solver_from_kv(const KvMap& kv, const std::string& prefix) {
  SolverParams s = SolverParams::make(0.0, parse_double(kv_at(kv, prefix + ".noise_logit")));
  auto sv = parse_doubles(kv_at(kv, prefix + ".strategy_logits"));
  if (sv.size() != static_cast<std::size_t>(kNumStrategies))
    throw std::runtime_error("bad strategy width in " + prefix);
  for (int i = 0; i < kNumStrategies; ++i) s.strategy_logits[i] = sv[static_cast<std::size_t>(i)];
  return s;
}

}  // namespace gatelab
