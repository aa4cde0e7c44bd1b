#include "gatelab/harness.hpp"

#include <json.hpp>

#include <cassert>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gatelab {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_dbl(const std::string& s) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw std::runtime_error("bad number: " + s);
  return v;
}

std::int64_t to_i64(const std::string& s) { return std::stoll(s); }
std::uint64_t to_u64(const std::string& s) { return std::stoull(s); }
int to_int(const std::string& s) { return static_cast<int>(std::stoll(s)); }

bool to_bool(const std::string& s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw std::runtime_error("bad flag: " + s);
}

const std::string& kv_at(const KvMap& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("missing key: " + key);
  return it->second;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << content;
  if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace

std::string_view variant_name(RewardVariant v) {
  return v == RewardVariant::Grounded ? "grounded" : "intrinsic";
}

void apply_label(RunConfig& cfg, const std::string& label) {
  const auto plus = label.find('+');
  if (plus != 2 || label.size() < 4) throw std::invalid_argument("bad label: " + label);
  auto variant = [&](char c) {
    if (c == 'G') return RewardVariant::Grounded;
    if (c == 'I') return RewardVariant::Intrinsic;
    throw std::invalid_argument("bad label: " + label);
  };
  cfg.proposer_variant = variant(label[0]);
  cfg.solver_variant = variant(label[1]);
  const std::string mode = label.substr(3);
  if (mode == "exec")
    cfg.epsilon = 0.0;
  else if (mode == "off")
    cfg.epsilon = 1.0;
  else
    throw std::invalid_argument("bad label: " + label);
  cfg.label = label;
}

std::array<std::string, 7> matrix_labels() {
  return {"GG+exec", "GI+exec", "II+exec", "GG+off", "IG+off", "GI+off", "II+off"};
}

RunConfig config_from_kv(const KvMap& kv) {
  RunConfig cfg;
  if (auto it = kv.find("label"); it != kv.end()) apply_label(cfg, it->second);
  for (const auto& [k, v] : kv) {
    if (k == "label") continue;  // already applied
    else if (k == "gate.epsilon") cfg.epsilon = to_dbl(v);
    else if (k == "steps") cfg.steps = to_int(v);
    else if (k == "master_seed") cfg.master_seed = to_u64(v);
    else if (k == "gate.seed") cfg.gate_seed = to_u64(v);
    else if (k == "holdout_seed") cfg.holdout_seed = to_u64(v);
    else if (k == "proposer_batch") cfg.proposer_batch = to_int(v);
    else if (k == "solver_batch") cfg.solver_batch = to_int(v);
    else if (k == "group_size") cfg.group_size = to_int(v);
    else if (k == "estimate_rollouts") cfg.estimate_rollouts = to_int(v);
    else if (k == "pool_capacity") cfg.pool_capacity = to_i64(v);
    else if (k == "seed_pool_size") cfg.seed_pool_size = to_int(v);
    else if (k == "seed_depth_lo") cfg.seed_depth_lo = to_int(v);
    else if (k == "seed_depth_hi") cfg.seed_depth_hi = to_int(v);
    else if (k == "seed_literal_lo") cfg.seed_literal_lo = to_i64(v);
    else if (k == "seed_literal_hi") cfg.seed_literal_hi = to_i64(v);
    else if (k == "seed_input_lo") cfg.seed_input_lo = to_i64(v);
    else if (k == "seed_input_hi") cfg.seed_input_hi = to_i64(v);
    else if (k == "lr") cfg.update.lr = to_dbl(v);
    else if (k == "clip") cfg.update.clip = to_dbl(v);
    else if (k == "kl_beta") cfg.update.kl_beta = to_dbl(v);
    else if (k == "holdout_size") cfg.holdout_size = to_int(v);
    else if (k == "holdout_depth_lo") cfg.holdout_depth_lo = to_int(v);
    else if (k == "holdout_depth_hi") cfg.holdout_depth_hi = to_int(v);
    else if (k == "checkpoint_every") cfg.checkpoint_every = to_int(v);
    else if (k == "proposer.max_depth") cfg.proposer_max_depth = to_int(v);
    else if (k == "proposer.literal_lo") cfg.literal_lo = to_i64(v);
    else if (k == "proposer.literal_hi") cfg.literal_hi = to_i64(v);
    else if (k == "proposer.input_lo") cfg.input_lo = to_i64(v);
    else if (k == "proposer.input_hi") cfg.input_hi = to_i64(v);
    else if (k == "proposer.init_malformed_logit") cfg.init_malformed_logit = to_dbl(v);
    else if (k == "proposer.init_claim_logit") cfg.init_claim_logit = to_dbl(v);
    else if (k == "proposer.init_divmod_bias") cfg.init_divmod_bias = to_dbl(v);
    else if (k == "proposer.init_divmod_inner_bias") cfg.init_divmod_inner_bias = to_dbl(v);
    else if (k == "proposer.init_divmod_deep_bias") cfg.init_divmod_deep_bias = to_dbl(v);
    else if (k == "proposer.init_leaf_bias") cfg.init_leaf_bias = to_dbl(v);
    else if (k == "proposer.init_leaf_deep_bias") cfg.init_leaf_deep_bias = to_dbl(v);
    else if (k == "solver.init_eval_logit") cfg.init_eval_logit = to_dbl(v);
    else if (k == "solver.init_noise_logit") cfg.init_noise_logit = to_dbl(v);
    else if (k == "log.rollouts") cfg.log_rollouts = to_bool(v);
    else if (k == "out_dir") cfg.out_dir = v;
    else throw std::runtime_error("unknown config key: " + k);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  KvMap kv = read_kv(is);
  return config_from_kv(kv);
}

// ---------------------------------------------------------------------------
// Metrics formatting

std::string metrics_csv_header() {
  return "step,grounded_acc,intrinsic_mean,gap,eligibility,pool_size,proposer_reward,"
         "holdout_acc,epsilon";
}

std::string metrics_csv_row(const MetricsRow& r) {
  auto cell = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
  std::string out = std::to_string(r.step);
  out += ',' + cell(r.grounded_acc);
  out += ',' + cell(r.intrinsic_mean);
  out += ',' + cell(r.gap);
  out += ',' + cell(r.eligibility);
  out += ',' + (r.pool_size ? std::to_string(*r.pool_size) : std::string());
  out += ',' + cell(r.proposer_reward);
  out += ',' + cell(r.holdout_acc);
  out += ',' + fmt_double(r.epsilon);
  return out;
}

std::string phase_csv_header() {
  return "epsilon,late_gap,late_holdout,late_eligibility,youden_j";
}

std::string phase_csv_row(const PhaseRow& r) {
  return fmt_double(r.epsilon) + ',' + fmt_double(r.late_gap) + ',' +
         fmt_double(r.late_holdout) + ',' + fmt_double(r.late_eligibility) + ',' +
         fmt_double(r.youden_j);
}

// ---------------------------------------------------------------------------
// Holdout

namespace {

// Probe validity only covers the probe grid; wider inputs can still reject,
// so inputs are redrawn until the task actually has an answer.
void draw_accepting_input(const Expr& e, std::int64_t lo, std::int64_t hi, Rng& rng,
                          std::int64_t& x, std::int64_t& y, Value& out) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    x = rng.uniform_int(lo, hi);
    y = rng.uniform_int(lo, hi);
    if (auto v = evaluate(e, x, y)) {
      out = *v;
      return;
    }
  }
  throw std::runtime_error("no accepting input found for " + render(e));
}

}  // namespace

std::vector<HoldoutTask> make_holdout(const RunConfig& cfg) {
  Rng rng(derive_seed(cfg.holdout_seed, "holdout_set"));
  std::vector<HoldoutTask> set;
  set.reserve(static_cast<std::size_t>(cfg.holdout_size));
  const int n_depths = cfg.holdout_depth_hi - cfg.holdout_depth_lo + 1;
  assert(n_depths >= 1);
  const int per = cfg.holdout_size / n_depths;
  const int extra = cfg.holdout_size % n_depths;
  for (int d = cfg.holdout_depth_lo; d <= cfg.holdout_depth_hi; ++d) {
    const int count = per + (d - cfg.holdout_depth_lo < extra ? 1 : 0);
    for (int k = 0; k < count; ++k) {
      HoldoutTask t;
      t.expr = generate(rng, d, d, cfg.seed_literal_lo, cfg.seed_literal_hi);
      Value gold;
      draw_accepting_input(t.expr, cfg.seed_input_lo, cfg.seed_input_hi, rng, t.x, t.y, gold);
      t.gold = gold.str();
      t.depth = d;
      set.push_back(std::move(t));
    }
  }
  return set;
}

double holdout_eval(const SolverParams& solver, const std::vector<HoldoutTask>& set,
                    Rng& rng) {
  assert(!set.empty());
  double acc = 0.0;
  for (const HoldoutTask& t : set) {
    const SolverSample s = solver_sample(solver, &t.expr, t.x, t.y, rng);
    acc += grounded_reward(s.answer, t.gold);
  }
  return acc / static_cast<double>(set.size());
}

// ---------------------------------------------------------------------------
// The outer loop

namespace {

json row_record(const MetricsRow& r, const json& extra) {
  json j;
  auto put = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? json(*v) : json(nullptr);
  };
  j["step"] = r.step;
  put("grounded_acc", r.grounded_acc);
  put("intrinsic_mean", r.intrinsic_mean);
  put("gap", r.gap);
  put("eligibility", r.eligibility);
  j["pool_size"] = r.pool_size ? json(*r.pool_size) : json(nullptr);
  put("proposer_reward", r.proposer_reward);
  put("holdout_acc", r.holdout_acc);
  j["epsilon"] = r.epsilon;
  j["youden_j"] = youden_index(r.epsilon);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

}  // namespace

RunState init_run(const RunConfig& cfg) {
  RunState st;
  st.cfg = cfg;
  st.proposer =
      ProposerParams::make(cfg.proposer_max_depth, cfg.literal_lo, cfg.literal_hi,
                           cfg.input_lo, cfg.input_hi, cfg.init_malformed_logit,
                           cfg.init_claim_logit);
  st.proposer.expr_logits(0, kProdDiv) += cfg.init_divmod_bias;
  st.proposer.expr_logits(0, kProdMod) += cfg.init_divmod_bias;
  const int leaf_split = (static_cast<int>(st.proposer.expr_logits.rows()) + 1) / 2;
  for (int r = 1; r < st.proposer.expr_logits.rows(); ++r) {
    const double dm = r + 1 < st.proposer.expr_logits.rows() - 1 ? cfg.init_divmod_inner_bias
                                                                  : cfg.init_divmod_deep_bias;
    const double lf = r < leaf_split ? cfg.init_leaf_bias : cfg.init_leaf_deep_bias;
    st.proposer.expr_logits(r, kProdDiv) += dm;
    st.proposer.expr_logits(r, kProdMod) += dm;
    st.proposer.expr_logits(r, kProdLit) += lf;
    st.proposer.expr_logits(r, kProdVarX) += lf;
    st.proposer.expr_logits(r, kProdVarY) += lf;
  }
  st.solver = SolverParams::make(cfg.init_eval_logit, cfg.init_noise_logit);
  st.proposer_ref = st.proposer;
  st.solver_ref = st.solver;
  st.pool = Pool(cfg.pool_capacity);
  st.proposer_rng = Rng(derive_seed(cfg.master_seed, "proposer"));
  st.solver_rng = Rng(derive_seed(cfg.master_seed, "solver"));
  st.estimate_rng = Rng(derive_seed(cfg.master_seed, "estimate"));
  st.pool_rng = Rng(derive_seed(cfg.master_seed, "pool_sampler"));
  st.holdout_rng = Rng(derive_seed(cfg.master_seed, "holdout_eval"));
  st.gate_rng = Rng(derive_seed(cfg.gate_seed, "gate_leak"));

  Rng seed_rng(derive_seed(cfg.master_seed, "seed_pool"));
  for (int k = 0; k < cfg.seed_pool_size; ++k) {
    Expr e = generate(seed_rng, cfg.seed_depth_lo, cfg.seed_depth_hi, cfg.seed_literal_lo,
                      cfg.seed_literal_hi);
    Task t;
    Value gold;
    draw_accepting_input(e, cfg.seed_input_lo, cfg.seed_input_hi, seed_rng, t.x, t.y, gold);
    t.program_text = render(e);
    t.expr = std::move(e);
    t.exec_output = gold.str();
    t.exec_ok = true;
    t.step = 0;
    st.pool.insert(std::move(t));
  }

  st.holdout = make_holdout(cfg);

  MetricsRow r0;
  r0.step = 0;
  r0.pool_size = static_cast<std::int64_t>(st.pool.size());
  r0.holdout_acc = holdout_eval(st.solver, st.holdout, st.holdout_rng);
  r0.epsilon = cfg.epsilon;
  st.rows.push_back(r0);
  st.jsonl.push_back(row_record(r0, json::object()).dump());
  return st;
}

void step_once(RunState& st) {
  const RunConfig& cfg = st.cfg;
  const std::int64_t t = ++st.step;

  // --- proposer phase -------------------------------------------------------
  std::vector<CandidateTask> cands;
  std::vector<ExecOutcome> outs;
  std::vector<std::optional<Expr>> parsed;
  cands.reserve(static_cast<std::size_t>(cfg.proposer_batch));
  for (int i = 0; i < cfg.proposer_batch; ++i) {
    cands.push_back(proposer_sample(st.proposer, st.proposer_rng));
    const CandidateTask& c = cands.back();
    outs.push_back(exec_check(c.program_text, c.x, c.y));
    parsed.push_back(parse(c.program_text));
  }

  const GateConfig gate_cfg{cfg.epsilon, cfg.gate_seed};
  int admitted = 0, fail_parse = 0, fail_probe = 0, fail_runtime = 0;
  for (int i = 0; i < cfg.proposer_batch; ++i) {
    switch (outs[static_cast<std::size_t>(i)].reason) {
      case FailReason::Parse: ++fail_parse; break;
      case FailReason::Probe: ++fail_probe; break;
      case FailReason::Runtime: ++fail_runtime; break;
      case FailReason::None: break;
    }
    // A text that never parses is not a posable task, so it bypasses the
    // leak lottery entirely (and consumes no gate draw).
    if (outs[static_cast<std::size_t>(i)].reason == FailReason::Parse) continue;
    if (!admit(outs[static_cast<std::size_t>(i)], gate_cfg, st.gate_rng)) continue;
    const CandidateTask& c = cands[static_cast<std::size_t>(i)];
    Task task;
    task.program_text = c.program_text;
    task.expr = parsed[static_cast<std::size_t>(i)];
    task.x = c.x;
    task.y = c.y;
    task.exec_output = outs[static_cast<std::size_t>(i)].output;
    task.claimed_output = c.claimed_output;
    task.exec_ok = outs[static_cast<std::size_t>(i)].exec;
    task.step = t;
    st.pool.insert(std::move(task));
    ++admitted;
  }
  const double elig = eligibility(StepStats{cfg.proposer_batch, admitted});

  std::vector<double> prewards(static_cast<std::size_t>(cfg.proposer_batch));
  for (int i = 0; i < cfg.proposer_batch; ++i) {
    const CandidateTask& c = cands[static_cast<std::size_t>(i)];
    const Expr* q = parsed[static_cast<std::size_t>(i)] ? &*parsed[static_cast<std::size_t>(i)]
                                                        : nullptr;
    if (cfg.proposer_variant == RewardVariant::Grounded) {
      // No executor output: the solver cannot possibly match a gold answer
      // that does not exist, so the measured accuracy is zero by definition
      // and the difficulty reward saturates.
      if (!outs[static_cast<std::size_t>(i)].exec) {
        prewards[static_cast<std::size_t>(i)] = 1.0;
        continue;
      }
      const AccuracyEstimate est = estimate_accuracy(
          q, c.x, c.y, outs[static_cast<std::size_t>(i)].output, c.claimed_output,
          Reference::Executor, st.solver, cfg.estimate_rollouts, st.estimate_rng);
      prewards[static_cast<std::size_t>(i)] = proposer_reward(est);
    } else {
      const AccuracyEstimate est = estimate_accuracy(
          q, c.x, c.y, outs[static_cast<std::size_t>(i)].output, c.claimed_output,
          Reference::Claimed, st.solver, cfg.estimate_rollouts, st.estimate_rng);
      prewards[static_cast<std::size_t>(i)] = proposer_reward(est);
    }
  }
  double preward_mean = 0.0;
  for (double r : prewards) preward_mean += r;
  preward_mean /= static_cast<double>(cfg.proposer_batch);

  const std::vector<double> padv = grpo_advantages(prewards);
  std::vector<Episode<ProposerTrace>> peps;
  peps.reserve(cands.size());
  for (int i = 0; i < cfg.proposer_batch; ++i)
    peps.push_back({*cands[static_cast<std::size_t>(i)].trace,
                    padv[static_cast<std::size_t>(i)],
                    cands[static_cast<std::size_t>(i)].logprob});
  st.proposer = policy_update(st.proposer, peps, st.proposer_ref, cfg.update);

  // --- solver phase ---------------------------------------------------------
  const std::vector<Task> batch = st.pool.sample_batch(cfg.solver_batch, t, st.pool_rng);
  std::vector<Episode<SolverTrace>> seps;
  seps.reserve(batch.size() * static_cast<std::size_t>(cfg.group_size));
  double grounded_sum = 0.0, intrinsic_sum = 0.0;
  json rollout_log = json::array();
  for (const Task& task : batch) {
    const Expr* q = task.expr ? &*task.expr : nullptr;
    std::vector<std::string> answers;
    std::vector<SolverTrace> traces;
    std::vector<double> lps;
    answers.reserve(static_cast<std::size_t>(cfg.group_size));
    for (int j = 0; j < cfg.group_size; ++j) {
      SolverSample s = solver_sample(st.solver, q, task.x, task.y, st.solver_rng);
      answers.push_back(std::move(s.answer));
      traces.push_back(s.trace);
      lps.push_back(s.logprob);
    }
    std::vector<double> rewards;
    if (cfg.solver_variant == RewardVariant::Grounded) {
      rewards.reserve(answers.size());
      for (const auto& a : answers) rewards.push_back(grounded_reward(a, task.gold()));
    } else {
      rewards = intrinsic_rewards(answers);
    }
    const std::vector<double> adv = grpo_advantages(rewards);
    for (int j = 0; j < cfg.group_size; ++j)
      seps.push_back({traces[static_cast<std::size_t>(j)], adv[static_cast<std::size_t>(j)],
                      lps[static_cast<std::size_t>(j)]});

    // Metrics always report both views against the pool's gold — leaked
    // tasks are scored against the only label they have.
    double g = 0.0;
    for (const auto& a : answers) g += grounded_reward(a, task.gold());
    g /= static_cast<double>(cfg.group_size);
    const std::vector<double> intr = intrinsic_rewards(answers);
    double im = 0.0;
    for (double r : intr) im += r;
    im /= static_cast<double>(cfg.group_size);
    grounded_sum += g;
    intrinsic_sum += im;
    if (cfg.log_rollouts) {
      json jr;
      jr["task"] = task.id;
      jr["gold"] = task.gold();
      jr["answers"] = answers;
      rollout_log.push_back(std::move(jr));
    }
  }
  st.solver = policy_update(st.solver, seps, st.solver_ref, cfg.update);

  // --- bookkeeping ----------------------------------------------------------
  MetricsRow row;
  row.step = t;
  row.grounded_acc = grounded_sum / static_cast<double>(batch.size());
  row.intrinsic_mean = intrinsic_sum / static_cast<double>(batch.size());
  row.gap = *row.intrinsic_mean - *row.grounded_acc;
  row.eligibility = elig;
  row.pool_size = static_cast<std::int64_t>(st.pool.size());
  row.proposer_reward = preward_mean;
  row.epsilon = cfg.epsilon;
  if (t % cfg.checkpoint_every == 0)
    row.holdout_acc = holdout_eval(st.solver, st.holdout, st.holdout_rng);
  st.rows.push_back(row);

  json extra;
  extra["proposed"] = cfg.proposer_batch;
  extra["admitted"] = admitted;
  extra["fail_parse"] = fail_parse;
  extra["fail_probe"] = fail_probe;
  extra["fail_runtime"] = fail_runtime;
  if (cfg.log_rollouts) extra["rollouts"] = std::move(rollout_log);
  st.jsonl.push_back(row_record(row, extra).dump());
}

RunState run(const RunConfig& cfg) {
  RunState st = init_run(cfg);
  for (int t = 1; t <= cfg.steps; ++t) step_once(st);
  return st;
}

// ---------------------------------------------------------------------------
// Files

void emit(const RunState& st, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::string csv = metrics_csv_header() + '\n';
  for (const MetricsRow& r : st.rows) csv += metrics_csv_row(r) + '\n';
  write_file(out_dir + "/metrics.csv", csv);

  std::string jl;
  for (const std::string& line : st.jsonl) jl += line + '\n';
  write_file(out_dir + "/steps.jsonl", jl);

  std::string ho;
  for (const HoldoutTask& h : st.holdout)
    ho += render(h.expr) + '\t' + std::to_string(h.x) + '\t' + std::to_string(h.y) + '\t' +
          h.gold + '\t' + std::to_string(h.depth) + '\n';
  write_file(out_dir + "/holdout.tsv", ho);

  std::ostringstream params;
  save_params(params, "proposer", st.proposer);
  save_params(params, "solver", st.solver);
  save_params(params, "proposer_ref", st.proposer_ref);
  save_params(params, "solver_ref", st.solver_ref);
  write_file(out_dir + "/params_final.txt", params.str());
}

void save_checkpoint(const RunState& st, const std::string& dir) {
  std::filesystem::create_directories(dir);

  std::ostringstream params;
  params << "meta.step = " << st.step << '\n';
  params << "meta.next_id = " << st.pool.next_id() << '\n';
  save_params(params, "proposer", st.proposer);
  save_params(params, "solver", st.solver);
  save_params(params, "proposer_ref", st.proposer_ref);
  save_params(params, "solver_ref", st.solver_ref);
  write_file(dir + "/params.txt", params.str());

  st.pool.save(dir + "/pool.tsv");

  std::ostringstream rngs;
  auto dump = [&](const char* name, const Rng& r) {
    rngs << name << ' ';
    r.save(rngs);
    rngs << '\n';
  };
  dump("proposer", st.proposer_rng);
  dump("solver", st.solver_rng);
  dump("estimate", st.estimate_rng);
  dump("pool_sampler", st.pool_rng);
  dump("holdout_eval", st.holdout_rng);
  dump("gate", st.gate_rng);
  write_file(dir + "/rng.txt", rngs.str());
}

RunState load_checkpoint(const RunConfig& cfg, const std::string& dir) {
  RunState st;
  st.cfg = cfg;

  std::ifstream params(dir + "/params.txt");
  if (!params) throw std::runtime_error("cannot read " + dir + "/params.txt");
  const KvMap kv = read_kv(params);
  st.step = to_i64(kv_at(kv, "meta.step"));
  st.proposer = proposer_from_kv(kv, "proposer");
  st.solver = solver_from_kv(kv, "solver");
  st.proposer_ref = proposer_from_kv(kv, "proposer_ref");
  st.solver_ref = solver_from_kv(kv, "solver_ref");

  st.pool = Pool::load(dir + "/pool.tsv", cfg.pool_capacity);
  st.pool.set_next_id(to_i64(kv_at(kv, "meta.next_id")));

  std::ifstream rngs(dir + "/rng.txt");
  if (!rngs) throw std::runtime_error("cannot read " + dir + "/rng.txt");
  std::string line;
  int seen = 0;
  while (std::getline(rngs, line)) {
    std::istringstream iss(line);
    std::string name;
    iss >> name;
    Rng* target = name == "proposer"       ? &st.proposer_rng
                  : name == "solver"       ? &st.solver_rng
                  : name == "estimate"     ? &st.estimate_rng
                  : name == "pool_sampler" ? &st.pool_rng
                  : name == "holdout_eval" ? &st.holdout_rng
                  : name == "gate"         ? &st.gate_rng
                                           : nullptr;
    if (!target) throw std::runtime_error("unknown rng stream: " + name);
    target->load(iss);
    ++seen;
  }
  if (seen != 6) throw std::runtime_error("expected 6 rng streams in " + dir + "/rng.txt");

  st.holdout = make_holdout(cfg);
  return st;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

RunState run_and_emit(const RunConfig& cfg, const std::string& out_dir) {
  RunState st = init_run(cfg);
  try {
    for (int t = 1; t <= cfg.steps; ++t) step_once(st);
  } catch (...) {
    emit(st, out_dir);  // flush the partial log before surfacing the abort
    throw;
  }
  emit(st, out_dir);
  return st;
}

}  // namespace

std::vector<std::string> run_matrix(const RunConfig& base, const std::string& out_dir) {
  std::vector<std::string> statuses;
  for (const std::string& label : matrix_labels()) {
    RunConfig cfg = base;
    apply_label(cfg, label);
    try {
      run_and_emit(cfg, out_dir + "/" + label);
      statuses.push_back(label + ": ok");
    } catch (const std::exception& e) {
      statuses.push_back(label + ": " + e.what());
    }
  }
  return statuses;
}

PhaseRow phase_row(const RunState& st) {
  const std::int64_t start = st.cfg.steps - st.cfg.steps / 5 + 1;
  double gap = 0.0, elig = 0.0;
  int n = 0;
  double holdout = 0.0;
  int n_holdout = 0;
  for (const MetricsRow& r : st.rows) {
    if (r.step < start) continue;
    if (r.gap) {
      gap += *r.gap;
      elig += r.eligibility.value_or(0.0);
      ++n;
    }
    if (r.holdout_acc) {
      holdout += *r.holdout_acc;
      ++n_holdout;
    }
  }
  if (n_holdout == 0) {
    // No checkpoint fell inside the window; take the last one recorded.
    for (const MetricsRow& r : st.rows)
      if (r.holdout_acc) {
        holdout = *r.holdout_acc;
        n_holdout = 1;
      }
  }
  PhaseRow p;
  p.epsilon = st.cfg.epsilon;
  p.late_gap = n > 0 ? gap / n : 0.0;
  p.late_holdout = n_holdout > 0 ? holdout / n_holdout : 0.0;
  p.late_eligibility = n > 0 ? elig / n : 0.0;
  p.youden_j = youden_index(st.cfg.epsilon);
  return p;
}

std::vector<PhaseRow> sweep_epsilon(const RunConfig& base, const std::vector<double>& grid,
                                    const std::string& out_dir) {
  std::vector<PhaseRow> table;
  std::string csv = phase_csv_header() + '\n';
  for (double eps : grid) {
    RunConfig cfg = base;
    cfg.epsilon = eps;
    cfg.label = base.label.substr(0, 2) + "+eps=" + fmt_double(eps);
    const RunState st = run_and_emit(cfg, out_dir + "/eps_" + fmt_double(eps));
    table.push_back(phase_row(st));
    csv += phase_csv_row(table.back()) + '\n';
  }
  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/phase.csv", csv);
  return table;
}

RunState adaptive_schedule(const RunConfig& cfg, int switch_step, double epsilon2,
                           const std::string& out_dir) {
  RunConfig cfg1 = cfg;
  if (switch_step == 0) cfg1.epsilon = epsilon2;  // degenerate: plain epsilon2 run
  RunState st = init_run(cfg1);
  for (int t = 1; t <= switch_step; ++t) step_once(st);

  const std::string ckpt = out_dir + "/checkpoint_step" + std::to_string(switch_step);
  save_checkpoint(st, ckpt);

  RunConfig cfg2 = cfg;
  cfg2.epsilon = epsilon2;
  RunState resumed = load_checkpoint(cfg2, ckpt);
  for (int t = switch_step + 1; t <= cfg.steps; ++t) step_once(resumed);

  resumed.rows.insert(resumed.rows.begin(), st.rows.begin(), st.rows.end());
  resumed.jsonl.insert(resumed.jsonl.begin(), st.jsonl.begin(), st.jsonl.end());
  emit(resumed, out_dir);
  return resumed;
}

}  // namespace gatelab
