#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gatelab/expr.hpp"
#include "gatelab/gate.hpp"
#include "gatelab/policy.hpp"
#include "gatelab/pool.hpp"
#include "gatelab/rewards.hpp"
#include "gatelab/rng.hpp"

namespace gatelab {

enum class RewardVariant { Grounded, Intrinsic };

std::string_view variant_name(RewardVariant v);

struct RunConfig {
  // Identity. The label encodes (proposer variant, solver variant, gate
  // mode): "GI+off" = grounded proposer, intrinsic solver, gate off (ε=1).
  std::string label = "II+exec";
  RewardVariant proposer_variant = RewardVariant::Intrinsic;
  RewardVariant solver_variant = RewardVariant::Intrinsic;
  double epsilon = 0.0;
  int steps = 500;

  // Seeds. The holdout seed is deliberately separate so every run of an
  // experiment shares one holdout set while training streams vary.
  std::uint64_t master_seed = 1;
  std::uint64_t gate_seed = 7;
  std::uint64_t holdout_seed = 1234;

  // Loop sizes.
  int proposer_batch = 8;     // candidates proposed per step
  int solver_batch = 8;       // pool tasks trained on per step
  int group_size = 16;        // solver rollouts per task
  int estimate_rollouts = 8;  // fresh rollouts per difficulty estimate

  // Pool and its bootstrap contents.
  std::int64_t pool_capacity = 16384;
  int seed_pool_size = 24;
  int seed_depth_lo = 1, seed_depth_hi = 4;
  std::int64_t seed_literal_lo = -10, seed_literal_hi = 10;
  std::int64_t seed_input_lo = -10, seed_input_hi = 10;

  UpdateConfig update;

  // Offline evaluation.
  int holdout_size = 150;
  int holdout_depth_lo = 4, holdout_depth_hi = 6;
  int checkpoint_every = 100;

  // Policy initialization. The shaping biases tilt the starting grammar
  // toward a mix of shallow divisor-style programs and deeper diffuse ones;
  // divisor-free literals keep the probe grid from rejecting honest tasks.
  int proposer_max_depth = 5;
  std::int64_t literal_lo = 1, literal_hi = 2;
  std::int64_t input_lo = -10, input_hi = 10;
  double init_malformed_logit = -4.0;
  double init_claim_logit = -3.0;
  double init_divmod_bias = 3.5;         // added to Div/Mod logits at the root bucket
  double init_divmod_inner_bias = -3.0;  // added to Div/Mod logits at interior rows
  double init_divmod_deep_bias = 3.0;    // added to Div/Mod logits at the deepest expandable row
  double init_leaf_bias = 0.8;           // added to Lit/VarX/VarY logits in the upper half of rows
  double init_leaf_deep_bias = -2.5;     // added to Lit/VarX/VarY logits in the lower half of rows
  double init_eval_logit = 1.4;
  double init_noise_logit = -0.9;

  bool log_rollouts = false;
  std::string out_dir = "out";
};

// Flat key-value config file; unknown keys are an error, absent keys keep
// their defaults. A "label" key is applied first, so explicit keys (e.g.
// gate.epsilon) override what the label implies.
RunConfig config_from_kv(const KvMap& kv);
RunConfig load_config(const std::string& path);

// Parses "PS+gate" (P, S in {G, I}; gate in {exec, off}) into the variant
// fields and epsilon (exec = 0, off = 1). Throws std::invalid_argument.
void apply_label(RunConfig& cfg, const std::string& label);

// The seven studied configurations.
std::array<std::string, 7> matrix_labels();

struct MetricsRow {
  std::int64_t step = 0;
  std::optional<double> grounded_acc;    // train batch mean vs. pool gold
  std::optional<double> intrinsic_mean;  // train batch mean agreement
  std::optional<double> gap;             // intrinsic_mean - grounded_acc
  std::optional<double> eligibility;     // admitted / proposed this step
  std::optional<std::int64_t> pool_size;
  std::optional<double> proposer_reward;  // batch mean R_P
  std::optional<double> holdout_acc;      // checkpoint steps only
  double epsilon = 0.0;                   // in effect at this step
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& r);

struct HoldoutTask {
  Expr expr;
  std::int64_t x = 0, y = 0;
  std::string gold;
  int depth = 0;
};

// Stratified offline set: holdout_size split evenly across the target
// depths, inputs redrawn until the evaluation accepts. A pure function of
// the holdout seed and the holdout/seed-range config fields.
std::vector<HoldoutTask> make_holdout(const RunConfig& cfg);

// One sampled answer per task, scored against the stored gold.
double holdout_eval(const SolverParams& solver, const std::vector<HoldoutTask>& set,
                    Rng& rng);

// Everything a run accumulates and everything a checkpoint must restore.
struct RunState {
  RunConfig cfg;
  ProposerParams proposer, proposer_ref;
  SolverParams solver, solver_ref;
  Pool pool{0};
  Rng proposer_rng, solver_rng, estimate_rng, pool_rng, holdout_rng, gate_rng;
  std::int64_t step = 0;
  std::vector<HoldoutTask> holdout;
  std::vector<MetricsRow> rows;       // rows[0] is the initial-state row
  std::vector<std::string> jsonl;     // one record per row
};

// Bootstraps the pool, captures the anchor snapshots, writes row 0.
RunState init_run(const RunConfig& cfg);

// One outer step: propose -> gate -> pool -> proposer update, then
// batch -> rollouts -> solver update, then the metrics row (holdout at
// checkpoint steps).
void step_once(RunState& st);

RunState run(const RunConfig& cfg);

// metrics.csv, steps.jsonl, holdout.tsv, params_final.txt under out_dir.
void emit(const RunState& st, const std::string& out_dir);

// Params + anchors + step/pool-counter metadata, pool snapshot, and the six
// rng streams. load_checkpoint rebuilds a state that continues bit-exactly
// (the config — possibly with a new epsilon — comes from the caller).
void save_checkpoint(const RunState& st, const std::string& dir);
RunState load_checkpoint(const RunConfig& cfg, const std::string& dir);

// Runs every matrix label off one base config with shared seeds, emitting
// into out_dir/<label>/. One run's failure does not abort its siblings;
// returns "<label>: ok" or "<label>: <error>" lines.
std::vector<std::string> run_matrix(const RunConfig& base, const std::string& out_dir);

struct PhaseRow {
  double epsilon = 0.0;
  double late_gap = 0.0;          // means over the final 20% of steps
  double late_holdout = 0.0;
  double late_eligibility = 0.0;
  double youden_j = 0.0;          // 1 - epsilon
};

std::string phase_csv_header();
std::string phase_csv_row(const PhaseRow& r);

// One run per grid point (epsilon override only), emitting per-run
// directories plus phase.csv under out_dir.
std::vector<PhaseRow> sweep_epsilon(const RunConfig& base, const std::vector<double>& grid,
                                    const std::string& out_dir);
PhaseRow phase_row(const RunState& st);

// Trains at cfg.epsilon until switch_step, checkpoints to disk, reloads, and
// continues at epsilon2. The returned state carries the stitched full log;
// the epsilon column records the switch. switch_step = 0 degenerates to a
// plain epsilon2 run (still exercising the checkpoint path).
RunState adaptive_schedule(const RunConfig& cfg, int switch_step, double epsilon2,
                           const std::string& out_dir);

}  // namespace gatelab
