#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gatelab/harness.hpp"

namespace {

using namespace gatelab;

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> grid;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));
  if (grid.empty()) throw std::runtime_error("empty epsilon grid");
  return grid;
}

void print_summary(const RunState& st, const std::string& out_dir) {
  const MetricsRow& last = st.rows.back();
  double final_holdout = 0.0;
  for (const MetricsRow& r : st.rows)
    if (r.holdout_acc) final_holdout = *r.holdout_acc;
  std::cout << "run " << st.cfg.label << ": steps=" << last.step
            << " final_gap=" << (last.gap ? std::to_string(*last.gap) : "-")
            << " final_holdout=" << final_holdout << " pool=" << st.pool.size() << " -> "
            << out_dir << "\n";
}

RunState run_with_flush(const RunConfig& cfg, const std::string& out_dir) {
  RunState st = init_run(cfg);
  try {
    for (int t = 1; t <= cfg.steps; ++t) step_once(st);
  } catch (...) {
    emit(st, out_dir);
    throw;
  }
  emit(st, out_dir);
  return st;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-play proposer/solver training loop over a toy expression language"};
  app.require_subcommand(1);

  std::string config_path, out_dir, label, grid_spec = "0,0.05,0.1,0.2,0.4,0.7,1.0";
  std::string params_path, depth_spec = "4:6";
  double epsilon = -1.0, epsilon2 = 0.05;
  std::int64_t steps = -1, seed = -1, holdout_n = 150;
  int switch_step = 150;

  CLI::App* c_run = app.add_subcommand("run", "single training run");
  c_run->add_option("--config", config_path, "config file")->required();
  c_run->add_option("--label", label, "configuration label, e.g. II+off");
  c_run->add_option("--epsilon", epsilon, "gate leak rate override");
  c_run->add_option("--steps", steps, "outer step count override");
  c_run->add_option("--seed", seed, "master seed override");
  c_run->add_option("--out", out_dir, "output directory override");

  CLI::App* c_matrix = app.add_subcommand("matrix", "all seven labeled configurations");
  c_matrix->add_option("--config", config_path, "config file")->required();
  c_matrix->add_option("--out", out_dir, "output directory")->required();

  CLI::App* c_sweep = app.add_subcommand("sweep", "gate leak-rate sweep");
  c_sweep->add_option("--config", config_path, "config file")->required();
  c_sweep->add_option("--grid", grid_spec, "comma-separated epsilon grid");
  c_sweep->add_option("--out", out_dir, "output directory")->required();

  CLI::App* c_sched = app.add_subcommand("schedule", "strict gate early, leaky gate later");
  c_sched->add_option("--config", config_path, "config file")->required();
  c_sched->add_option("--switch-step", switch_step, "step at which epsilon changes");
  c_sched->add_option("--epsilon2", epsilon2, "epsilon after the switch");
  c_sched->add_option("--out", out_dir, "output directory")->required();

  CLI::App* c_holdout = app.add_subcommand("holdout", "evaluate saved solver params");
  c_holdout->add_option("--params", params_path, "params file (solver.* keys)")->required();
  c_holdout->add_option("--n", holdout_n, "holdout size");
  c_holdout->add_option("--depth", depth_spec, "depth range lo:hi");
  c_holdout->add_option("--seed", seed, "holdout seed override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_run->parsed()) {
      RunConfig cfg = load_config(config_path);
      if (!label.empty()) apply_label(cfg, label);
      if (epsilon >= 0.0) cfg.epsilon = epsilon;
      if (steps >= 0) cfg.steps = static_cast<int>(steps);
      if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      const RunState st = run_with_flush(cfg, cfg.out_dir);
      print_summary(st, cfg.out_dir);
    } else if (c_matrix->parsed()) {
      const RunConfig base = load_config(config_path);
      bool ok = true;
      for (const std::string& status : run_matrix(base, out_dir)) {
        std::cout << status << "\n";
        ok = ok && status.substr(status.find(':')) == ": ok";
      }
      if (!ok) return 1;
    } else if (c_sweep->parsed()) {
      const RunConfig base = load_config(config_path);
      for (const PhaseRow& row : sweep_epsilon(base, parse_grid(grid_spec), out_dir))
        std::cout << "eps=" << row.epsilon << " late_gap=" << row.late_gap
                  << " late_holdout=" << row.late_holdout
                  << " late_eligibility=" << row.late_eligibility << "\n";
      std::cout << "phase table -> " << out_dir << "/phase.csv\n";
    } else if (c_sched->parsed()) {
      const RunConfig cfg = load_config(config_path);
      const RunState st = adaptive_schedule(cfg, switch_step, epsilon2, out_dir);
      print_summary(st, out_dir);
    } else if (c_holdout->parsed()) {
      std::ifstream is(params_path);
      if (!is) throw std::runtime_error("cannot read " + params_path);
      const SolverParams solver = solver_from_kv(read_kv(is), "solver");
      RunConfig cfg;
      cfg.holdout_size = static_cast<int>(holdout_n);
      const auto colon = depth_spec.find(':');
      if (colon == std::string::npos) throw std::runtime_error("bad depth range: " + depth_spec);
      cfg.holdout_depth_lo = std::stoi(depth_spec.substr(0, colon));
      cfg.holdout_depth_hi = std::stoi(depth_spec.substr(colon + 1));
      if (seed >= 0) cfg.holdout_seed = static_cast<std::uint64_t>(seed);
      const auto set = make_holdout(cfg);
      Rng rng(derive_seed(cfg.holdout_seed, "holdout_eval_cli"));
      std::cout << "holdout accuracy: " << holdout_eval(solver, set, rng) << " over "
                << set.size() << " tasks\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
