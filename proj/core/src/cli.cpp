#include "collusim/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "collusim/config.hpp"
#include "collusim/metrics.hpp"
#include "collusim/outputs.hpp"
#include "collusim/presets.hpp"

namespace collusim {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;
constexpr int kExitVerification = 4;

struct Overrides {
  std::string out_dir;
  std::int64_t seed = -1;
  int threads = -1;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Overrides are applied to the document itself so the embedded config echo
// and hash stay faithful to what actually ran.
std::string apply_overrides(const std::string& text, const Overrides& ov) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    return text;  // let the config parser produce the line/column diagnostic
  }
  if (!ov.out_dir.empty()) doc["out_dir"] = ov.out_dir;
  if (ov.seed >= 0) doc["master_seed"] = static_cast<std::uint64_t>(ov.seed);
  if (ov.threads >= 0) doc["threads"] = ov.threads;
  return doc.dump(2);
}

int effective_threads(int cfg_threads) {
  if (const char* env = std::getenv("COLLUSIM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return cfg_threads;
}

void write_batch_outputs(const ExperimentConfig& cfg,
                         const std::vector<SessionResult>& results) {
  const std::filesystem::path dir(cfg.out_dir);
  const AggregateReport report = aggregate(results, cfg.sim.game);
  write_file((dir / "summary.json").string(), summary_json(cfg, results, report));
  write_file((dir / "sessions.csv").string(), sessions_csv(cfg, results));
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!cfg.sim.wants_trace(static_cast<std::uint32_t>(i))) continue;
    write_file((dir / ("trace_" + std::to_string(i) + ".csv")).string(),
               trace_csv(cfg, static_cast<std::uint32_t>(i), results[i]));
    if (results[i].final_q) {
      std::string snap = "agent,obs,action,q_value\n";
      append_qstate_csv(results[i].final_q->first, 0, snap);
      append_qstate_csv(results[i].final_q->second, 1, snap);
      write_file((dir / ("qtable_" + std::to_string(i) + ".csv")).string(), snap);
    }
  }
}

int run_simulate(const ExperimentConfig& cfg) {
  const auto results = run_batch(cfg.sim, effective_threads(cfg.threads));
  write_batch_outputs(cfg, results);
  std::cout << "wrote " << cfg.out_dir << "/summary.json (" << results.size() << " sessions)\n";
  return kExitOk;
}

int run_sweep(const ExperimentConfig& cfg) {
  if (cfg.axes.empty()) return run_simulate(cfg);

  std::vector<std::size_t> shape;
  for (const auto& axis : cfg.axes) shape.push_back(axis.values.size());
  std::size_t cells = 1;
  for (std::size_t s : shape) cells *= s;

  std::vector<SweepRow> rows;
  rows.reserve(cells);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::vector<double> values;
    std::size_t rest = cell;
    for (std::size_t ax = cfg.axes.size(); ax-- > 0;) {
      values.insert(values.begin(), cfg.axes[ax].values[rest % shape[ax]]);
      rest /= shape[ax];
    }
    std::string patched = cfg.resolved_json;
    for (std::size_t ax = 0; ax < cfg.axes.size(); ++ax) {
      patched = patch_config(patched, cfg.axes[ax].param, values[ax]);
    }
    const ExperimentConfig cell_cfg = parse_experiment_config(patched);
    const auto results = run_batch(cell_cfg.sim, effective_threads(cfg.threads));
    SweepRow row;
    row.axis_values = values;
    row.report = aggregate(results, cell_cfg.sim.game);
    row.sessions = cell_cfg.sim.sessions;
    rows.push_back(std::move(row));
  }

  const std::filesystem::path dir(cfg.out_dir);
  write_file((dir / "sweep.csv").string(), sweep_csv(cfg, rows));
  nlohmann::json echo;
  echo["config"] = nlohmann::json::parse(cfg.resolved_json);
  echo["config_hash"] = cfg.config_hash;
  echo["cells"] = cells;
  write_file((dir / "summary.json").string(), echo.dump(2));
  std::cout << "wrote " << cfg.out_dir << "/sweep.csv (" << cells << " cells)\n";
  return kExitOk;
}

int run_stability(const std::string& text, const Overrides& ov, bool dot_flag) {
  StabilityRunConfig cfg = parse_stability_config(apply_overrides(text, ov));
  if (dot_flag) cfg.dot = true;
  const auto report = stability::verify(cfg.instance, effective_threads(cfg.threads));
  const std::filesystem::path dir(cfg.out_dir);
  write_file((dir / "stability.json").string(), stability::report_to_json(report, cfg.instance));
  if (cfg.dot) {
    write_file((dir / "cost_digraph.dot").string(),
               stability::cost_digraph_dot(cfg.instance, report.absorbing, report.costs,
                                           report.nash_state));
  }
  std::cout << "wrote " << cfg.out_dir << "/stability.json (" << report.state_count
            << " states, " << report.absorbing.size() << " absorbing, "
            << (report.pass() ? "pass" : "FAIL") << ")\n";
  return report.pass() ? kExitOk : kExitVerification;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"collusim: repeated-game Q-learning simulator and stability verifier"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  std::string preset_name;
  bool scaled = true;
  bool full = false;
  bool dot_flag = false;
  int nu_actions = 10;
  double nu_beta = 1e-4;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) {
      cmd->add_option("--config", config_path, "config JSON path")->required();
    }
    cmd->add_option("--out", ov.out_dir, "output directory override");
    cmd->add_option("--seed", ov.seed, "master seed override");
    cmd->add_option("--threads", ov.threads, "worker thread count override");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run one batch of sessions");
  add_common(simulate, true);

  CLI::App* sweep = app.add_subcommand("sweep", "expand sweep axes into a grid of batches");
  add_common(sweep, true);

  CLI::App* replicate = app.add_subcommand("replicate", "run a named experiment preset");
  replicate->add_option("--preset", preset_name, "preset id")->required();
  replicate->add_flag("--scaled", scaled, "desk-scale parameters (default)");
  replicate->add_flag("--full", full, "full-scale reference parameters");
  add_common(replicate, false);

  CLI::App* stability_cmd = app.add_subcommand("stability", "exhaustively verify an instance");
  add_common(stability_cmd, true);
  stability_cmd->add_flag("--dot", dot_flag, "also dump the absorbing cost digraph as DOT");

  CLI::App* nu = app.add_subcommand("nu", "expected exploration visits per cell");
  nu->add_option("--actions", nu_actions, "number of actions K")->required();
  nu->add_option("--beta", nu_beta, "exploration decay rate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simulate->parsed() || sweep->parsed()) {
      const ExperimentConfig cfg =
          parse_experiment_config(apply_overrides(read_file(config_path), ov));
      return simulate->parsed() ? run_simulate(cfg) : run_sweep(cfg);
    }
    if (replicate->parsed()) {
      if (!is_preset(preset_name)) {
        std::cerr << "unknown preset: " << preset_name << "\n";
        return kExitConfig;
      }
      std::string text = preset_config(preset_name, !full);
      if (ov.out_dir.empty()) ov.out_dir = "out/" + preset_name;
      const ExperimentConfig cfg = parse_experiment_config(apply_overrides(text, ov));
      return cfg.axes.empty() ? run_simulate(cfg) : run_sweep(cfg);
    }
    if (stability_cmd->parsed()) {
      return run_stability(read_file(config_path), ov, dot_flag);
    }
    if (nu->parsed()) {
      const double v = 1.0 / (nu_actions * (1.0 - std::exp(-nu_beta)));
      std::printf("nu = 1/(K*(1-exp(-beta))) = %.6g  (K=%d, beta=%g)\n", v, nu_actions, nu_beta);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const stability::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace collusim
