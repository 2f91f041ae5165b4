#include "collusim/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace collusim {

namespace {

using nlohmann::json;

[[noreturn]] void fail_parse(const std::string& text, const nlohmann::json::parse_error& e) {
  // nlohmann reports a byte offset; convert to line:column.
  std::size_t line = 1, col = 1;
  const std::size_t stop = std::min(text.size(), e.byte > 0 ? e.byte - 1 : 0);
  for (std::size_t i = 0; i < stop; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  throw ConfigError("config parse error at line " + std::to_string(line) + ", column " +
                    std::to_string(col) + ": " + e.what());
}

json parse_or_fail(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail_parse(text, e);
  }
}

double num(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError("field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

std::string str(const json& j, const std::string& key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<std::string>();
}

GameSpec parse_game(const json& g) {
  const std::string label = str(g, "label", "bertrand");
  if (g.contains("payoff")) {
    return GameSpec::from_json_string(g.dump());
  }
  if (label == "bertrand") {
    return make_bertrand(static_cast<int>(num(g, "K", 10)), num(g, "min_price", 0.1),
                         num(g, "wtp", 1.0), num(g, "cost", 0.0));
  }
  if (label == "pd") {
    return make_prisoners_dilemma(num(g, "u_cd", 0.0), num(g, "u_dd", 1.0), num(g, "u_cc", 2.0),
                                  num(g, "u_dc", 3.0));
  }
  if (label == "mixed_auction") {
    return make_mixed_auction(static_cast<int>(num(g, "K", 10)), num(g, "v", 1.0),
                              num(g, "omega", 0.5));
  }
  throw ConfigError("custom games need an explicit payoff table");
}

json canonical_game(const GameSpec& game) {
  json g;
  const std::string label = to_string(game.label());
  g["label"] = label;
  if (game.label() == GameLabel::kCustom) {
    return json::parse(game.to_json_string());
  }
  for (const auto& [k, v] : game.params()) g[k] = v;
  return g;
}

PolicySpec parse_policy(const json& p) {
  PolicySpec spec;
  const std::string kind = str(p, "kind", "epsilon_greedy");
  if (kind == "greedy") {
    spec.kind = PolicyKind::kGreedy;
  } else if (kind == "epsilon_greedy") {
    spec.kind = PolicyKind::kEpsilonGreedy;
    const std::string sched = str(p, "schedule", "exp_decay");
    if (sched == "constant") {
      spec.epsilon_schedule = ScheduleKind::kConstant;
      spec.epsilon = num(p, "epsilon", 1e-4);
    } else if (sched == "exp_decay") {
      spec.epsilon_schedule = ScheduleKind::kExpDecay;
      spec.beta = num(p, "beta", 1e-4);
    } else {
      throw ConfigError("unknown epsilon schedule: " + sched);
    }
  } else if (kind == "boltzmann") {
    spec.kind = PolicyKind::kBoltzmann;
    spec.tau = num(p, "temperature", 1.0);
    const std::string sched = str(p, "temperature_schedule", "constant");
    if (sched == "constant") {
      spec.temperature_schedule = ScheduleKind::kConstant;
    } else if (sched == "exp_decay") {
      spec.temperature_schedule = ScheduleKind::kExpDecay;
      spec.tau_beta = num(p, "temperature_beta", 1e-4);
    } else {
      throw ConfigError("unknown temperature schedule: " + sched);
    }
  } else {
    throw ConfigError("unknown policy kind: " + kind);
  }
  return spec;
}

json canonical_policy(const PolicySpec& p) {
  json j;
  switch (p.kind) {
    case PolicyKind::kGreedy:
      j["kind"] = "greedy";
      break;
    case PolicyKind::kEpsilonGreedy:
      j["kind"] = "epsilon_greedy";
      if (p.epsilon_schedule == ScheduleKind::kConstant) {
        j["schedule"] = "constant";
        j["epsilon"] = p.epsilon;
      } else {
        j["schedule"] = "exp_decay";
        j["beta"] = p.beta;
      }
      break;
    case PolicyKind::kBoltzmann:
      j["kind"] = "boltzmann";
      j["temperature"] = p.tau;
      if (p.temperature_schedule == ScheduleKind::kExpDecay) {
        j["temperature_schedule"] = "exp_decay";
        j["temperature_beta"] = p.tau_beta;
      } else {
        j["temperature_schedule"] = "constant";
      }
      break;
  }
  return j;
}

UpdateRuleSpec parse_update(const json& u) {
  UpdateRuleSpec spec;
  const std::string kind = str(u, "kind", "asynchronous");
  if (kind == "asynchronous") {
    spec.kind = UpdateKind::kAsynchronous;
  } else if (kind == "synchronous") {
    spec.kind = UpdateKind::kSynchronous;
  } else if (kind == "synchronous_downward") {
    spec.kind = UpdateKind::kSynchronousDownward;
  } else {
    throw ConfigError("unknown update kind: " + kind);
  }
  spec.alpha = num(u, "alpha", 0.15);
  spec.delta = num(u, "delta", 0.95);
  return spec;
}

json canonical_update(const UpdateRuleSpec& u) {
  json j;
  j["kind"] = u.kind == UpdateKind::kAsynchronous
                  ? "asynchronous"
                  : (u.kind == UpdateKind::kSynchronous ? "synchronous" : "synchronous_downward");
  j["alpha"] = u.alpha;
  j["delta"] = u.delta;
  return j;
}

InitSpec parse_init(const json& i) {
  InitSpec spec;
  const std::string kind = str(i, "kind", "uniform_opponent");
  if (kind == "uniform_opponent") {
    spec.kind = InitKind::kUniformOpponent;
  } else if (kind == "optimistic_uniform") {
    spec.kind = InitKind::kOptimisticUniform;
    spec.lo = num(i, "lo", 1.0);
    spec.hi = num(i, "hi", 2.0);
    spec.scale_by_horizon = i.value("scale_by_horizon", false);
  } else if (kind == "explicit") {
    spec.kind = InitKind::kExplicit;
    spec.table = i.at("table").get<std::vector<double>>();
  } else {
    throw ConfigError("unknown init kind: " + kind);
  }
  return spec;
}

json canonical_init(const InitSpec& i) {
  json j;
  switch (i.kind) {
    case InitKind::kUniformOpponent:
      j["kind"] = "uniform_opponent";
      break;
    case InitKind::kOptimisticUniform:
      j["kind"] = "optimistic_uniform";
      j["lo"] = i.lo;
      j["hi"] = i.hi;
      j["scale_by_horizon"] = i.scale_by_horizon;
      break;
    case InitKind::kExplicit:
      j["kind"] = "explicit";
      j["table"] = i.table;
      break;
  }
  return j;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

GameSpec game_from_config_json(const std::string& game_json) {
  return parse_game(parse_or_fail(game_json));
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  const json doc = parse_or_fail(json_text);
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!doc.contains("game")) throw ConfigError("config needs a 'game' section");

  GameSpec game = parse_game(doc.at("game"));
  PolicySpec policy = doc.contains("policy") ? parse_policy(doc.at("policy")) : PolicySpec{};
  UpdateRuleSpec update = doc.contains("update") ? parse_update(doc.at("update")) : UpdateRuleSpec{};
  InitSpec init = doc.contains("init") ? parse_init(doc.at("init")) : InitSpec{};

  const std::string mode = str(doc, "mode", "memoryless");
  if (mode != "memoryless" && mode != "memory") throw ConfigError("unknown mode: " + mode);

  SimConfig sim{.game = std::move(game),
                .policy = policy,
                .update = update,
                .init = init,
                .mode = mode == "memory" ? ObsMode::kOnePeriodMemory : ObsMode::kMemoryless};

  const json run = doc.value("run", json::object());
  const std::string run_kind = str(run, "kind", "decay");
  if (run_kind == "decay") {
    sim.run = RunKind::kDecay;
    sim.horizon = static_cast<std::uint64_t>(num(run, "horizon", 1e7));
    sim.convergence_window = static_cast<std::uint64_t>(num(run, "convergence_window", 1e4));
  } else if (run_kind == "constant") {
    sim.run = RunKind::kConstant;
    sim.expected_explorations = num(run, "expected_explorations", 1e4);
    sim.window_expected_explorations = num(run, "window_expected_explorations", 1e4);
    sim.window_include_asymmetric = run.value("include_asymmetric", false);
  } else {
    throw ConfigError("unknown run kind: " + run_kind);
  }

  sim.master_seed = static_cast<std::uint64_t>(num(doc, "master_seed", 1));
  sim.sessions = static_cast<std::uint32_t>(num(doc, "sessions", 1));

  const json trace = doc.value("trace", json::object());
  sim.trace_stride = static_cast<std::uint32_t>(num(trace, "stride", 0));
  if (trace.contains("sessions")) {
    sim.trace_sessions = trace.at("sessions").get<std::vector<std::uint32_t>>();
  }

  ExperimentConfig cfg{.sim = std::move(sim)};
  if (doc.contains("sweep")) {
    for (const auto& axis : doc.at("sweep")) {
      SweepAxis a;
      a.param = axis.at("param").get<std::string>();
      a.values = axis.at("values").get<std::vector<double>>();
      if (a.values.empty()) throw ConfigError("sweep axis '" + a.param + "' has no values");
      cfg.axes.push_back(std::move(a));
    }
    if (cfg.axes.size() > 2) throw ConfigError("at most 2 sweep axes per run");
  }
  cfg.out_dir = str(doc, "out_dir", "out");
  cfg.threads = static_cast<int>(num(doc, "threads", 0));
  cfg.scaled = doc.value("meta", json::object()).value("scaled", false);

  try {
    cfg.sim.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  // Canonical re-emission: all defaults materialized, keys sorted by dump().
  json canon;
  canon["game"] = canonical_game(cfg.sim.game);
  canon["mode"] = cfg.sim.mode == ObsMode::kOnePeriodMemory ? "memory" : "memoryless";
  canon["policy"] = canonical_policy(cfg.sim.policy);
  canon["update"] = canonical_update(cfg.sim.update);
  canon["init"] = canonical_init(cfg.sim.init);
  if (cfg.sim.run == RunKind::kDecay) {
    canon["run"] = {{"kind", "decay"},
                    {"horizon", cfg.sim.horizon},
                    {"convergence_window", cfg.sim.convergence_window}};
  } else {
    canon["run"] = {{"kind", "constant"},
                    {"expected_explorations", cfg.sim.expected_explorations},
                    {"window_expected_explorations", cfg.sim.window_expected_explorations},
                    {"include_asymmetric", cfg.sim.window_include_asymmetric}};
  }
  canon["master_seed"] = cfg.sim.master_seed;
  canon["sessions"] = cfg.sim.sessions;
  canon["trace"] = {{"stride", cfg.sim.trace_stride}, {"sessions", cfg.sim.trace_sessions}};
  if (!cfg.axes.empty()) {
    json axes = json::array();
    for (const auto& a : cfg.axes) axes.push_back({{"param", a.param}, {"values", a.values}});
    canon["sweep"] = axes;
  }
  canon["out_dir"] = cfg.out_dir;
  canon["threads"] = cfg.threads;
  canon["meta"] = {{"scaled", cfg.scaled}};

  cfg.resolved_json = canon.dump(2);
  // The hash identifies the experiment itself; where it runs and with how
  // many workers is not part of that identity.
  json hashed = canon;
  hashed.erase("out_dir");
  hashed.erase("threads");
  cfg.config_hash = fnv1a64(hashed.dump());
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

StabilityRunConfig parse_stability_config(const std::string& json_text) {
  const json doc = parse_or_fail(json_text);
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!doc.contains("game")) throw ConfigError("config needs a 'game' section");

  GameSpec game = parse_game(doc.at("game"));
  const double alpha = num(doc, "alpha", 0.5);
  const double delta = num(doc, "delta", 0.0);
  const double eta = num(doc, "eta", 0.1);
  std::optional<double> q_upper;
  if (doc.contains("q_upper")) q_upper = num(doc, "q_upper", 0.0);
  const auto budget = static_cast<std::uint64_t>(num(doc, "budget", 1e6));

  json canon;
  canon["game"] = canonical_game(game);
  canon["alpha"] = alpha;
  canon["delta"] = delta;
  canon["eta"] = eta;
  if (q_upper) canon["q_upper"] = *q_upper;
  canon["budget"] = budget;
  canon["dot"] = doc.value("dot", false);
  canon["threads"] = static_cast<int>(num(doc, "threads", 0));
  canon["out_dir"] = str(doc, "out_dir", "out");

  auto build_instance = [&]() -> stability::Instance {
    try {
      const auto grid = stability::make_grid(game, delta, eta, q_upper);
      return stability::Instance(std::move(game), alpha, delta, grid, budget);
    } catch (const stability::BudgetExceeded&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  };
  StabilityRunConfig cfg{.instance = build_instance(),
                         .dot = doc.value("dot", false),
                         .threads = static_cast<int>(num(doc, "threads", 0)),
                         .out_dir = str(doc, "out_dir", "out")};
  cfg.resolved_json = canon.dump(2);
  json hashed = canon;
  hashed.erase("out_dir");
  hashed.erase("threads");
  cfg.config_hash = fnv1a64(hashed.dump());
  return cfg;
}

StabilityRunConfig load_stability_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_stability_config(ss.str());
}

std::string patch_config(const std::string& json_text, const std::string& dotted_path,
                         double value) {
  json doc = parse_or_fail(json_text);
  json* node = &doc;
  std::size_t start = 0;
  std::vector<std::string> parts;
  while (true) {
    const std::size_t dot = dotted_path.find('.', start);
    parts.push_back(dotted_path.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i])) {
      throw ConfigError("sweep axis references unknown section: " + dotted_path);
    }
    node = &node->at(parts[i]);
  }
  if (!node->contains(parts.back())) {
    throw ConfigError("sweep axis references unknown field: " + dotted_path);
  }
  (*node)[parts.back()] = value;
  return doc.dump(2);
}

}  // namespace collusim
