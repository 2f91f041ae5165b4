#include "collusim/presets.hpp"

#include <stdexcept>

#include <json.hpp>

namespace collusim {

namespace {

using nlohmann::json;

json bertrand_baseline() {
  return {{"label", "bertrand"}, {"K", 10}, {"min_price", 0.1}, {"wtp", 1.0}, {"cost", 0.0}};
}

json decay_run(double horizon, double window) {
  return {{"kind", "decay"}, {"horizon", horizon}, {"convergence_window", window}};
}

json base(bool scaled, std::uint64_t seed) {
  json cfg;
  cfg["game"] = bertrand_baseline();
  cfg["mode"] = "memoryless";
  cfg["policy"] = {{"kind", "epsilon_greedy"}, {"schedule", "exp_decay"}, {"beta", 1e-4}};
  cfg["update"] = {{"kind", "asynchronous"}, {"alpha", 0.15}, {"delta", 0.95}};
  cfg["init"] = {{"kind", "uniform_opponent"}};
  cfg["run"] = scaled ? decay_run(1e7, 1e4) : decay_run(1e9, 1e5);
  cfg["sessions"] = scaled ? 30 : 100;
  cfg["master_seed"] = seed;
  cfg["meta"] = {{"scaled", scaled}};
  return cfg;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig3a", "fig3b", "fig4", "fig5", "fig7", "fig8", "fig10", "fig11", "fig12"};
}

bool is_preset(const std::string& name) {
  for (const auto& n : preset_names()) {
    if (n == name) return true;
  }
  return false;
}

std::string preset_config(const std::string& name, bool scaled) {
  if (name == "fig3a") {
    // Baseline decay batch at delta = 0.95.
    return base(scaled, 1001).dump(2);
  }
  if (name == "fig3b") {
    json cfg = base(scaled, 1002);
    cfg["update"]["delta"] = 0.0;
    return cfg.dump(2);
  }
  if (name == "fig4") {
    // Convergent price as a function of the discount factor.
    json cfg = base(scaled, 1003);
    cfg["sweep"] = json::array(
        {{{"param", "update.delta"},
          {"values", scaled ? std::vector<double>{0.0, 0.25, 0.5, 0.75, 0.95}
                            : linspace(0.0, 0.95, 20)}}});
    return cfg.dump(2);
  }
  if (name == "fig5") {
    // Constant exploration rate; window-weighted prices across delta.
    json cfg = base(scaled, 1004);
    cfg["policy"] = {{"kind", "epsilon_greedy"},
                     {"schedule", "constant"},
                     {"epsilon", scaled ? 1e-4 : 1e-6}};
    cfg["run"] = {{"kind", "constant"},
                  {"expected_explorations", scaled ? 1e4 : 1e5},
                  {"window_expected_explorations", 1e4},
                  {"include_asymmetric", false}};
    cfg["sessions"] = scaled ? 20 : 100;
    cfg["sweep"] = json::array(
        {{{"param", "update.delta"},
          {"values", scaled ? std::vector<double>{0.3, 0.5, 0.7, 0.8, 0.9, 0.95}
                            : linspace(0.0, 0.95, 20)}}});
    return cfg.dump(2);
  }
  if (name == "fig7") {
    // Convergent price as a function of the minimum price.
    json cfg = base(scaled, 1005);
    cfg["sweep"] = json::array(
        {{{"param", "game.min_price"},
          {"values", scaled ? std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5}
                            : linspace(0.05, 0.5, 10)}}});
    return cfg.dump(2);
  }
  if (name == "fig8") {
    // Single traced session: Q-value evolution with the price lines.
    json cfg = base(scaled, 1006);
    cfg["sessions"] = 1;
    cfg["run"] = scaled ? decay_run(1e6, 1e4) : decay_run(1e9, 1e5);
    cfg["trace"] = {{"stride", scaled ? 100 : 1000}, {"sessions", {0}}};
    return cfg.dump(2);
  }
  if (name == "fig10") {
    // Convergent bid across the FPA weight.
    json cfg = base(scaled, 1007);
    cfg["game"] = {{"label", "mixed_auction"}, {"K", 10}, {"v", 1.0}, {"omega", 0.5}};
    cfg["sessions"] = scaled ? 20 : 100;
    cfg["sweep"] = json::array({{{"param", "game.omega"},
                                 {"values", linspace(0.0, 1.0, 11)}}});
    return cfg.dump(2);
  }
  if (name == "fig11") {
    // One-period memory: price against the discount factor.
    json cfg = base(scaled, 1008);
    cfg["mode"] = "memory";
    cfg["policy"]["beta"] = 1e-5;
    cfg["sessions"] = scaled ? 10 : 100;
    cfg["sweep"] = json::array(
        {{{"param", "update.delta"},
          {"values", scaled ? std::vector<double>{0.0, 0.25, 0.5, 0.65, 0.8, 0.95}
                            : linspace(0.0, 0.95, 20)}}});
    return cfg.dump(2);
  }
  if (name == "fig12") {
    // One-period memory at baseline: cycle-length distribution.
    json cfg = base(scaled, 1009);
    cfg["mode"] = "memory";
    cfg["policy"]["beta"] = 1e-5;
    cfg["sessions"] = scaled ? 20 : 100;
    return cfg.dump(2);
  }
  throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace collusim
