#include "collusim/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace collusim {

namespace {

constexpr double kEps = 1e-12;

}  // namespace

std::string to_string(GameLabel label) {
  switch (label) {
    case GameLabel::kBertrand: return "bertrand";
    case GameLabel::kPrisonersDilemma: return "pd";
    case GameLabel::kMixedAuction: return "mixed_auction";
    case GameLabel::kCustom: return "custom";
  }
  return "custom";
}

GameLabel game_label_from_string(const std::string& s) {
  if (s == "bertrand") return GameLabel::kBertrand;
  if (s == "pd") return GameLabel::kPrisonersDilemma;
  if (s == "mixed_auction") return GameLabel::kMixedAuction;
  if (s == "custom") return GameLabel::kCustom;
  throw std::invalid_argument("unknown game label: " + s);
}

GameSpec::GameSpec(ActionGrid grid, std::vector<double> payoff_row_major, std::vector<int> rank,
                   GameLabel label, std::map<std::string, double> params)
    : grid_(std::move(grid)),
      payoff_(std::move(payoff_row_major)),
      rank_(std::move(rank)),
      label_(label),
      params_(std::move(params)) {
  const int k = grid_.size();
  if (k < 2) throw std::invalid_argument("action grid needs at least 2 actions");
  for (int i = 1; i < k; ++i) {
    if (!(grid_.values[i] > grid_.values[i - 1])) {
      throw std::invalid_argument("action grid values must be strictly increasing");
    }
  }
  if (static_cast<int>(payoff_.size()) != k * k) {
    throw std::invalid_argument("payoff table must have K*K entries");
  }
  if (static_cast<int>(rank_.size()) != k) {
    throw std::invalid_argument("rank permutation must have K entries");
  }
  grid_of_rank_.assign(k, -1);
  for (int i = 0; i < k; ++i) {
    if (rank_[i] < 0 || rank_[i] >= k || grid_of_rank_[rank_[i]] != -1) {
      throw std::invalid_argument("rank must be a permutation of 0..K-1");
    }
    grid_of_rank_[rank_[i]] = i;
  }
  floor_payoff_ = *std::min_element(payoff_.begin(), payoff_.end());
}

double GameSpec::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("game parameter not set: " + name);
  return it->second;
}

double GameSpec::demand(int own, int opp) const {
  if (!has_demand()) throw std::logic_error("game has no demand decomposition");
  const double wtp = param("wtp");
  if (action_value(own) > wtp + kEps) return 0.0;
  if (own < opp) return 1.0;
  if (own == opp) return 0.5;
  return 0.0;
}

double GameSpec::marginal_cost() const {
  if (!has_demand()) throw std::logic_error("game has no demand decomposition");
  return param("cost");
}

GameSpec make_bertrand(int num_actions, double min_price, double wtp, double cost) {
  if (num_actions < 2) throw std::invalid_argument("bertrand: K must be >= 2");
  if (!(0.0 <= cost && cost < min_price && min_price <= wtp)) {
    throw std::invalid_argument("bertrand: need 0 <= cost < min_price <= wtp");
  }
  const int k = num_actions;
  ActionGrid grid;
  grid.values.resize(k);
  const double step = (wtp - min_price) / (k - 1);
  for (int i = 0; i < k; ++i) grid.values[i] = min_price + i * step;
  grid.values[k - 1] = wtp;

  std::vector<double> payoff(k * k, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double q = 0.0;
      if (i < j) q = 1.0;
      else if (i == j) q = 0.5;
      payoff[i * k + j] = (grid.values[i] - cost) * q;
    }
  }
  std::vector<int> rank(k);
  std::iota(rank.begin(), rank.end(), 0);  // lowest price is the strict NE
  return GameSpec(std::move(grid), std::move(payoff), std::move(rank), GameLabel::kBertrand,
                  {{"K", static_cast<double>(k)},
                   {"min_price", min_price},
                   {"wtp", wtp},
                   {"cost", cost}});
}

GameSpec make_prisoners_dilemma(double u_cd, double u_dd, double u_cc, double u_dc) {
  if (!(u_cd < u_dd && u_dd < u_cc && u_cc < u_dc)) {
    throw std::invalid_argument("pd: need u_CD < u_DD < u_CC < u_DC (strict)");
  }
  // Grid index 0 = defect, 1 = cooperate; defect is rank 0 (strict NE).
  ActionGrid grid{{0.0, 1.0}};
  std::vector<double> payoff = {u_dd, u_dc, u_cd, u_cc};
  return GameSpec(std::move(grid), std::move(payoff), {0, 1}, GameLabel::kPrisonersDilemma,
                  {{"u_cd", u_cd}, {"u_dd", u_dd}, {"u_cc", u_cc}, {"u_dc", u_dc}});
}

GameSpec make_mixed_auction(int num_actions, double valuation, double omega) {
  if (num_actions < 2) throw std::invalid_argument("auction: K must be >= 2");
  if (valuation <= 0.0) throw std::invalid_argument("auction: v must be positive");
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw std::invalid_argument("auction: omega must lie in [0,1]");
  }
  const int k = num_actions;
  ActionGrid grid;
  grid.values.resize(k);
  for (int i = 0; i < k; ++i) grid.values[i] = valuation * i / k;

  std::vector<double> payoff(k * k, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i > j) {
        const double price = omega * grid.values[i] + (1.0 - omega) * grid.values[j];
        payoff[i * k + j] = valuation - price;
      } else if (i == j) {
        payoff[i * k + j] = (valuation - grid.values[i]) / 2.0;
      }
    }
  }
  // Highest bid is the strict NE: rank reverses the grid order.
  std::vector<int> rank(k);
  for (int i = 0; i < k; ++i) rank[i] = k - 1 - i;
  return GameSpec(std::move(grid), std::move(payoff), std::move(rank), GameLabel::kMixedAuction,
                  {{"K", static_cast<double>(k)}, {"v", valuation}, {"omega", omega}});
}

AssumptionReport check_assumptions(const GameSpec& game) {
  AssumptionReport report;
  const int k = game.num_actions();
  const double floor = game.floor_payoff();
  auto add = [&](const std::string& id, int a, int b) {
    report.pass = false;
    report.violations.push_back({id, a + 1, b + 1});
  };

  // 1.1: floor < u(a_1,a_1) < u(a_2,a_2) < ... strictly increasing in rank.
  if (!(floor < game.payoff_by_rank(0, 0) - kEps)) add("1.1", 0, 0);
  for (int r = 1; r < k; ++r) {
    if (!(game.payoff_by_rank(r - 1, r - 1) < game.payoff_by_rank(r, r) - kEps)) {
      add("1.1", r, r);
    }
  }
  // 1.2: u(a_k, a_k') = floor whenever the opponent ranks strictly lower.
  for (int r = 0; r < k; ++r) {
    for (int rp = 0; rp < r; ++rp) {
      if (std::abs(game.payoff_by_rank(r, rp) - floor) > kEps) add("1.2", r, rp);
    }
  }
  // 1.3: every k > 1 admits a weakly profitable downward deviation.
  for (int r = 1; r < k; ++r) {
    bool found = false;
    for (int rp = 0; rp < r; ++rp) {
      if (game.payoff_by_rank(rp, r) >= game.payoff_by_rank(r, r) - kEps) {
        found = true;
        break;
      }
    }
    if (!found) add("1.3", r, r);
  }
  // 1.4: u(a_k, .) nondecreasing in the opponent's rank.
  for (int r = 0; r < k; ++r) {
    for (int rp = 1; rp < k; ++rp) {
      if (game.payoff_by_rank(r, rp) < game.payoff_by_rank(r, rp - 1) - kEps) add("1.4", r, rp);
    }
  }
  return report;
}

std::pair<double, double> benchmark_profits(const GameSpec& game) {
  const double r_n = 2.0 * game.payoff_by_rank(0, 0);
  double r_m = r_n;
  for (int i = 0; i < game.num_actions(); ++i) {
    r_m = std::max(r_m, 2.0 * game.payoff(i, i));
  }
  return {r_n, r_m};
}

std::string GameSpec::to_json_string() const {
  nlohmann::json j;
  j["label"] = collusim::to_string(label_);
  j["grid"] = grid_.values;
  j["payoff"] = payoff_;
  j["rank"] = rank_;
  j["params"] = params_;
  return j.dump();
}

GameSpec GameSpec::from_json_string(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ActionGrid grid;
  grid.values = j.at("grid").get<std::vector<double>>();
  auto payoff = j.at("payoff").get<std::vector<double>>();
  auto rank = j.at("rank").get<std::vector<int>>();
  std::map<std::string, double> params;
  if (j.contains("params")) params = j.at("params").get<std::map<std::string, double>>();
  const GameLabel label =
      j.contains("label") ? game_label_from_string(j.at("label").get<std::string>())
                          : GameLabel::kCustom;
  return GameSpec(std::move(grid), std::move(payoff), std::move(rank), label, std::move(params));
}

}  // namespace collusim
