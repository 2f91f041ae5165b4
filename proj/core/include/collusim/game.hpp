#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace collusim {

// Ordered finite action grid (prices or bids), strictly increasing.
struct ActionGrid {
  std::vector<double> values;
  int size() const { return static_cast<int>(values.size()); }
};

enum class GameLabel { kBertrand, kPrisonersDilemma, kMixedAuction, kCustom };

std::string to_string(GameLabel label);
GameLabel game_label_from_string(const std::string& s);

struct AssumptionViolation {
  std::string id;  // one of "1.1", "1.2", "1.3", "1.4"
  int k = 0;       // witness pair, 1-based rank indices
  int k_prime = 0;
};

struct AssumptionReport {
  bool pass = true;
  std::vector<AssumptionViolation> violations;
};

// Symmetric two-player stage game on an ordered action grid. The payoff
// table is shared: player i earns payoff(a_i, a_j) whenever i plays grid
// index a_i against a_j. The rank permutation maps grid order to the
// competitive order, rank 0 being the strict-NE action (lowest price for
// Bertrand/PD, highest bid for auctions).
class GameSpec {
 public:
  GameSpec(ActionGrid grid, std::vector<double> payoff_row_major, std::vector<int> rank,
           GameLabel label, std::map<std::string, double> params);

  int num_actions() const { return grid_.size(); }
  const ActionGrid& grid() const { return grid_; }
  double action_value(int grid_index) const { return grid_.values[grid_index]; }

  // Payoff of playing grid index `own` against `opp`.
  double payoff(int own, int opp) const { return payoff_[own * num_actions() + opp]; }
  const std::vector<double>& payoff_table() const { return payoff_; }
  double floor_payoff() const { return floor_payoff_; }

  // rank index (0-based; 0 = strict-NE action) of a grid index, and back.
  int rank_of(int grid_index) const { return rank_[grid_index]; }
  int grid_of_rank(int rank_index) const { return grid_of_rank_[rank_index]; }
  // Payoff indexed by rank: u(rank own, rank opp).
  double payoff_by_rank(int own_rank, int opp_rank) const {
    return payoff(grid_of_rank_[own_rank], grid_of_rank_[opp_rank]);
  }

  GameLabel label() const { return label_; }
  const std::map<std::string, double>& params() const { return params_; }
  double param(const std::string& name) const;

  // Demand decomposition, available for Bertrand-class games only: the
  // quantity sold at (own, opp) and the marginal cost. Required by the
  // downward-demand update rule.
  bool has_demand() const { return label_ == GameLabel::kBertrand; }
  double demand(int own, int opp) const;
  double marginal_cost() const;

  std::string to_json_string() const;
  static GameSpec from_json_string(const std::string& text);

 private:
  ActionGrid grid_;
  std::vector<double> payoff_;
  std::vector<int> rank_;
  std::vector<int> grid_of_rank_;
  GameLabel label_;
  std::map<std::string, double> params_;
  double floor_payoff_ = 0.0;
};

// K evenly spaced prices on [min_price, wtp]; winner-take-all demand with
// equal split on ties. Requires 0 <= cost < min_price <= wtp.
GameSpec make_bertrand(int num_actions, double min_price, double wtp, double cost);

// 2x2 game with u(C,D) < u(D,D) < u(C,C) < u(D,C); defect is the strict NE.
GameSpec make_prisoners_dilemma(double u_cd, double u_dd, double u_cc, double u_dc);

// Bids {0, v/K, ..., (K-1)v/K}; the higher bidder wins and pays
// omega*b_win + (1-omega)*b_lose; ties split (v-b)/2 each.
GameSpec make_mixed_auction(int num_actions, double valuation, double omega);

// Exhaustively tests Assumptions 1.1-1.4 over the rank-ordered table.
AssumptionReport check_assumptions(const GameSpec& game);

// (r_N, r_M): total profit at the strict NE and the best symmetric profile.
std::pair<double, double> benchmark_profits(const GameSpec& game);

}  // namespace collusim
