#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "collusim/digraph.hpp"
#include "collusim/game.hpp"

namespace collusim::stability {

using StateId = std::uint32_t;
inline constexpr std::uint8_t kUnreachable = 0xff;

// Thrown when an instance would enumerate more states than its budget.
struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Q-value grid: eta-spaced points on [q_lower, q_upper] with q_lower the
// floor discounted payoff and every u(a,a')/(1-delta) grid-aligned.
struct GridSpec {
  double eta = 0.0;
  double q_lower = 0.0;
  double q_upper = 0.0;
  int points_per_axis = 0;

  double value(int coord) const { return q_lower + coord * eta; }
};

// Validates alignment and builds the grid. q_upper defaults to the minimal
// admissible bound max u/(1-delta); pass a larger multiple of eta to cover
// optimistic-initialization ranges.
GridSpec make_grid(const GameSpec& game, double delta, double eta,
                   std::optional<double> q_upper = std::nullopt);

// One discretized verification instance. States are pairs of K-vectors of
// grid coordinates, indexed 0 .. P^(2K)-1 in mixed radix (agent 0's cells
// first, little-endian).
class Instance {
 public:
  Instance(GameSpec game, double alpha, double delta, GridSpec grid,
           std::uint64_t state_budget = 1'000'000);

  const GameSpec& game() const { return game_; }
  const GridSpec& grid() const { return grid_; }
  double alpha() const { return alpha_; }
  double delta() const { return delta_; }
  int num_actions() const { return k_; }
  std::uint64_t state_count() const { return state_count_; }
  int payoff_coord(int own, int opp) const { return ucoord_[own * k_ + opp]; }
  int ne_action() const { return ne_action_; }  // grid index of the strict-NE action

  void unpack(StateId s, int* coords) const;  // 2K coordinates
  StateId pack(const int* coords) const;
  std::uint64_t pack_radix(int cell) const { return radix_[cell]; }

  // Snap-with-progress update of one cell: exact update, rounded to the
  // nearest grid point with ties toward the target; a rounding that returns
  // the old coordinate while off-target instead moves one step toward it.
  int update_coord(int old_coord, int payoff_coord, int max_coord) const;

  // Image of both agents playing (a0, a1) from s, updating simultaneously.
  StateId image(StateId s, int a0, int a1) const;

 private:
  GameSpec game_;
  double alpha_;
  double delta_;
  GridSpec grid_;
  int k_;
  int ne_action_;
  std::uint64_t state_count_;
  std::vector<int> ucoord_;
  std::vector<std::uint64_t> radix_;  // P^i for i in [0, 2K]
};

// Precomputed images of every action profile plus per-agent argmax masks.
struct SuccessorTable {
  int k = 0;
  std::vector<StateId> images;        // state * K*K + a0 * K + a1
  std::vector<std::uint16_t> mask0;   // per-state argmax bitmask, agent 0
  std::vector<std::uint16_t> mask1;

  std::uint16_t argmax0(StateId s) const { return mask0[s]; }
  std::uint16_t argmax1(StateId s) const { return mask1[s]; }
  StateId image(StateId s, int a0, int a1) const {
    return images[static_cast<std::size_t>(s) * k * k + a0 * k + a1];
  }
};

SuccessorTable build_successors(const Instance& inst, int threads = 0);

// Deduplicated per-state transition edges weighted by mutation count, the
// shortest-path substrate for multi-step costs.
struct MutationEdges {
  std::vector<std::uint32_t> offsets;
  std::vector<StateId> targets;
  std::vector<std::uint8_t> weights;
};
MutationEdges build_mutation_edges(const Instance& inst, const SuccessorTable& table,
                                   int threads = 0);

// Distinct images of argmax-profile play (the unperturbed successor set).
std::vector<StateId> unperturbed_successors(const Instance& inst, const SuccessorTable& table,
                                            StateId s);

// Closed communicating classes of the unperturbed dynamics.
std::vector<std::vector<StateId>> recurrent_classes(const Instance& inst,
                                                    const SuccessorTable& table);

bool is_absorbing(const Instance& inst, const SuccessorTable& table, StateId s);

// Both agents share a strict argmax a with Q = u(a,a)/(1-delta).
bool absorbing_characterization(const Instance& inst, const SuccessorTable& table, StateId s);

// Q-values of the competitive anchor state, undiscretized:
// u(a, a_1) + delta u(a_1, a_1)/(1-delta).
std::vector<double> nash_state_values(const GameSpec& game, double delta);

// The state where every cell holds the one-shot-deviation value against the
// NE action. Throws if any required value is off-grid.
StateId build_nash_state(const Instance& inst);

// Mutations needed for s -> s' in one step: 0 greedy, 1 one deviator,
// 2 both, kUnreachable otherwise.
std::uint8_t one_step_cost(const Instance& inst, const SuccessorTable& table, StateId s,
                           StateId s_prime);

// Multi-step minimal mutation cost from `source` to every state.
std::vector<std::uint8_t> min_transition_costs_from(const Instance& inst,
                                                    const SuccessorTable& table, StateId source);

// Pairwise C(s, s'); prefer the bulk forms when querying many targets.
std::uint8_t min_transition_cost(const Instance& inst, const SuccessorTable& table, StateId s,
                                 StateId s_prime);

// Row-major |absorbing| x |absorbing| matrix of C(s, s').
std::vector<std::uint8_t> cost_matrix(const Instance& inst, const SuccessorTable& table,
                                      const std::vector<StateId>& absorbing, int threads = 0);

// Roots whose spanning arborescence cost attains the minimum.
std::vector<StateId> stable_states(const std::vector<StateId>& absorbing,
                                   const std::vector<std::uint64_t>& arborescence_costs);

// Perturbation map g used by the comparison order: for each non-NE action a,
// the closest strictly-lower-ranked action whose deviation payoff against a
// weakly beats staying at (a, a).
std::vector<int> build_perturbation_map(const GameSpec& game);

// All strictly-lower-ranked actions satisfying the deviation criterion.
std::vector<int> valid_perturbation_set(const GameSpec& game, int action);

enum class OrderResult { kLess, kGreater, kIncomparable };

// The strict partial order over absorbing states used by the spanning-tree
// argument; `g` maps each played action to its prescribed perturbation.
OrderResult order_compare(const Instance& inst, const SuccessorTable& table, StateId s,
                          StateId s_prime, const std::vector<int>& g, StateId nash_state);

// After any single deviation from the anchor state the unperturbed closure
// ends where it started.
bool check_single_mutation_return(const Instance& inst, const SuccessorTable& table,
                                  StateId nash_state);

// Every other absorbing state has a one-mutation successor strictly
// below it in the order.
bool check_one_mutation_descent(const Instance& inst, const SuccessorTable& table,
                                const std::vector<StateId>& absorbing,
                                const std::vector<std::uint8_t>& costs,
                                const std::vector<int>& g, StateId nash_state);

// Closed-form valid-perturbation interval for the omega-weighted auction at
// standing bid b, intersected with the bid grid.
struct PerturbationInterval {
  double lo_exclusive = 0.0;
  double hi_inclusive = 0.0;
  std::vector<int> grid_indices;
};
PerturbationInterval valid_perturbations_auction(int num_actions, double valuation, double omega,
                                                 double bid);

struct StabilityReport {
  std::uint64_t state_count = 0;
  int points_per_axis = 0;
  std::size_t recurrent_class_count = 0;
  bool all_singletons = false;
  bool absorbing_characterization_ok = false;
  StateId nash_state = 0;
  std::vector<StateId> absorbing;
  std::vector<std::uint8_t> costs;                // row-major C(s,s') over `absorbing`
  std::vector<std::uint64_t> arborescence_costs;  // aligned with `absorbing`
  std::vector<StateId> stable_set;
  bool single_mutation_return_ok = false;
  bool order_irreflexive = false;
  bool order_transitive = false;
  bool one_mutation_descent_ok = false;
  bool g_ambiguous = false;  // alternative g choices disagree on comparability
  double elapsed_seconds = 0.0;
  std::vector<std::pair<std::string, double>> phase_seconds;

  bool pass() const {
    return all_singletons && absorbing_characterization_ok && single_mutation_return_ok &&
           order_irreflexive && order_transitive && one_mutation_descent_ok &&
           stable_set.size() == 1 && stable_set.front() == nash_state;
  }
};

StabilityReport verify(const Instance& inst, int threads = 0);

std::string report_to_json(const StabilityReport& report, const Instance& inst);

// DOT dump of the absorbing-state cost digraph (finite-cost edges only).
std::string cost_digraph_dot(const Instance& inst, const std::vector<StateId>& absorbing,
                             const std::vector<std::uint8_t>& costs, StateId nash_state);

}  // namespace collusim::stability
