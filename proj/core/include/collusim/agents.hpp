#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "collusim/game.hpp"
#include "collusim/rng.hpp"

namespace collusim {

enum class ObsMode { kMemoryless, kOnePeriodMemory };

enum class PolicyKind { kGreedy, kEpsilonGreedy, kBoltzmann };
enum class ScheduleKind { kConstant, kExpDecay };
enum class UpdateKind { kAsynchronous, kSynchronous, kSynchronousDownward };
enum class InitKind { kUniformOpponent, kOptimisticUniform, kExplicit };

struct PolicySpec {
  PolicyKind kind = PolicyKind::kEpsilonGreedy;
  ScheduleKind epsilon_schedule = ScheduleKind::kExpDecay;
  double epsilon = 0.0;  // constant schedule, must lie in (0,1]
  double beta = 1e-4;    // exp decay rate, must be > 0
  // Boltzmann temperature schedule.
  ScheduleKind temperature_schedule = ScheduleKind::kConstant;
  double tau = 1.0;
  double tau_beta = 0.0;

  double epsilon_at(std::uint64_t t) const;
  double temperature_at(std::uint64_t t) const;
  void validate() const;
};

struct UpdateRuleSpec {
  UpdateKind kind = UpdateKind::kAsynchronous;
  double alpha = 0.15;  // learning rate in (0,1]
  double delta = 0.95;  // discount factor in [0,1)

  void validate() const;
};

struct InitSpec {
  InitKind kind = InitKind::kUniformOpponent;
  double lo = 1.0;  // optimistic draw bounds, lo < hi
  double hi = 2.0;
  bool scale_by_horizon = false;  // divide optimistic draws by (1-delta)
  std::vector<double> table;      // explicit initialization

  void validate() const;
};

// One agent's Q-values indexed by (observation, action). Memoryless mode has
// a single observation; one-period memory has K^2 observations (both last
// actions). Each row caches its max and argmax bitmask so greedy selection
// and convergence tracking stay O(1) per update.
class QState {
 public:
  QState(int num_actions, ObsMode mode);

  int num_actions() const { return num_actions_; }
  int obs_count() const { return obs_count_; }
  ObsMode mode() const { return mode_; }

  double q(int obs, int action) const { return q_[obs * num_actions_ + action]; }
  std::span<const double> row(int obs) const {
    return {q_.data() + static_cast<std::size_t>(obs) * num_actions_,
            static_cast<std::size_t>(num_actions_)};
  }
  double row_max(int obs) const { return row_max_[obs]; }
  std::uint32_t argmax_mask(int obs) const { return argmax_mask_[obs]; }

  void set(int obs, int action, double value);
  void fill(double value);

 private:
  void recompute_row(int obs);

  int num_actions_;
  int obs_count_;
  ObsMode mode_;
  std::vector<double> q_;
  std::vector<double> row_max_;
  std::vector<std::uint32_t> argmax_mask_;
};

// Initial Q table. uniform_opponent fills every cell of action a with
// sum_a' u(a,a') / ((1-delta) K); optimistic draws i.i.d. U(lo,hi);
// explicit copies the provided table.
QState init_q(const GameSpec& game, const UpdateRuleSpec& rule, const InitSpec& init,
              ObsMode mode, Rng& rng);

// One action draw under the policy at period t. Greedy ties break uniformly
// at random; exploration draws cover all K actions (including the greedy one).
int select_action(const QState& q, int obs, const PolicySpec& policy, std::uint64_t t, Rng& rng);

// Standard asynchronous update of the chosen cell:
// Q <- (1-a) Q + a [u(a_self, a_opp) + delta max_a' Q(next_obs, a')].
void update_async(QState& q, int obs, int a_self, int a_opp, int next_obs, const GameSpec& game,
                  const UpdateRuleSpec& rule);

// Synchronous update: every cell of obs receives the counterfactual payoff
// u(a, a_opp) with the opponent's action held fixed.
void update_sync(QState& q, int obs, int a_opp, int next_obs, const GameSpec& game,
                 const UpdateRuleSpec& rule);

// Synchronous updating with downward demand: the chosen cell updates as
// asynchronous; higher-priced cells update with the profit bound
// (a - c) q(a_self, a_opp) clamped from above by the old value, lower-priced
// cells likewise clamped from below. Requires a demand decomposition.
void update_sync_downward(QState& q, int obs, int a_self, int a_opp, int next_obs,
                          const GameSpec& game, const UpdateRuleSpec& rule);

// Dispatch on rule.kind.
void apply_update(QState& q, int obs, int a_self, int a_opp, int next_obs, const GameSpec& game,
                  const UpdateRuleSpec& rule);

// Snapshot rows as CSV lines "agent,obs,action,q_value".
void append_qstate_csv(const QState& q, int agent, std::string& out);

}  // namespace collusim
