#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "collusim/agents.hpp"
#include "collusim/game.hpp"
#include "collusim/rng.hpp"

namespace collusim {

enum class RunKind { kDecay, kConstant };

// Full experiment description for one batch of seeded sessions.
struct SimConfig {
  GameSpec game;
  PolicySpec policy;
  UpdateRuleSpec update;
  InitSpec init;
  ObsMode mode = ObsMode::kMemoryless;
  RunKind run = RunKind::kDecay;

  // Decay mode: hard stop and convergence window.
  std::uint64_t horizon = 10'000'000;
  std::uint64_t convergence_window = 10'000;

  // Constant mode: expected explorations per agent; epsilon comes from the
  // policy's constant schedule. The run lasts ceil(T/eps) periods and the
  // weighted window covers the last ceil(window_T/eps).
  double expected_explorations = 10'000.0;
  double window_expected_explorations = 10'000.0;
  bool window_include_asymmetric = false;

  std::uint64_t master_seed = 1;
  std::uint32_t sessions = 1;

  // Trace sampling; 0 disables. Only sessions listed in trace_sessions
  // record a trace.
  std::uint32_t trace_stride = 0;
  std::vector<std::uint32_t> trace_sessions;

  void validate() const;
  bool wants_trace(std::uint32_t session_index) const;
};

struct TracePoint {
  std::uint64_t t = 0;
  int action[2] = {0, 0};
  double price[2] = {0.0, 0.0};
  int argmax[2] = {0, 0};        // lowest-index argmax per agent
  double q_second[2] = {0.0, 0.0};
  double sustainable[2] = {0.0, 0.0};
  double stationary = 0.0;
};

struct SessionResult {
  bool converged = false;
  std::optional<std::pair<int, int>> convergent_actions;       // grid indices
  std::optional<std::vector<std::pair<int, int>>> cycle;       // length >= 2
  std::uint64_t periods_elapsed = 0;
  std::optional<double> window_weighted_price;                 // constant mode
  std::uint64_t window_symmetric_periods = 0;
  std::vector<TracePoint> trace;
  std::optional<std::pair<QState, QState>> final_q;            // kept for traced sessions
};

// Closed form for tau identical updates of a cell repeatedly reinforced at
// target u/(1-delta):
//   (1 - a(1-d))^tau Q + [1 - (1 - a(1-d))^tau] target.
// Valid while the cell stays the strict argmax, i.e. when the target exceeds
// the second-highest Q-value.
double skip_update_closed_form(double q_value, double target, double alpha, double delta,
                               std::uint64_t tau);

// Exploration periods for one agent within one block of 1/eps periods:
// Binomial(block, eps) events placed uniformly without replacement.
std::vector<std::uint64_t> schedule_explorations(double eps, std::uint64_t block, Rng& rng);

// Greedy-orbit probe: freezes the tables and follows min-index greedy play
// from `initial_obs_pair`, returning the minimal repeating cycle of action
// pairs. Memoryless tables give a single pair (length 1).
std::vector<std::pair<int, int>> detect_cycle(const QState& q0, const QState& q1,
                                              const GameSpec& game, ObsMode mode,
                                              std::pair<int, int> initial_obs_pair);

SessionResult run_decay_session(const SimConfig& cfg, std::uint32_t session_index);
SessionResult run_constant_session(const SimConfig& cfg, std::uint32_t session_index);
SessionResult run_session(const SimConfig& cfg, std::uint32_t session_index);

// All sessions, deterministically seeded as stream(master_seed, index) and
// independent of execution order; threads <= 0 uses all hardware threads.
std::vector<SessionResult> run_batch(const SimConfig& cfg, int threads = 0);

}  // namespace collusim
