#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "collusim/agents.hpp"
#include "collusim/engine.hpp"
#include "collusim/game.hpp"

namespace collusim {

// Second-highest VALUE of a row; with ties at the top this equals the max.
double second_highest(std::span<const double> values);

// (1-delta) * Q^(2): the lowest price whose winner-take-all profit still
// reinforces its own choice.
double sustainable_price(const QState& q, double delta, int obs = 0);

// 2 (1-delta) * max(Q_i^(2), Q_j^(2)): the lowest price at which shared
// demand reinforces both agents' choices.
double stationary_price(const QState& q_i, const QState& q_j, double delta, int obs_i = 0,
                        int obs_j = 0);

// The price a single session settled on: the symmetric value, the mean of an
// asymmetric pair, or a cycle's time-average pair mean. Empty if the session
// did not converge.
std::optional<double> session_price(const SessionResult& result, const GameSpec& game);

// Mean convergent price across converged sessions. Throws if none converged.
double avg_convergent_price(std::span<const SessionResult> results, const GameSpec& game);

// CI = (r - r_N) / (r_M - r_N) with r taken as the mean convergent price
// (symmetric convergence makes total profit equal the price).
double collusion_index(double mean_price, const GameSpec& game);

// Occupancy-weighted mean price over a K*K frequency table (row-major,
// own x opp). Symmetric profiles only unless include_asymmetric, in which
// case off-diagonal cells contribute their pair mean. Empty when no period
// qualifies.
std::optional<double> windowed_weighted_price(std::span<const std::uint64_t> freq,
                                              const GameSpec& game,
                                              bool include_asymmetric = false);

// Bilateral rebounds (both greedy actions strictly rising) that start from a
// symmetric greedy profile priced strictly above the stationary line and both
// sustainable lines. Expects a stride-1 trace.
int count_bilateral_rebounds_above_stationary(std::span<const TracePoint> trace);

struct AggregateReport {
  double mean_price = 0.0;       // NaN when no session converged
  double collusion_index = 0.0;  // NaN likewise
  double std_error = 0.0;
  std::vector<std::optional<double>> prices;  // per session
  double share_converged = 0.0;
  std::map<int, std::uint64_t> cycle_length_histogram;
  std::optional<double> mean_window_price;  // constant mode
};

AggregateReport aggregate(std::span<const SessionResult> results, const GameSpec& game);

}  // namespace collusim
