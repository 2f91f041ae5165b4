#include "collusim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace collusim {

double second_highest(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("need at least 2 values");
  double best = -std::numeric_limits<double>::infinity();
  double second = best;
  for (double v : values) {
    if (v > best) {
      second = best;
      best = v;
    } else if (v > second) {
      second = v;
    }
  }
  return second;
}

double sustainable_price(const QState& q, double delta, int obs) {
  return (1.0 - delta) * second_highest(q.row(obs));
}

double stationary_price(const QState& q_i, const QState& q_j, double delta, int obs_i,
                        int obs_j) {
  const double s = std::max(second_highest(q_i.row(obs_i)), second_highest(q_j.row(obs_j)));
  return 2.0 * (1.0 - delta) * s;
}

std::optional<double> session_price(const SessionResult& result, const GameSpec& game) {
  if (!result.converged) return std::nullopt;
  if (result.convergent_actions) {
    const auto [a, b] = *result.convergent_actions;
    return 0.5 * (game.action_value(a) + game.action_value(b));
  }
  if (result.cycle && !result.cycle->empty()) {
    double sum = 0.0;
    for (const auto& [a, b] : *result.cycle) {
      sum += 0.5 * (game.action_value(a) + game.action_value(b));
    }
    return sum / static_cast<double>(result.cycle->size());
  }
  return std::nullopt;
}

double avg_convergent_price(std::span<const SessionResult> results, const GameSpec& game) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : results) {
    if (auto p = session_price(r, game)) {
      sum += *p;
      ++n;
    }
  }
  if (n == 0) throw std::runtime_error("no converged session");
  return sum / static_cast<double>(n);
}

double collusion_index(double mean_price, const GameSpec& game) {
  const auto [r_n, r_m] = benchmark_profits(game);
  if (!(r_m > r_n)) throw std::runtime_error("degenerate benchmark profits (r_M <= r_N)");
  return (mean_price - r_n) / (r_m - r_n);
}

std::optional<double> windowed_weighted_price(std::span<const std::uint64_t> freq,
                                              const GameSpec& game, bool include_asymmetric) {
  const int k = game.num_actions();
  if (freq.size() != static_cast<std::size_t>(k) * k) {
    throw std::invalid_argument("frequency table must have K*K entries");
  }
  double weighted = 0.0;
  std::uint64_t total = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const std::uint64_t n = freq[i * k + j];
      if (n == 0) continue;
      if (i == j) {
        weighted += game.action_value(i) * static_cast<double>(n);
        total += n;
      } else if (include_asymmetric) {
        weighted += 0.5 * (game.action_value(i) + game.action_value(j)) * static_cast<double>(n);
        total += n;
      }
    }
  }
  if (total == 0) return std::nullopt;
  return weighted / static_cast<double>(total);
}

int count_bilateral_rebounds_above_stationary(std::span<const TracePoint> trace) {
  int count = 0;
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
    const TracePoint& cur = trace[i];
    const TracePoint& nxt = trace[i + 1];
    // A standing period: both agents actually played their common greedy
    // price. Exploration periods are not standing.
    if (cur.argmax[0] != cur.argmax[1]) continue;
    if (cur.action[0] != cur.argmax[0] || cur.action[1] != cur.argmax[1]) continue;
    const double standing = cur.price[0];
    if (!(standing > cur.stationary && standing > cur.sustainable[0] &&
          standing > cur.sustainable[1])) {
      continue;
    }
    if (nxt.argmax[0] > cur.argmax[0] && nxt.argmax[1] > cur.argmax[1]) ++count;
  }
  return count;
}

AggregateReport aggregate(std::span<const SessionResult> results, const GameSpec& game) {
  AggregateReport report;
  report.prices.reserve(results.size());
  double sum = 0.0, sumsq = 0.0;
  std::size_t n = 0;
  std::size_t converged = 0;
  double window_sum = 0.0;
  std::size_t window_n = 0;
  for (const auto& r : results) {
    auto p = session_price(r, game);
    report.prices.push_back(p);
    if (r.converged) {
      ++converged;
      int len = 1;
      if (r.cycle) len = static_cast<int>(r.cycle->size());
      ++report.cycle_length_histogram[len];
    }
    if (p) {
      sum += *p;
      sumsq += *p * *p;
      ++n;
    }
    if (r.window_weighted_price) {
      window_sum += *r.window_weighted_price;
      ++window_n;
    }
  }
  report.share_converged =
      results.empty() ? 0.0 : static_cast<double>(converged) / static_cast<double>(results.size());
  if (n > 0) {
    report.mean_price = sum / static_cast<double>(n);
    report.collusion_index = collusion_index(report.mean_price, game);
    if (n > 1) {
      const double var = (sumsq - sum * sum / static_cast<double>(n)) / static_cast<double>(n - 1);
      report.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
    }
  } else {
    report.mean_price = std::numeric_limits<double>::quiet_NaN();
    report.collusion_index = std::numeric_limits<double>::quiet_NaN();
  }
  if (window_n > 0) report.mean_window_price = window_sum / static_cast<double>(window_n);
  return report;
}

}  // namespace collusim
