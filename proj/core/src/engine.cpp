#include "collusim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "collusim/metrics.hpp"

namespace collusim {

void SimConfig::validate() const {
  policy.validate();
  update.validate();
  init.validate();
  if (game.num_actions() > 32) throw std::invalid_argument("engine supports at most 32 actions");
  if (sessions < 1) throw std::invalid_argument("sessions must be >= 1");
  if (run == RunKind::kDecay) {
    if (convergence_window < 1) throw std::invalid_argument("convergence_window must be >= 1");
    if (horizon < convergence_window) {
      throw std::invalid_argument("horizon must be >= convergence_window");
    }
    if (policy.kind == PolicyKind::kEpsilonGreedy &&
        policy.epsilon_schedule == ScheduleKind::kConstant) {
      throw std::invalid_argument("decay runs need a decaying (or greedy) policy");
    }
  } else {
    if (policy.kind != PolicyKind::kEpsilonGreedy ||
        policy.epsilon_schedule != ScheduleKind::kConstant) {
      throw std::invalid_argument("constant runs need a constant epsilon-greedy policy");
    }
    if (!(policy.epsilon > 0.0 && policy.epsilon < 1.0)) {
      throw std::invalid_argument("constant runs need epsilon in (0,1)");
    }
    if (update.kind != UpdateKind::kAsynchronous) {
      throw std::invalid_argument("constant runs support asynchronous updating only");
    }
    if (mode != ObsMode::kMemoryless) {
      throw std::invalid_argument("constant runs support memoryless mode only");
    }
    if (expected_explorations < 0.0) throw std::invalid_argument("T must be >= 0");
    if (window_expected_explorations <= 0.0) throw std::invalid_argument("window T must be > 0");
  }
  if (init.kind == InitKind::kExplicit) {
    const std::size_t obs_count =
        mode == ObsMode::kMemoryless
            ? 1
            : static_cast<std::size_t>(game.num_actions()) * game.num_actions();
    if (init.table.size() != obs_count * game.num_actions()) {
      throw std::invalid_argument("explicit init table does not match mode/grid");
    }
  }
}

bool SimConfig::wants_trace(std::uint32_t session_index) const {
  if (trace_stride == 0) return false;
  if (trace_sessions.empty()) return session_index == 0;
  return std::find(trace_sessions.begin(), trace_sessions.end(), session_index) !=
         trace_sessions.end();
}

double skip_update_closed_form(double q_value, double target, double alpha, double delta,
                               std::uint64_t tau) {
  const double r = std::pow(1.0 - alpha * (1.0 - delta), static_cast<double>(tau));
  return r * q_value + (1.0 - r) * target;
}

std::vector<std::uint64_t> schedule_explorations(double eps, std::uint64_t block, Rng& rng) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
  const std::uint64_t count = rng.next_binomial(block, eps);
  return rng.sample_without_replacement(block, count);
}

namespace {

int min_index(std::uint32_t mask) { return std::countr_zero(mask); }

struct SessionState {
  const SimConfig& cfg;
  const GameSpec& game;
  int k;
  Rng rng;
  QState q0;
  QState q1;
  int obs0 = 0;
  int obs1 = 0;

  SessionState(const SimConfig& c, std::uint32_t session_index)
      : cfg(c),
        game(c.game),
        k(c.game.num_actions()),
        rng(Rng::for_stream(c.master_seed, session_index)),
        q0(init_q(c.game, c.update, c.init, c.mode, rng)),
        q1(init_q(c.game, c.update, c.init, c.mode, rng)) {
    if (c.mode == ObsMode::kOnePeriodMemory) {
      // No history exists yet: seed the shared observation pair uniformly.
      const int pair = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(k * k)));
      const int x = pair / k;
      const int y = pair % k;
      obs0 = x * k + y;
      obs1 = y * k + x;
    }
  }

  void record(std::vector<TracePoint>& trace, std::uint64_t t, int a0, int a1) {
    TracePoint p;
    p.t = t;
    p.action[0] = a0;
    p.action[1] = a1;
    p.price[0] = game.action_value(a0);
    p.price[1] = game.action_value(a1);
    p.argmax[0] = min_index(q0.argmax_mask(obs0));
    p.argmax[1] = min_index(q1.argmax_mask(obs1));
    p.q_second[0] = second_highest(q0.row(obs0));
    p.q_second[1] = second_highest(q1.row(obs1));
    const double d = cfg.update.delta;
    p.sustainable[0] = (1.0 - d) * p.q_second[0];
    p.sustainable[1] = (1.0 - d) * p.q_second[1];
    p.stationary = 2.0 * (1.0 - d) * std::max(p.q_second[0], p.q_second[1]);
    trace.push_back(p);
  }
};

}  // namespace

std::vector<std::pair<int, int>> detect_cycle(const QState& q0, const QState& q1,
                                              const GameSpec& game, ObsMode mode,
                                              std::pair<int, int> initial_obs_pair) {
  const int k = game.num_actions();
  if (mode == ObsMode::kMemoryless) {
    return {{min_index(q0.argmax_mask(0)), min_index(q1.argmax_mask(0))}};
  }
  std::vector<int> seen(static_cast<std::size_t>(k) * k, -1);
  std::vector<std::pair<int, int>> path;
  int a0 = initial_obs_pair.first;
  int a1 = initial_obs_pair.second;
  for (;;) {
    const int key = a0 * k + a1;
    if (seen[key] >= 0) {
      return {path.begin() + seen[key], path.end()};
    }
    seen[key] = static_cast<int>(path.size());
    const int n0 = min_index(q0.argmax_mask(a0 * k + a1));
    const int n1 = min_index(q1.argmax_mask(a1 * k + a0));
    path.emplace_back(n0, n1);
    a0 = n0;
    a1 = n1;
  }
}

SessionResult run_decay_session(const SimConfig& cfg, std::uint32_t session_index) {
  cfg.validate();
  if (cfg.run != RunKind::kDecay) throw std::invalid_argument("config is not a decay run");

  SessionState s(cfg, session_index);
  SessionResult result;
  const bool tracing = cfg.wants_trace(session_index);
  const bool memory = cfg.mode == ObsMode::kOnePeriodMemory;

  std::uint64_t stable = 0;
  std::uint64_t t = 0;
  for (; t < cfg.horizon; ++t) {
    const int a0 = select_action(s.q0, s.obs0, cfg.policy, t, s.rng);
    const int a1 = select_action(s.q1, s.obs1, cfg.policy, t, s.rng);
    const int next0 = memory ? a0 * s.k + a1 : 0;
    const int next1 = memory ? a1 * s.k + a0 : 0;

    const std::uint32_t pre0 = s.q0.argmax_mask(s.obs0);
    const std::uint32_t pre1 = s.q1.argmax_mask(s.obs1);
    apply_update(s.q0, s.obs0, a0, a1, next0, s.game, cfg.update);
    apply_update(s.q1, s.obs1, a1, a0, next1, s.game, cfg.update);
    const bool changed =
        s.q0.argmax_mask(s.obs0) != pre0 || s.q1.argmax_mask(s.obs1) != pre1;

    s.obs0 = next0;
    s.obs1 = next1;
    if (tracing && t % cfg.trace_stride == 0) s.record(result.trace, t, a0, a1);

    stable = changed ? 0 : stable + 1;
    if (stable >= cfg.convergence_window) {
      ++t;
      break;
    }
  }
  result.periods_elapsed = t;
  if (tracing) result.final_q = {s.q0, s.q1};
  if (stable >= cfg.convergence_window) {
    result.converged = true;
    if (memory) {
      auto cyc = detect_cycle(s.q0, s.q1, s.game, cfg.mode, {s.obs0 / s.k, s.obs0 % s.k});
      if (cyc.size() == 1) {
        result.convergent_actions = cyc.front();
      } else {
        result.cycle = std::move(cyc);
      }
    } else {
      result.convergent_actions = {min_index(s.q0.argmax_mask(0)), min_index(s.q1.argmax_mask(0))};
    }
  }
  return result;
}

SessionResult run_constant_session(const SimConfig& cfg, std::uint32_t session_index) {
  cfg.validate();
  if (cfg.run != RunKind::kConstant) throw std::invalid_argument("config is not a constant run");

  SessionState s(cfg, session_index);
  SessionResult result;
  const bool tracing = cfg.wants_trace(session_index);
  const double eps = cfg.policy.epsilon;
  const double alpha = cfg.update.alpha;
  const double delta = cfg.update.delta;

  const auto total = static_cast<std::uint64_t>(std::ceil(cfg.expected_explorations / eps));
  const auto window_len =
      static_cast<std::uint64_t>(std::ceil(cfg.window_expected_explorations / eps));
  const std::uint64_t window_start = total > window_len ? total - window_len : 0;
  const std::uint64_t block = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(1.0 / eps)));

  std::vector<std::uint64_t> freq(static_cast<std::size_t>(s.k) * s.k, 0);
  const PolicySpec greedy{.kind = PolicyKind::kGreedy};

  auto count_occupancy = [&](int a0, int a1, std::uint64_t at, std::uint64_t span) {
    if (at + span <= window_start) return;
    const std::uint64_t lo = std::max(at, window_start);
    freq[static_cast<std::size_t>(a0) * s.k + a1] += at + span - lo;
  };

  // One ordinary period; explore_flags bit 0/1 force an exploration draw for
  // the corresponding agent.
  auto step = [&](std::uint64_t t, unsigned explore_flags) {
    const int a0 = (explore_flags & 1u)
                       ? static_cast<int>(s.rng.next_below(static_cast<std::uint32_t>(s.k)))
                       : select_action(s.q0, 0, greedy, t, s.rng);
    const int a1 = (explore_flags & 2u)
                       ? static_cast<int>(s.rng.next_below(static_cast<std::uint32_t>(s.k)))
                       : select_action(s.q1, 0, greedy, t, s.rng);
    update_async(s.q0, 0, a0, a1, 0, s.game, cfg.update);
    update_async(s.q1, 0, a1, a0, 0, s.game, cfg.update);
    count_occupancy(a0, a1, t, 1);
    if (tracing && t % cfg.trace_stride == 0) s.record(result.trace, t, a0, a1);
  };

  // Advance through [t, until) with no scheduled explorations: step until the
  // greedy profile is a symmetric strict argmax whose reinforced fixed point
  // dominates both second-highest values, then jump with the closed form.
  auto advance = [&](std::uint64_t t, std::uint64_t until) {
    while (t < until) {
      const std::uint32_t m0 = s.q0.argmax_mask(0);
      const std::uint32_t m1 = s.q1.argmax_mask(0);
      if (m0 == m1 && std::has_single_bit(m0)) {
        const int a = min_index(m0);
        const double target = s.game.payoff(a, a) / (1.0 - delta);
        const double q2_0 = second_highest(s.q0.row(0));
        const double q2_1 = second_highest(s.q1.row(0));
        if (target > q2_0 && target > q2_1) {
          const std::uint64_t tau = until - t;
          s.q0.set(0, a, skip_update_closed_form(s.q0.q(0, a), target, alpha, delta, tau));
          s.q1.set(0, a, skip_update_closed_form(s.q1.q(0, a), target, alpha, delta, tau));
          count_occupancy(a, a, t, tau);
          return;
        }
      }
      step(t, 0u);
      ++t;
    }
  };

  std::uint64_t t = 0;
  for (std::uint64_t block_start = 0; block_start < total; block_start += block) {
    const std::uint64_t block_len = std::min(block, total - block_start);
    const auto ev0 = schedule_explorations(eps, block, s.rng);
    const auto ev1 = schedule_explorations(eps, block, s.rng);
    // Merge the two agents' event positions into (position, flags).
    std::vector<std::pair<std::uint64_t, unsigned>> events;
    events.reserve(ev0.size() + ev1.size());
    std::size_t i = 0, j = 0;
    while (i < ev0.size() || j < ev1.size()) {
      std::uint64_t pos;
      unsigned flags = 0;
      if (j >= ev1.size() || (i < ev0.size() && ev0[i] <= ev1[j])) {
        pos = ev0[i];
        flags |= 1u;
        if (j < ev1.size() && ev1[j] == pos) {
          flags |= 2u;
          ++j;
        }
        ++i;
      } else {
        pos = ev1[j];
        flags |= 2u;
        ++j;
      }
      if (pos < block_len) events.emplace_back(pos, flags);
    }
    for (const auto& [pos, flags] : events) {
      const std::uint64_t when = block_start + pos;
      advance(t, when);
      step(when, flags);
      t = when + 1;
    }
    advance(t, block_start + block_len);
    t = block_start + block_len;
  }

  result.periods_elapsed = total;
  if (tracing) result.final_q = {s.q0, s.q1};
  result.window_weighted_price = windowed_weighted_price(freq, s.game, cfg.window_include_asymmetric);
  std::uint64_t symmetric = 0;
  for (int a = 0; a < s.k; ++a) symmetric += freq[static_cast<std::size_t>(a) * s.k + a];
  result.window_symmetric_periods = symmetric;
  return result;
}

SessionResult run_session(const SimConfig& cfg, std::uint32_t session_index) {
  return cfg.run == RunKind::kDecay ? run_decay_session(cfg, session_index)
                                    : run_constant_session(cfg, session_index);
}

std::vector<SessionResult> run_batch(const SimConfig& cfg, int threads) {
  cfg.validate();
  std::vector<SessionResult> results(cfg.sessions);
  unsigned n = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
  n = std::max(1u, std::min<unsigned>(n, cfg.sessions));
  if (n == 1) {
    for (std::uint32_t i = 0; i < cfg.sessions; ++i) results[i] = run_session(cfg, i);
    return results;
  }
  std::atomic<std::uint32_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::uint32_t i = next.fetch_add(1);
        if (i >= cfg.sessions) return;
        results[i] = run_session(cfg, i);
      }
    });
  }
  for (auto& th : pool) th.join();
  return results;
}

}  // namespace collusim
