#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "collusim/engine.hpp"
#include "collusim/metrics.hpp"

using namespace collusim;

namespace {

SimConfig baseline_decay() {
  SimConfig cfg{.game = make_bertrand(10, 0.1, 1.0, 0.0)};
  cfg.policy = {.kind = PolicyKind::kEpsilonGreedy,
                .epsilon_schedule = ScheduleKind::kExpDecay,
                .beta = 1e-4};
  cfg.update = {.alpha = 0.15, .delta = 0.95};
  cfg.run = RunKind::kDecay;
  cfg.horizon = 10'000'000;
  cfg.convergence_window = 10'000;
  cfg.master_seed = 99;
  cfg.sessions = 4;
  return cfg;
}

SimConfig baseline_constant(double delta) {
  SimConfig cfg{.game = make_bertrand(10, 0.1, 1.0, 0.0)};
  cfg.policy = {.kind = PolicyKind::kEpsilonGreedy,
                .epsilon_schedule = ScheduleKind::kConstant,
                .epsilon = 1e-3};
  cfg.update = {.alpha = 0.15, .delta = delta};
  cfg.run = RunKind::kConstant;
  cfg.expected_explorations = 1e3;
  cfg.window_expected_explorations = 1e3;
  cfg.master_seed = 7;
  cfg.sessions = 2;
  return cfg;
}

}  // namespace

TEST_CASE("skip-ahead closed form") {
  CHECK(skip_update_closed_form(5.0, 1.0, 0.15, 0.95, 0) == doctest::Approx(5.0));
  // tau -> infinity approaches the reinforced fixed point.
  CHECK(skip_update_closed_form(5.0, 1.0, 0.15, 0.95, 10'000'000) == doctest::Approx(1.0));

  // tau = 100 equals one hundred iterated one-step updates.
  const double alpha = 0.15, delta = 0.95;
  const double u = 0.05;
  const double target = u / (1.0 - delta);
  double q = 5.0;
  for (int i = 0; i < 100; ++i) q = (1.0 - alpha) * q + alpha * (u + delta * q);
  CHECK(std::abs(skip_update_closed_form(5.0, target, alpha, delta, 100) - q) < 1e-9);
}

TEST_CASE("skip-ahead equals iteration on random tuples") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const double alpha = 0.01 + 0.99 * rng.next_double();
    const double delta = 0.99 * rng.next_double();
    const double u = rng.next_double();
    const double target = u / (1.0 - delta);
    const double q0 = rng.next_uniform(0.0, 2.0 * target + 1.0);
    const auto tau = 1 + rng.next_below(1000);
    double q = q0;
    for (std::uint64_t i = 0; i < tau; ++i) q = (1.0 - alpha) * q + alpha * (u + delta * q);
    const double closed = skip_update_closed_form(q0, target, alpha, delta, tau);
    CHECK(std::abs(closed - q) <= 1e-9 * std::max(1.0, std::abs(q)));
  }
}

TEST_CASE("exploration schedule distribution") {
  Rng rng(37);
  // Binomial(2, 1/2): counts 0,1,2 with probabilities 1/4, 1/2, 1/4.
  std::vector<std::uint64_t> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[schedule_explorations(0.5, 2, rng).size()];
  auto chi = [&](double e0, double e1, double e2) {
    const double d0 = counts[0] - e0, d1 = counts[1] - e1, d2 = counts[2] - e2;
    return d0 * d0 / e0 + d1 * d1 / e1 + d2 * d2 / e2;
  };
  CHECK(chi(n / 4.0, n / 2.0, n / 4.0) < 13.82);  // df=2, p=0.001

  // Mean events per block is 1 within 3 sigma, for a finer epsilon.
  const double eps = 0.01;
  const std::uint64_t block = 100;
  double total = 0.0;
  const int blocks = 100000;
  for (int i = 0; i < blocks; ++i) {
    total += static_cast<double>(schedule_explorations(eps, block, rng).size());
  }
  const double mean = total / blocks;
  const double sigma_mean = std::sqrt(block * eps * (1 - eps) / blocks);
  CHECK(std::abs(mean - 1.0) < 3.0 * sigma_mean);

  // Placements are distinct and inside the block.
  for (int i = 0; i < 100; ++i) {
    const auto ev = schedule_explorations(0.2, 50, rng);
    for (std::size_t j = 0; j + 1 < ev.size(); ++j) CHECK(ev[j] < ev[j + 1]);
    if (!ev.empty()) CHECK(ev.back() < 50);
  }
}

TEST_CASE("greedy-only decay run converges in exactly the window length") {
  SimConfig cfg{.game = make_prisoners_dilemma(0, 1, 2, 3)};
  cfg.policy = {.kind = PolicyKind::kGreedy};
  cfg.update = {.alpha = 0.5, .delta = 0.5};
  cfg.run = RunKind::kDecay;
  cfg.horizon = 100'000;
  cfg.convergence_window = 250;
  cfg.sessions = 1;
  cfg.master_seed = 3;
  // Defect already sits at its reinforced fixed point and dominates.
  cfg.init = {.kind = InitKind::kExplicit, .table = {2.0, 0.0}};
  const auto result = run_decay_session(cfg, 0);
  CHECK(result.converged);
  CHECK(result.periods_elapsed == 250);
  REQUIRE(result.convergent_actions.has_value());
  CHECK(result.convergent_actions->first == 0);
  CHECK(result.convergent_actions->second == 0);
}

TEST_CASE("batch determinism and session independence") {
  const SimConfig cfg = baseline_decay();
  const auto a = run_batch(cfg, 2);
  const auto b = run_batch(cfg, 1);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].converged == b[i].converged);
    CHECK(a[i].periods_elapsed == b[i].periods_elapsed);
    CHECK(a[i].convergent_actions == b[i].convergent_actions);
  }
  // One session alone reproduces its batch entry.
  const auto solo = run_decay_session(cfg, 2);
  CHECK(solo.periods_elapsed == a[2].periods_elapsed);
  CHECK(solo.convergent_actions == a[2].convergent_actions);
}

TEST_CASE("constant run bookkeeping") {
  SimConfig cfg = baseline_constant(0.5);
  SUBCASE("period count is exactly ceil(T/eps)") {
    const auto r = run_constant_session(cfg, 0);
    CHECK(r.periods_elapsed == 1'000'000);
    CHECK(r.window_weighted_price.has_value());
  }
  SUBCASE("empty run") {
    cfg.expected_explorations = 0.0;
    const auto r = run_constant_session(cfg, 0);
    CHECK(r.periods_elapsed == 0);
    CHECK_FALSE(r.window_weighted_price.has_value());
  }
}

TEST_CASE("constant run rejects mismatched configs") {
  SimConfig cfg = baseline_constant(0.5);
  cfg.policy.epsilon_schedule = ScheduleKind::kExpDecay;
  CHECK_THROWS(cfg.validate());
  SimConfig cfg2 = baseline_decay();
  cfg2.run = RunKind::kConstant;
  CHECK_THROWS(cfg2.validate());
}

TEST_CASE("constant-mode engine matches a per-period brute-force simulation") {
  // The block-scheduled exploration events plus the closed-form jumps must
  // reproduce plain per-period epsilon-greedy play in distribution. Compare
  // mean window prices across many sessions against an independent
  // brute-force loop.
  const GameSpec game = make_bertrand(10, 0.1, 1.0, 0.0);
  const double eps = 0.02, alpha = 0.15, delta = 0.8;
  const int sessions = 300;

  SimConfig cfg{.game = game};
  cfg.policy = {.kind = PolicyKind::kEpsilonGreedy,
                .epsilon_schedule = ScheduleKind::kConstant,
                .epsilon = eps};
  cfg.update = {.alpha = alpha, .delta = delta};
  cfg.run = RunKind::kConstant;
  cfg.expected_explorations = 200.0;  // 10^4 periods
  cfg.window_expected_explorations = 200.0;
  cfg.master_seed = 71;
  cfg.sessions = sessions;
  const auto engine_results = run_batch(cfg, 2);

  double engine_sum = 0.0, engine_sq = 0.0;
  int engine_n = 0;
  for (const auto& r : engine_results) {
    if (!r.window_weighted_price) continue;
    engine_sum += *r.window_weighted_price;
    engine_sq += *r.window_weighted_price * *r.window_weighted_price;
    ++engine_n;
  }

  const std::uint64_t periods = 10'000;
  double brute_sum = 0.0, brute_sq = 0.0;
  int brute_n = 0;
  const PolicySpec greedy{.kind = PolicyKind::kGreedy};
  for (int s_i = 0; s_i < sessions; ++s_i) {
    Rng rng = Rng::for_stream(9090, static_cast<std::uint64_t>(s_i));
    QState q0 = init_q(game, cfg.update, cfg.init, ObsMode::kMemoryless, rng);
    QState q1 = init_q(game, cfg.update, cfg.init, ObsMode::kMemoryless, rng);
    std::vector<std::uint64_t> freq(100, 0);
    for (std::uint64_t t = 0; t < periods; ++t) {
      const int a0 = rng.next_double() < eps
                         ? static_cast<int>(rng.next_below(10))
                         : select_action(q0, 0, greedy, t, rng);
      const int a1 = rng.next_double() < eps
                         ? static_cast<int>(rng.next_below(10))
                         : select_action(q1, 0, greedy, t, rng);
      update_async(q0, 0, a0, a1, 0, game, cfg.update);
      update_async(q1, 0, a1, a0, 0, game, cfg.update);
      ++freq[a0 * 10 + a1];
    }
    if (auto w = windowed_weighted_price(freq, game)) {
      brute_sum += *w;
      brute_sq += *w * *w;
      ++brute_n;
    }
  }

  REQUIRE(engine_n > 250);
  REQUIRE(brute_n > 250);
  const double engine_mean = engine_sum / engine_n;
  const double brute_mean = brute_sum / brute_n;
  const double engine_var = engine_sq / engine_n - engine_mean * engine_mean;
  const double brute_var = brute_sq / brute_n - brute_mean * brute_mean;
  const double se = std::sqrt(engine_var / engine_n + brute_var / brute_n);
  INFO("engine ", engine_mean, " brute ", brute_mean, " se ", se);
  CHECK(std::abs(engine_mean - brute_mean) < 3.0 * se + 1e-6);
}

TEST_CASE("cycle probe on constructed tables") {
  const GameSpec g = make_prisoners_dilemma(0, 1, 2, 3);
  SUBCASE("memoryless tables give a length-1 cycle") {
    QState q0(2, ObsMode::kMemoryless), q1(2, ObsMode::kMemoryless);
    q0.set(0, 0, 1.0);
    q1.set(0, 1, 1.0);
    const auto cyc = detect_cycle(q0, q1, g, ObsMode::kMemoryless, {0, 0});
    REQUIRE(cyc.size() == 1);
    CHECK(cyc.front() == std::pair<int, int>{0, 1});
  }
  SUBCASE("two-state alternation is found as a 2-cycle") {
    // Each observation's argmax maps to the other observation.
    QState q0(2, ObsMode::kOnePeriodMemory), q1(2, ObsMode::kOnePeriodMemory);
    // obs (0,0) -> play 1; obs (1,1) -> play 0 for both agents.
    q0.set(0 * 2 + 0, 1, 1.0);
    q0.set(1 * 2 + 1, 0, 1.0);
    q1.set(0 * 2 + 0, 1, 1.0);
    q1.set(1 * 2 + 1, 0, 1.0);
    const auto cyc = detect_cycle(q0, q1, g, ObsMode::kOnePeriodMemory, {0, 0});
    REQUIRE(cyc.size() == 2);
    CHECK(cyc[0] != cyc[1]);
  }
}

TEST_CASE("memory-mode session produces a point or cycle outcome") {
  SimConfig cfg{.game = make_bertrand(5, 0.2, 1.0, 0.0)};
  cfg.policy = {.kind = PolicyKind::kEpsilonGreedy,
                .epsilon_schedule = ScheduleKind::kExpDecay,
                .beta = 1e-3};
  cfg.update = {.alpha = 0.25, .delta = 0.8};
  cfg.mode = ObsMode::kOnePeriodMemory;
  cfg.run = RunKind::kDecay;
  cfg.horizon = 2'000'000;
  cfg.convergence_window = 5'000;
  cfg.sessions = 3;
  cfg.master_seed = 12;
  const auto results = run_batch(cfg, 2);
  for (const auto& r : results) {
    if (!r.converged) continue;
    CHECK(r.convergent_actions.has_value() != r.cycle.has_value());
    if (r.cycle) CHECK(r.cycle->size() >= 2);
  }
}

TEST_CASE("no bilateral rebound fires from a guarded standing price") {
  // Stride-1 trace of a baseline run; greedy profiles priced above both
  // sustainable lines and the stationary line must not jump up bilaterally.
  SimConfig cfg = baseline_decay();
  cfg.sessions = 1;
  cfg.horizon = 200'000;
  cfg.convergence_window = 10'000;
  cfg.trace_stride = 1;
  cfg.trace_sessions = {0};
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    cfg.master_seed = seed;
    const auto r = run_decay_session(cfg, 0);
    CHECK(count_bilateral_rebounds_above_stationary(r.trace) == 0);
  }
}

TEST_CASE("trace recording honors the stride and carries the price lines") {
  SimConfig cfg = baseline_decay();
  cfg.sessions = 1;
  cfg.horizon = 50'000;
  cfg.convergence_window = 50'000;  // force a full run
  cfg.trace_stride = 500;
  cfg.trace_sessions = {0};
  const auto r = run_decay_session(cfg, 0);
  CHECK(r.trace.size() == 100);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].t > r.trace[i - 1].t);
  }
  for (const auto& p : r.trace) {
    CHECK(p.sustainable[0] == doctest::Approx((1.0 - 0.95) * p.q_second[0]));
    CHECK(p.stationary ==
          doctest::Approx(2.0 * (1.0 - 0.95) * std::max(p.q_second[0], p.q_second[1])));
  }
  CHECK(r.final_q.has_value());
}
