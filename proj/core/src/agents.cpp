#include "collusim/agents.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace collusim {

double PolicySpec::epsilon_at(std::uint64_t t) const {
  if (kind == PolicyKind::kGreedy) return 0.0;
  if (epsilon_schedule == ScheduleKind::kConstant) return epsilon;
  return std::exp(-beta * static_cast<double>(t));
}

double PolicySpec::temperature_at(std::uint64_t t) const {
  if (temperature_schedule == ScheduleKind::kConstant) return tau;
  return tau * std::exp(-tau_beta * static_cast<double>(t));
}

void PolicySpec::validate() const {
  if (kind == PolicyKind::kEpsilonGreedy) {
    if (epsilon_schedule == ScheduleKind::kConstant && !(epsilon > 0.0 && epsilon <= 1.0)) {
      throw std::invalid_argument("constant epsilon must lie in (0,1]");
    }
    if (epsilon_schedule == ScheduleKind::kExpDecay && !(beta > 0.0)) {
      throw std::invalid_argument("decay rate beta must be positive");
    }
  }
  if (kind == PolicyKind::kBoltzmann && !(tau > 0.0)) {
    throw std::invalid_argument("Boltzmann temperature must be positive");
  }
}

void UpdateRuleSpec::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
  if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in [0,1)");
}

void InitSpec::validate() const {
  if (kind == InitKind::kOptimisticUniform && !(lo < hi)) {
    throw std::invalid_argument("optimistic init needs lo < hi");
  }
}

QState::QState(int num_actions, ObsMode mode)
    : num_actions_(num_actions),
      obs_count_(mode == ObsMode::kMemoryless ? 1 : num_actions * num_actions),
      mode_(mode) {
  if (num_actions < 2 || num_actions > 32) {
    throw std::invalid_argument("QState supports 2..32 actions");
  }
  q_.assign(static_cast<std::size_t>(obs_count_) * num_actions_, 0.0);
  row_max_.assign(obs_count_, 0.0);
  argmax_mask_.assign(obs_count_, num_actions_ == 32 ? ~0u : (1u << num_actions_) - 1u);
}

void QState::recompute_row(int obs) {
  const double* r = q_.data() + static_cast<std::size_t>(obs) * num_actions_;
  double best = r[0];
  std::uint32_t mask = 1u;
  for (int a = 1; a < num_actions_; ++a) {
    if (r[a] > best) {
      best = r[a];
      mask = 1u << a;
    } else if (r[a] == best) {
      mask |= 1u << a;
    }
  }
  row_max_[obs] = best;
  argmax_mask_[obs] = mask;
}

void QState::set(int obs, int action, double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("Q-values must be finite");
  q_[static_cast<std::size_t>(obs) * num_actions_ + action] = value;
  const std::uint32_t bit = 1u << action;
  if (value > row_max_[obs]) {
    row_max_[obs] = value;
    argmax_mask_[obs] = bit;
  } else if (value == row_max_[obs]) {
    argmax_mask_[obs] |= bit;
  } else if (argmax_mask_[obs] & bit) {
    argmax_mask_[obs] &= ~bit;
    if (argmax_mask_[obs] == 0) recompute_row(obs);
  }
}

void QState::fill(double value) {
  for (int obs = 0; obs < obs_count_; ++obs) {
    for (int a = 0; a < num_actions_; ++a) q_[static_cast<std::size_t>(obs) * num_actions_ + a] = value;
    recompute_row(obs);
  }
}

QState init_q(const GameSpec& game, const UpdateRuleSpec& rule, const InitSpec& init,
              ObsMode mode, Rng& rng) {
  rule.validate();
  init.validate();
  const int k = game.num_actions();
  QState q(k, mode);
  switch (init.kind) {
    case InitKind::kUniformOpponent: {
      for (int a = 0; a < k; ++a) {
        double sum = 0.0;
        for (int b = 0; b < k; ++b) sum += game.payoff(a, b);
        const double v = sum / ((1.0 - rule.delta) * k);
        for (int obs = 0; obs < q.obs_count(); ++obs) q.set(obs, a, v);
      }
      break;
    }
    case InitKind::kOptimisticUniform: {
      const double scale = init.scale_by_horizon ? 1.0 / (1.0 - rule.delta) : 1.0;
      for (int obs = 0; obs < q.obs_count(); ++obs) {
        for (int a = 0; a < k; ++a) q.set(obs, a, scale * rng.next_uniform(init.lo, init.hi));
      }
      break;
    }
    case InitKind::kExplicit: {
      if (init.table.size() != static_cast<std::size_t>(q.obs_count()) * k) {
        throw std::invalid_argument("explicit init table has wrong size");
      }
      for (int obs = 0; obs < q.obs_count(); ++obs) {
        for (int a = 0; a < k; ++a) q.set(obs, a, init.table[obs * k + a]);
      }
      break;
    }
  }
  return q;
}

namespace {

int pick_from_mask(std::uint32_t mask, Rng& rng) {
  const int n = std::popcount(mask);
  if (n == 1) return std::countr_zero(mask);
  int idx = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(n)));
  for (;;) {
    const int a = std::countr_zero(mask);
    if (idx == 0) return a;
    mask &= mask - 1;
    --idx;
  }
}

int boltzmann_draw(const QState& q, int obs, double tau, Rng& rng) {
  const int k = q.num_actions();
  const double m = q.row_max(obs);
  double cum[32];
  double total = 0.0;
  for (int a = 0; a < k; ++a) {
    total += std::exp((q.q(obs, a) - m) / tau);
    cum[a] = total;
  }
  const double u = rng.next_double() * total;
  for (int a = 0; a < k; ++a) {
    if (u < cum[a]) return a;
  }
  return k - 1;
}

}  // namespace

int select_action(const QState& q, int obs, const PolicySpec& policy, std::uint64_t t, Rng& rng) {
  if (obs < 0 || obs >= q.obs_count()) throw std::out_of_range("invalid observation index");
  switch (policy.kind) {
    case PolicyKind::kGreedy:
      return pick_from_mask(q.argmax_mask(obs), rng);
    case PolicyKind::kEpsilonGreedy: {
      const double eps = policy.epsilon_at(t);
      if (eps > 0.0 && rng.next_double() < eps) {
        return static_cast<int>(rng.next_below(static_cast<std::uint32_t>(q.num_actions())));
      }
      return pick_from_mask(q.argmax_mask(obs), rng);
    }
    case PolicyKind::kBoltzmann:
      return boltzmann_draw(q, obs, policy.temperature_at(t), rng);
  }
  return 0;
}

void update_async(QState& q, int obs, int a_self, int a_opp, int next_obs, const GameSpec& game,
                  const UpdateRuleSpec& rule) {
  const double target = game.payoff(a_self, a_opp) + rule.delta * q.row_max(next_obs);
  const double old = q.q(obs, a_self);
  q.set(obs, a_self, (1.0 - rule.alpha) * old + rule.alpha * target);
}

void update_sync(QState& q, int obs, int a_opp, int next_obs, const GameSpec& game,
                 const UpdateRuleSpec& rule) {
  const double cont = rule.delta * q.row_max(next_obs);
  const int k = q.num_actions();
  double fresh[32];
  for (int a = 0; a < k; ++a) {
    fresh[a] = (1.0 - rule.alpha) * q.q(obs, a) + rule.alpha * (game.payoff(a, a_opp) + cont);
  }
  for (int a = 0; a < k; ++a) q.set(obs, a, fresh[a]);
}

void update_sync_downward(QState& q, int obs, int a_self, int a_opp, int next_obs,
                          const GameSpec& game, const UpdateRuleSpec& rule) {
  if (!game.has_demand()) {
    throw std::logic_error("downward-demand updating needs a demand decomposition");
  }
  const double cont = rule.delta * q.row_max(next_obs);
  const double qty = game.demand(a_self, a_opp);
  const double cost = game.marginal_cost();
  const int k = q.num_actions();
  double fresh[32];
  for (int a = 0; a < k; ++a) {
    const double old = q.q(obs, a);
    if (a == a_self) {
      fresh[a] = (1.0 - rule.alpha) * old + rule.alpha * (game.payoff(a_self, a_opp) + cont);
      continue;
    }
    const double bound = (game.action_value(a) - cost) * qty;
    const double cand = (1.0 - rule.alpha) * old + rule.alpha * (bound + cont);
    fresh[a] = a > a_self ? std::min(old, cand) : std::max(old, cand);
  }
  for (int a = 0; a < k; ++a) q.set(obs, a, fresh[a]);
}

void apply_update(QState& q, int obs, int a_self, int a_opp, int next_obs, const GameSpec& game,
                  const UpdateRuleSpec& rule) {
  switch (rule.kind) {
    case UpdateKind::kAsynchronous:
      update_async(q, obs, a_self, a_opp, next_obs, game, rule);
      return;
    case UpdateKind::kSynchronous:
      update_sync(q, obs, a_opp, next_obs, game, rule);
      return;
    case UpdateKind::kSynchronousDownward:
      update_sync_downward(q, obs, a_self, a_opp, next_obs, game, rule);
      return;
  }
}

void append_qstate_csv(const QState& q, int agent, std::string& out) {
  char buf[96];
  for (int obs = 0; obs < q.obs_count(); ++obs) {
    for (int a = 0; a < q.num_actions(); ++a) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g\n", agent, obs, a, q.q(obs, a));
      out += buf;
    }
  }
}

}  // namespace collusim
