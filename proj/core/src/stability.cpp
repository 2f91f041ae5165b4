#include "collusim/stability.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <thread>
#include <cmath>
#include <stdexcept>

#include "collusim/parallel.hpp"

namespace collusim::stability {

namespace {

constexpr int kMaxActions = 16;
constexpr double kAlignTol = 1e-6;

bool aligned(double x, double eta) {
  const double r = x / eta;
  return std::abs(r - std::llround(r)) < kAlignTol;
}

int coord_of_checked(double v, const GridSpec& grid, const char* what) {
  const double r = (v - grid.q_lower) / grid.eta;
  const long long c = std::llround(r);
  if (std::abs(r - c) >= kAlignTol) {
    throw std::invalid_argument(std::string(what) + " does not lie on the eta grid");
  }
  if (c < 0 || c >= grid.points_per_axis) {
    throw std::invalid_argument(std::string(what) + " lies outside [q_lower, q_upper]");
  }
  return static_cast<int>(c);
}

}  // namespace

GridSpec make_grid(const GameSpec& game, double delta, double eta,
                   std::optional<double> q_upper) {
  if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in [0,1)");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  GridSpec grid;
  grid.eta = eta;
  grid.q_lower = game.floor_payoff() / (1.0 - delta);
  const double max_u = *std::max_element(game.payoff_table().begin(), game.payoff_table().end());
  const double q_upper_min = max_u / (1.0 - delta);
  grid.q_upper = q_upper.value_or(q_upper_min);
  if (grid.q_upper < q_upper_min - kAlignTol) {
    throw std::invalid_argument("q_upper must be at least max u / (1-delta)");
  }
  if (!aligned(grid.q_upper - grid.q_lower, eta)) {
    throw std::invalid_argument("q_upper - q_lower must be a multiple of eta");
  }
  grid.points_per_axis = static_cast<int>(std::llround((grid.q_upper - grid.q_lower) / eta)) + 1;
  if (grid.points_per_axis < 2) throw std::invalid_argument("grid needs at least 2 points");
  for (double u : game.payoff_table()) {
    if (!aligned(u / (1.0 - delta) - grid.q_lower, eta)) {
      throw std::invalid_argument("payoff table is not eta-aligned: u/(1-delta) off-grid");
    }
  }
  return grid;
}

Instance::Instance(GameSpec game, double alpha, double delta, GridSpec grid,
                   std::uint64_t state_budget)
    : game_(std::move(game)), alpha_(alpha), delta_(delta), grid_(grid) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
  k_ = game_.num_actions();
  if (k_ > kMaxActions) throw std::invalid_argument("verifier supports at most 16 actions");
  ne_action_ = game_.grid_of_rank(0);

  const auto p = static_cast<std::uint64_t>(grid_.points_per_axis);
  const std::uint64_t cap = std::min<std::uint64_t>(state_budget, 0xffffffffULL);
  unsigned __int128 count = 1;
  radix_.resize(2 * k_ + 1);
  for (int i = 0; i < 2 * k_; ++i) {
    radix_[i] = static_cast<std::uint64_t>(count);
    count *= p;
    if (count > cap) {
      throw BudgetExceeded("state budget exceeded: P^(2K) with P=" +
                           std::to_string(grid_.points_per_axis));
    }
  }
  radix_[2 * k_] = static_cast<std::uint64_t>(count);
  state_count_ = static_cast<std::uint64_t>(count);

  ucoord_.resize(static_cast<std::size_t>(k_) * k_);
  for (int i = 0; i < k_; ++i) {
    for (int j = 0; j < k_; ++j) {
      ucoord_[i * k_ + j] =
          coord_of_checked(game_.payoff(i, j) / (1.0 - delta_), grid_, "payoff value");
    }
  }
}

void Instance::unpack(StateId s, int* coords) const {
  const auto p = static_cast<std::uint64_t>(grid_.points_per_axis);
  std::uint64_t rest = s;
  for (int i = 0; i < 2 * k_; ++i) {
    coords[i] = static_cast<int>(rest % p);
    rest /= p;
  }
}

StateId Instance::pack(const int* coords) const {
  std::uint64_t id = 0;
  for (int i = 2 * k_ - 1; i >= 0; --i) {
    id = id * grid_.points_per_axis + coords[i];
  }
  return static_cast<StateId>(id);
}

int Instance::update_coord(int old_coord, int payoff_coord, int max_coord) const {
  const double v = (1.0 - delta_) * payoff_coord + delta_ * max_coord;
  if (std::abs(v - old_coord) < 1e-9) return old_coord;
  const double f = (1.0 - alpha_) * old_coord + alpha_ * v;
  const double lo = std::floor(f);
  const double frac = f - lo;
  int snapped;
  if (std::abs(frac - 0.5) < 1e-9) {
    // Exact half: break toward the target (toward the travel direction when
    // the target itself sits on the half point).
    const double dir = std::abs(v - f) > 1e-9 ? v - f : v - old_coord;
    snapped = static_cast<int>(lo) + (dir > 0 ? 1 : 0);
  } else {
    snapped = static_cast<int>(std::lround(f));
  }
  if (snapped == old_coord) snapped += v > old_coord ? 1 : -1;  // strict progress
  if (snapped < 0) snapped = 0;
  if (snapped >= grid_.points_per_axis) snapped = grid_.points_per_axis - 1;
  return snapped;
}

StateId Instance::image(StateId s, int a0, int a1) const {
  int coords[2 * kMaxActions];
  unpack(s, coords);
  int max0 = coords[0], max1 = coords[k_];
  for (int a = 1; a < k_; ++a) {
    max0 = std::max(max0, coords[a]);
    max1 = std::max(max1, coords[k_ + a]);
  }
  const int n0 = update_coord(coords[a0], payoff_coord(a0, a1), max0);
  const int n1 = update_coord(coords[k_ + a1], payoff_coord(a1, a0), max1);
  const auto delta0 = static_cast<std::int64_t>(n0 - coords[a0]) *
                      static_cast<std::int64_t>(radix_[a0]);
  const auto delta1 = static_cast<std::int64_t>(n1 - coords[k_ + a1]) *
                      static_cast<std::int64_t>(radix_[k_ + a1]);
  return static_cast<StateId>(static_cast<std::int64_t>(s) + delta0 + delta1);
}

SuccessorTable build_successors(const Instance& inst, int threads) {
  SuccessorTable table;
  const int k = inst.num_actions();
  const std::uint64_t n = inst.state_count();
  table.k = k;
  table.images.resize(n * k * k);
  table.mask0.resize(n);
  table.mask1.resize(n);

  parallel_for(n, threads, [&](std::uint64_t s) {
    int coords[2 * kMaxActions];
    inst.unpack(static_cast<StateId>(s), coords);
    int max0 = coords[0], max1 = coords[k];
    for (int a = 1; a < k; ++a) {
      max0 = std::max(max0, coords[a]);
      max1 = std::max(max1, coords[k + a]);
    }
    std::uint16_t m0 = 0, m1 = 0;
    for (int a = 0; a < k; ++a) {
      if (coords[a] == max0) m0 |= static_cast<std::uint16_t>(1u << a);
      if (coords[k + a] == max1) m1 |= static_cast<std::uint16_t>(1u << a);
    }
    table.mask0[s] = m0;
    table.mask1[s] = m1;

    // Per-cell updates are independent; precompute each agent's K updates.
    int new0[kMaxActions][kMaxActions];  // [a0][a1]
    int new1[kMaxActions][kMaxActions];
    for (int a0 = 0; a0 < k; ++a0) {
      for (int a1 = 0; a1 < k; ++a1) {
        new0[a0][a1] = inst.update_coord(coords[a0], inst.payoff_coord(a0, a1), max0);
        new1[a1][a0] = inst.update_coord(coords[k + a1], inst.payoff_coord(a1, a0), max1);
      }
    }
    const std::size_t base = s * k * k;
    for (int a0 = 0; a0 < k; ++a0) {
      for (int a1 = 0; a1 < k; ++a1) {
        const auto id = static_cast<std::int64_t>(s) +
                        static_cast<std::int64_t>(new0[a0][a1] - coords[a0]) *
                            static_cast<std::int64_t>(inst.pack_radix(a0)) +
                        static_cast<std::int64_t>(new1[a1][a0] - coords[k + a1]) *
                            static_cast<std::int64_t>(inst.pack_radix(k + a1));
        table.images[base + a0 * k + a1] = static_cast<StateId>(id);
      }
    }
  });
  return table;
}

std::vector<StateId> unperturbed_successors(const Instance& inst, const SuccessorTable& table,
                                            StateId s) {
  std::vector<StateId> out;
  const int k = inst.num_actions();
  const std::uint16_t m0 = table.mask0[s];
  const std::uint16_t m1 = table.mask1[s];
  for (int a0 = 0; a0 < k; ++a0) {
    if (!(m0 >> a0 & 1)) continue;
    for (int a1 = 0; a1 < k; ++a1) {
      if (!(m1 >> a1 & 1)) continue;
      out.push_back(table.image(s, a0, a1));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::vector<StateId>> recurrent_classes(const Instance& inst,
                                                    const SuccessorTable& table) {
  const std::uint64_t n = inst.state_count();
  const int k = inst.num_actions();
  Digraph g;
  g.offsets.resize(n + 1);
  g.offsets[0] = 0;
  for (std::uint64_t s = 0; s < n; ++s) {
    const int degree = std::popcount(table.mask0[s]) * std::popcount(table.mask1[s]);
    g.offsets[s + 1] = g.offsets[s] + static_cast<std::uint32_t>(degree);
  }
  g.edges.resize(g.offsets[n]);
  parallel_for(n, 0, [&](std::uint64_t s) {
    std::uint32_t pos = g.offsets[s];
    const std::uint16_t m0 = table.mask0[s];
    const std::uint16_t m1 = table.mask1[s];
    for (int a0 = 0; a0 < k; ++a0) {
      if (!(m0 >> a0 & 1)) continue;
      for (int a1 = 0; a1 < k; ++a1) {
        if (!(m1 >> a1 & 1)) continue;
        g.edges[pos++] = table.image(static_cast<StateId>(s), a0, a1);
      }
    }
  });
  return closed_classes(g);
}

bool is_absorbing(const Instance& inst, const SuccessorTable& table, StateId s) {
  const auto succ = unperturbed_successors(inst, table, s);
  return succ.size() == 1 && succ.front() == s;
}

bool absorbing_characterization(const Instance& inst, const SuccessorTable& table, StateId s) {
  const std::uint16_t m0 = table.mask0[s];
  if (m0 != table.mask1[s] || !std::has_single_bit(m0)) return false;
  const int a = std::countr_zero(m0);
  int coords[2 * kMaxActions];
  inst.unpack(s, coords);
  const int target = inst.payoff_coord(a, a);
  return coords[a] == target && coords[inst.num_actions() + a] == target;
}

std::vector<double> nash_state_values(const GameSpec& game, double delta) {
  const int k = game.num_actions();
  const int a1 = game.grid_of_rank(0);
  std::vector<double> values(k);
  for (int a = 0; a < k; ++a) {
    values[a] = game.payoff(a, a1) + delta * game.payoff(a1, a1) / (1.0 - delta);
  }
  return values;
}

StateId build_nash_state(const Instance& inst) {
  const int k = inst.num_actions();
  const int a1 = inst.ne_action();
  int coords[2 * kMaxActions];
  for (int a = 0; a < k; ++a) {
    const double c = (1.0 - inst.delta()) * inst.payoff_coord(a, a1) +
                     inst.delta() * inst.payoff_coord(a1, a1);
    const long long rounded = std::llround(c);
    if (std::abs(c - rounded) >= kAlignTol) {
      throw std::invalid_argument("anchor-state value off-grid: refine eta");
    }
    coords[a] = static_cast<int>(rounded);
    coords[k + a] = coords[a];
  }
  return inst.pack(coords);
}

std::uint8_t one_step_cost(const Instance& inst, const SuccessorTable& table, StateId s,
                           StateId s_prime) {
  const int k = inst.num_actions();
  const std::uint16_t m0 = table.mask0[s];
  const std::uint16_t m1 = table.mask1[s];
  std::uint8_t best = kUnreachable;
  for (int a0 = 0; a0 < k; ++a0) {
    for (int a1 = 0; a1 < k; ++a1) {
      if (table.image(s, a0, a1) != s_prime) continue;
      const std::uint8_t c = static_cast<std::uint8_t>(!(m0 >> a0 & 1)) +
                             static_cast<std::uint8_t>(!(m1 >> a1 & 1));
      best = std::min(best, c);
    }
  }
  return best;
}

MutationEdges build_mutation_edges(const Instance& inst, const SuccessorTable& table,
                                   int threads) {
  const std::uint64_t n = inst.state_count();
  const int k = inst.num_actions();
  const int kk = k * k;
  MutationEdges edges;
  edges.offsets.assign(n + 1, 0);

  // Per-state deduplication: keep the cheapest weight per distinct image.
  auto collect = [&](StateId s, StateId* targets, std::uint8_t* weights) -> int {
    const std::uint16_t m0 = table.mask0[s];
    const std::uint16_t m1 = table.mask1[s];
    const std::size_t base = static_cast<std::size_t>(s) * kk;
    int count = 0;
    for (int a0 = 0; a0 < k; ++a0) {
      const std::uint8_t c0 = !(m0 >> a0 & 1);
      for (int a1 = 0; a1 < k; ++a1) {
        const std::uint8_t w = c0 + !(m1 >> a1 & 1);
        const StateId v = table.images[base + a0 * k + a1];
        int at = -1;
        for (int i = 0; i < count; ++i) {
          if (targets[i] == v) {
            at = i;
            break;
          }
        }
        if (at < 0) {
          targets[count] = v;
          weights[count] = w;
          ++count;
        } else if (w < weights[at]) {
          weights[at] = w;
        }
      }
    }
    return count;
  };

  constexpr int kMaxProfiles = kMaxActions * kMaxActions;
  parallel_for(n, threads, [&](std::uint64_t s) {
    StateId t[kMaxProfiles];
    std::uint8_t w[kMaxProfiles];
    edges.offsets[s + 1] = collect(static_cast<StateId>(s), t, w);
  });
  for (std::uint64_t s = 0; s < n; ++s) edges.offsets[s + 1] += edges.offsets[s];
  edges.targets.resize(edges.offsets[n]);
  edges.weights.resize(edges.offsets[n]);
  parallel_for(n, threads, [&](std::uint64_t s) {
    StateId t[kMaxProfiles];
    std::uint8_t w[kMaxProfiles];
    const int count = collect(static_cast<StateId>(s), t, w);
    const std::uint32_t at = edges.offsets[s];
    std::copy(t, t + count, edges.targets.begin() + at);
    std::copy(w, w + count, edges.weights.begin() + at);
  });
  return edges;
}

// Dial's algorithm specialized to weights in {0,1,2}: three rotating buckets.
static void dial_from(const MutationEdges& edges, StateId source, std::vector<std::uint8_t>& dist,
                      std::vector<StateId>* buckets) {
  std::fill(dist.begin(), dist.end(), kUnreachable);
  for (int b = 0; b < 3; ++b) buckets[b].clear();
  dist[source] = 0;
  buckets[0].push_back(source);
  int d = 0;
  int active = 0;
  while (true) {
    auto& cur = buckets[active];
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const StateId u = cur[i];
      if (dist[u] != d) continue;
      const std::uint32_t lo = edges.offsets[u];
      const std::uint32_t hi = edges.offsets[u + 1];
      for (std::uint32_t e = lo; e < hi; ++e) {
        const int nd = d + edges.weights[e];
        const StateId v = edges.targets[e];
        if (nd < dist[v]) {
          dist[v] = static_cast<std::uint8_t>(nd);
          buckets[(active + edges.weights[e]) % 3].push_back(v);
        }
      }
    }
    cur.clear();
    if (buckets[(active + 1) % 3].empty() && buckets[(active + 2) % 3].empty()) break;
    active = (active + 1) % 3;
    if (++d >= kUnreachable) break;
  }
}

std::vector<std::uint8_t> min_transition_costs_from(const Instance& inst,
                                                    const SuccessorTable& table,
                                                    StateId source) {
  const auto edges = build_mutation_edges(inst, table, 1);
  std::vector<std::uint8_t> dist(inst.state_count());
  std::vector<StateId> buckets[3];
  dial_from(edges, source, dist, buckets);
  return dist;
}

std::uint8_t min_transition_cost(const Instance& inst, const SuccessorTable& table, StateId s,
                                 StateId s_prime) {
  return min_transition_costs_from(inst, table, s)[s_prime];
}

std::vector<StateId> stable_states(const std::vector<StateId>& absorbing,
                                   const std::vector<std::uint64_t>& arborescence_costs) {
  std::vector<StateId> out;
  std::uint64_t best = kInfCost;
  for (std::uint64_t c : arborescence_costs) best = std::min(best, c);
  if (best == kInfCost) return out;
  for (std::size_t i = 0; i < absorbing.size(); ++i) {
    if (arborescence_costs[i] == best) out.push_back(absorbing[i]);
  }
  return out;
}

std::vector<std::uint8_t> cost_matrix(const Instance& inst, const SuccessorTable& table,
                                      const std::vector<StateId>& absorbing, int threads) {
  const std::size_t r = absorbing.size();
  std::vector<std::uint8_t> costs(r * r, kUnreachable);
  const auto edges = build_mutation_edges(inst, table, threads);
  const unsigned workers = std::min<unsigned>(resolve_threads(threads), std::max<std::size_t>(r, 1));
  std::vector<std::vector<std::uint8_t>> dist(workers,
                                              std::vector<std::uint8_t>(inst.state_count()));
  std::vector<std::array<std::vector<StateId>, 3>> buckets(workers);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned wi = 0; wi < workers; ++wi) {
    pool.emplace_back([&, wi] {
      for (;;) {
        const std::size_t row = next.fetch_add(1);
        if (row >= r) return;
        dial_from(edges, absorbing[row], dist[wi], buckets[wi].data());
        for (std::size_t col = 0; col < r; ++col) {
          costs[row * r + col] = dist[wi][absorbing[col]];
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  return costs;
}

std::vector<int> valid_perturbation_set(const GameSpec& game, int action) {
  std::vector<int> out;
  const int my_rank = game.rank_of(action);
  const double stay = game.payoff(action, action);
  for (int r = 0; r < my_rank; ++r) {
    const int a = game.grid_of_rank(r);
    if (game.payoff(a, action) >= stay - 1e-12) out.push_back(a);
  }
  return out;
}

std::vector<int> build_perturbation_map(const GameSpec& game) {
  const int k = game.num_actions();
  std::vector<int> g(k, -1);
  for (int a = 0; a < k; ++a) {
    if (game.rank_of(a) == 0) continue;
    const auto candidates = valid_perturbation_set(game, a);
    if (candidates.empty()) {
      throw std::invalid_argument("no valid downward deviation: game violates assumption 1.3");
    }
    // The rank-closest candidate below a.
    int best = candidates.front();
    for (int c : candidates) {
      if (game.rank_of(c) > game.rank_of(best)) best = c;
    }
    g[a] = best;
  }
  return g;
}

PerturbationInterval valid_perturbations_auction(int num_actions, double valuation, double omega,
                                                 double bid) {
  if (!(omega >= 0.0 && omega <= 1.0)) throw std::invalid_argument("omega must lie in [0,1]");
  const int k = num_actions;
  const double ne_bid = (k - 1) * valuation / k;
  if (bid >= ne_bid - 1e-12) {
    throw std::invalid_argument("bid must lie strictly below the strict-NE bid");
  }
  const double threshold =
      ((k - 1) * valuation + (k + 1) * bid) / (2.0 * (k * valuation + (k + 1) * bid));
  PerturbationInterval out;
  out.lo_exclusive = bid;
  if (omega <= threshold + 1e-12) {
    out.hi_inclusive = k * valuation / (k + 1.0);
  } else {
    out.hi_inclusive = (valuation + (2.0 * omega - 1.0) * bid) / (2.0 * omega);
  }
  for (int i = 0; i < k; ++i) {
    const double b = valuation * i / k;
    if (b > bid + 1e-12 && b <= out.hi_inclusive + 1e-12) out.grid_indices.push_back(i);
  }
  return out;
}

}  // namespace collusim::stability
