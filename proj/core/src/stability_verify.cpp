#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdlib>
#include <unordered_set>

#include <json.hpp>

#include "collusim/parallel.hpp"
#include "collusim/stability.hpp"

namespace collusim::stability {

namespace {

constexpr int kMaxActions = 16;

// Cached per-absorbing-state labels used by the comparison order.
struct AbsorbingInfo {
  StateId id = 0;
  int coords[2 * kMaxActions] = {};
  int played = 0;      // common strict argmax (grid index)
  int played_rank = 0;
  int i_low = 0;       // agent with the lexicographically lower Q-vector
};

AbsorbingInfo make_info(const Instance& inst, const SuccessorTable& table, StateId s) {
  AbsorbingInfo info;
  info.id = s;
  inst.unpack(s, info.coords);
  info.played = std::countr_zero(table.mask0[s]);
  info.played_rank = inst.game().rank_of(info.played);
  const int k = inst.num_actions();
  info.i_low = 1;  // identical vectors: designate agent 1 as the low one
  for (int r = 0; r < k; ++r) {
    const int a = inst.game().grid_of_rank(r);
    if (info.coords[a] != info.coords[k + a]) {
      info.i_low = info.coords[a] < info.coords[k + a] ? 0 : 1;
      break;
    }
  }
  return info;
}

int q_of(const AbsorbingInfo& info, int agent, int action, int k) {
  return info.coords[agent * k + action];
}

long long distance_to(const AbsorbingInfo& info, const AbsorbingInfo& nash_state, int k) {
  long long d = 0;
  for (int i = 0; i < 2 * k; ++i) d += std::abs(info.coords[i] - nash_state.coords[i]);
  return d;
}

// The strict partial order: x precedes y (x sits closer to the anchor state).
bool precedes(const Instance& inst, const AbsorbingInfo& x, const AbsorbingInfo& y,
              const std::vector<int>& g, const AbsorbingInfo& nash_state) {
  const int k = inst.num_actions();
  const GameSpec& game = inst.game();
  // Condition 1: first rank-ordered difference of the low agents' vectors
  // strictly below the lower played action.
  const int floor_rank = std::min(x.played_rank, y.played_rank);
  for (int r = 0; r < floor_rank; ++r) {
    const int a = game.grid_of_rank(r);
    const int qx = q_of(x, x.i_low, a, k);
    const int qy = q_of(y, y.i_low, a, k);
    if (qx != qy) return qx < qy;
  }
  // Condition 2: lower played action wins.
  if (x.played_rank != y.played_rank) return x.played_rank < y.played_rank;
  // Condition 3: same played action.
  if (x.played != inst.ne_action()) {
    const int ga = g[x.played];
    return q_of(x, 1 - x.i_low, ga, k) > q_of(y, 1 - y.i_low, ga, k);
  }
  return distance_to(x, nash_state, k) < distance_to(y, nash_state, k);
}

// Row-bitset relation matrix over the absorbing list.
struct Relation {
  std::size_t n = 0;
  std::size_t words = 0;
  std::vector<std::uint64_t> bits;

  void set(std::size_t i, std::size_t j) { bits[i * words + j / 64] |= 1ull << (j % 64); }
  bool get(std::size_t i, std::size_t j) const {
    return bits[i * words + j / 64] >> (j % 64) & 1u;
  }
};

Relation build_relation(const Instance& inst, const std::vector<AbsorbingInfo>& infos,
                        const std::vector<int>& g, const AbsorbingInfo& nash_state, int threads) {
  Relation rel;
  rel.n = infos.size();
  rel.words = (rel.n + 63) / 64;
  rel.bits.assign(rel.n * rel.words, 0);
  parallel_for(rel.n, threads, [&](std::uint64_t i) {
    for (std::size_t j = 0; j < rel.n; ++j) {
      if (i == j) continue;
      if (precedes(inst, infos[i], infos[j], g, nash_state)) rel.set(i, j);
    }
  });
  return rel;
}

bool relation_irreflexive(const Relation& rel) {
  for (std::size_t i = 0; i < rel.n; ++i) {
    if (rel.get(i, i)) return false;
  }
  return true;
}

// Transitive and antisymmetric: whenever i < j holds, j's downset is
// contained in i's and j does not point back at i.
bool relation_strict_transitive(const Relation& rel) {
  for (std::size_t i = 0; i < rel.n; ++i) {
    for (std::size_t j = 0; j < rel.n; ++j) {
      if (!rel.get(i, j)) continue;
      if (rel.get(j, i)) return false;
      const std::uint64_t* ri = rel.bits.data() + i * rel.words;
      const std::uint64_t* rj = rel.bits.data() + j * rel.words;
      for (std::size_t w = 0; w < rel.words; ++w) {
        if (rj[w] & ~ri[w]) return false;
      }
    }
  }
  return true;
}

}  // namespace

OrderResult order_compare(const Instance& inst, const SuccessorTable& table, StateId s,
                          StateId s_prime, const std::vector<int>& g, StateId nash_state) {
  const AbsorbingInfo sn = make_info(inst, table, nash_state);
  const AbsorbingInfo x = make_info(inst, table, s);
  const AbsorbingInfo y = make_info(inst, table, s_prime);
  if (precedes(inst, x, y, g, sn)) return OrderResult::kLess;
  if (precedes(inst, y, x, g, sn)) return OrderResult::kGreater;
  return OrderResult::kIncomparable;
}

bool check_single_mutation_return(const Instance& inst, const SuccessorTable& table,
                                  StateId nash_state) {
  const int k = inst.num_actions();
  const std::uint16_t m0 = table.mask0[nash_state];
  const std::uint16_t m1 = table.mask1[nash_state];
  if (!std::has_single_bit(m0) || m0 != m1) return false;
  const int a1 = std::countr_zero(m0);

  for (int agent = 0; agent < 2; ++agent) {
    for (int b = 0; b < k; ++b) {
      if (b == a1) continue;
      const StateId start = agent == 0 ? table.image(nash_state, b, a1) : table.image(nash_state, a1, b);
      // Unperturbed closure from the deviation image must terminate in s^N
      // and nowhere else.
      std::unordered_set<StateId> seen{start};
      std::vector<StateId> frontier{start};
      bool reached = false;
      while (!frontier.empty()) {
        const StateId u = frontier.back();
        frontier.pop_back();
        const auto succ = unperturbed_successors(inst, table, u);
        if (succ.size() == 1 && succ.front() == u) {
          if (u != nash_state) return false;
          reached = true;
          continue;
        }
        for (StateId v : succ) {
          if (seen.insert(v).second) frontier.push_back(v);
        }
      }
      if (!reached) return false;
    }
  }
  return true;
}

bool check_one_mutation_descent(const Instance& inst, const SuccessorTable& table,
                                const std::vector<StateId>& absorbing,
                                const std::vector<std::uint8_t>& costs,
                                const std::vector<int>& g, StateId nash_state) {
  const std::size_t r = absorbing.size();
  std::vector<AbsorbingInfo> infos(r);
  std::size_t nash_row = r;
  for (std::size_t i = 0; i < r; ++i) {
    infos[i] = make_info(inst, table, absorbing[i]);
    if (absorbing[i] == nash_state) nash_row = i;
  }
  if (nash_row == r) return false;
  for (std::size_t i = 0; i < r; ++i) {
    if (i == nash_row) continue;
    bool found = false;
    for (std::size_t j = 0; j < r && !found; ++j) {
      if (costs[i * r + j] != 1) continue;
      if (precedes(inst, infos[j], infos[i], g, infos[nash_row])) found = true;
    }
    if (!found) return false;
  }
  return true;
}

StabilityReport verify(const Instance& inst, int threads) {
  // Fail fast on inadmissible games: the descent machinery is undefined
  // without the four game-class conditions.
  const auto admissible = check_assumptions(inst.game());
  if (!admissible.pass) {
    std::string msg = "game fails admissibility condition(s):";
    for (const auto& v : admissible.violations) {
      msg += " " + v.id + "@(" + std::to_string(v.k) + "," + std::to_string(v.k_prime) + ")";
    }
    throw std::invalid_argument(msg);
  }
  const auto t_start = std::chrono::steady_clock::now();
  auto t_phase = t_start;
  StabilityReport report;
  auto mark = [&](const char* name) {
    const auto now = std::chrono::steady_clock::now();
    report.phase_seconds.emplace_back(name,
                                      std::chrono::duration<double>(now - t_phase).count());
    t_phase = now;
  };
  report.state_count = inst.state_count();
  report.points_per_axis = inst.grid().points_per_axis;

  const SuccessorTable table = build_successors(inst, threads);
  mark("successors");

  const auto classes = recurrent_classes(inst, table);
  report.recurrent_class_count = classes.size();
  report.all_singletons = true;
  for (const auto& cls : classes) {
    if (cls.size() != 1) report.all_singletons = false;
  }
  for (const auto& cls : classes) {
    if (cls.size() == 1) report.absorbing.push_back(cls.front());
  }
  std::sort(report.absorbing.begin(), report.absorbing.end());

  // The reinforced strict-argmax characterization must coincide with
  // absorbency state by state across the whole box.
  std::vector<std::uint8_t> absorbing_flag(inst.state_count(), 0);
  for (StateId s : report.absorbing) absorbing_flag[s] = 1;
  std::atomic<bool> char_ok{true};
  parallel_for(inst.state_count(), threads, [&](std::uint64_t s) {
    if (!char_ok.load(std::memory_order_relaxed)) return;
    const bool c = absorbing_characterization(inst, table, static_cast<StateId>(s));
    if (c != static_cast<bool>(absorbing_flag[s])) char_ok.store(false);
  });
  report.absorbing_characterization_ok = char_ok.load() && report.all_singletons;
  mark("classes_and_characterization");

  report.nash_state = build_nash_state(inst);
  const bool nash_absorbing = std::binary_search(report.absorbing.begin(), report.absorbing.end(),
                                               report.nash_state);

  report.costs = cost_matrix(inst, table, report.absorbing, threads);
  mark("cost_matrix");
  const auto& costs = report.costs;
  const std::size_t r = report.absorbing.size();

  // Leaving the competitive state costs at least two mutations, and every
  // single deviation flows straight back.
  std::size_t nash_row = r;
  for (std::size_t i = 0; i < r; ++i) {
    if (report.absorbing[i] == report.nash_state) nash_row = i;
  }
  report.single_mutation_return_ok = nash_absorbing && nash_row < r;
  if (report.single_mutation_return_ok) {
    for (std::size_t j = 0; j < r; ++j) {
      if (j != nash_row && costs[nash_row * r + j] < 2) report.single_mutation_return_ok = false;
    }
    if (report.single_mutation_return_ok) report.single_mutation_return_ok = check_single_mutation_return(inst, table, report.nash_state);
  }
  mark("single_mutation_return");

  // Rooted spanning trees over the absorbing cost digraph.
  std::vector<std::uint64_t> dense(r * r, kInfCost);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      if (i != j && costs[i * r + j] != kUnreachable) dense[i * r + j] = costs[i * r + j];
    }
  }
  report.arborescence_costs =
      min_arborescence_costs_all_roots(dense, static_cast<std::uint32_t>(r), threads);
  mark("arborescences");
  report.stable_set = stable_states(report.absorbing, report.arborescence_costs);

  // The comparison order and the one-mutation descent property.
  const auto g = build_perturbation_map(inst.game());
  std::vector<AbsorbingInfo> infos(r);
  for (std::size_t i = 0; i < r; ++i) infos[i] = make_info(inst, table, report.absorbing[i]);
  if (nash_row < r) {
    const Relation rel = build_relation(inst, infos, g, infos[nash_row], threads);
    report.order_irreflexive = relation_irreflexive(rel);
    report.order_transitive = relation_strict_transitive(rel);
    report.one_mutation_descent_ok = check_one_mutation_descent(inst, table, report.absorbing, costs, g, report.nash_state);

    // The proof's g is not unique; flag when an alternative choice changes
    // the comparability pattern anywhere.
    for (int a = 0; a < inst.num_actions() && !report.g_ambiguous; ++a) {
      if (g[a] < 0) continue;
      for (int alt : valid_perturbation_set(inst.game(), a)) {
        if (alt == g[a]) continue;
        auto g_alt = g;
        g_alt[a] = alt;
        const Relation rel_alt = build_relation(inst, infos, g_alt, infos[nash_row], threads);
        if (rel_alt.bits != rel.bits) {
          report.g_ambiguous = true;
          break;
        }
      }
    }
  }

  mark("order_and_descent");
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

std::string report_to_json(const StabilityReport& report, const Instance& inst) {
  nlohmann::json j;
  j["instance"] = {
      {"game", nlohmann::json::parse(inst.game().to_json_string())},
      {"alpha", inst.alpha()},
      {"delta", inst.delta()},
      {"eta", inst.grid().eta},
      {"q_lower", inst.grid().q_lower},
      {"q_upper", inst.grid().q_upper},
      {"points_per_axis", report.points_per_axis},
      {"state_count", report.state_count},
  };
  j["recurrent_classes"] = {{"count", report.recurrent_class_count},
                            {"all_singletons", report.all_singletons}};
  j["absorbing_count"] = report.absorbing.size();
  j["absorbing_characterization_ok"] = report.absorbing_characterization_ok;

  const int k = inst.num_actions();
  int coords[2 * kMaxActions];
  inst.unpack(report.nash_state, coords);
  nlohmann::json q0 = nlohmann::json::array(), q1 = nlohmann::json::array();
  for (int a = 0; a < k; ++a) {
    q0.push_back(inst.grid().value(coords[a]));
    q1.push_back(inst.grid().value(coords[k + a]));
  }
  j["nash_state"] = {{"id", report.nash_state}, {"q", nlohmann::json::array({q0, q1})}};

  nlohmann::json arb = nlohmann::json::array();
  for (std::size_t i = 0; i < report.absorbing.size(); ++i) {
    nlohmann::json row;
    row["state"] = report.absorbing[i];
    if (report.arborescence_costs[i] == kInfCost) {
      row["cost"] = nullptr;
    } else {
      row["cost"] = report.arborescence_costs[i];
    }
    arb.push_back(row);
  }
  j["arborescence_costs"] = arb;
  j["stable_set"] = report.stable_set;
  j["stable_set_is_nash_state"] =
      report.stable_set.size() == 1 && report.stable_set.front() == report.nash_state;
  j["checks"] = {{"single_mutation_return", report.single_mutation_return_ok},
                 {"order_irreflexive", report.order_irreflexive},
                 {"order_transitive", report.order_transitive},
                 {"one_mutation_descent", report.one_mutation_descent_ok},
                 {"g_ambiguous", report.g_ambiguous}};
  j["pass"] = report.pass();
  j["elapsed_seconds"] = report.elapsed_seconds;
  nlohmann::json phases = nlohmann::json::object();
  for (const auto& [name, secs] : report.phase_seconds) phases[name] = secs;
  j["phase_seconds"] = phases;
  return j.dump(2);
}

std::string cost_digraph_dot(const Instance& inst, const std::vector<StateId>& absorbing,
                             const std::vector<std::uint8_t>& costs, StateId nash_state) {
  const std::size_t r = absorbing.size();
  std::string out = "digraph cost {\n";
  int coords[2 * kMaxActions];
  for (std::size_t i = 0; i < r; ++i) {
    inst.unpack(absorbing[i], coords);
    int played = 0;
    int best = -1;
    for (int a = 0; a < inst.num_actions(); ++a) {
      if (coords[a] > best) {
        best = coords[a];
        played = a;
      }
    }
    out += "  s" + std::to_string(absorbing[i]) + " [label=\"a=" +
           std::to_string(inst.game().action_value(played)) + "\"" +
           (absorbing[i] == nash_state ? ", shape=doublecircle" : "") + "];\n";
  }
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      if (i == j || costs[i * r + j] == kUnreachable) continue;
      out += "  s" + std::to_string(absorbing[i]) + " -> s" + std::to_string(absorbing[j]) +
             " [label=\"" + std::to_string(costs[i * r + j]) + "\"];\n";
    }
  }
  out += "}\n";
  return out;
}

}  // namespace collusim::stability
