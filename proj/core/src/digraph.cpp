#include "collusim/digraph.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <thread>

namespace collusim {

Digraph Digraph::from_lists(const std::vector<std::vector<std::uint32_t>>& adjacency) {
  Digraph g;
  g.offsets.reserve(adjacency.size() + 1);
  g.offsets.push_back(0);
  std::size_t total = 0;
  for (const auto& row : adjacency) total += row.size();
  g.edges.reserve(total);
  for (const auto& row : adjacency) {
    g.edges.insert(g.edges.end(), row.begin(), row.end());
    g.offsets.push_back(static_cast<std::uint32_t>(g.edges.size()));
  }
  return g;
}

std::vector<std::vector<std::uint32_t>> strongly_connected_components(const Digraph& g) {
  const std::uint32_t n = g.size();
  constexpr std::uint32_t kUnset = 0xffffffffu;
  std::vector<std::uint32_t> index(n, kUnset), lowlink(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::uint32_t> stack;
  std::vector<std::vector<std::uint32_t>> sccs;

  // Explicit DFS frames: (node, next successor position).
  std::vector<std::pair<std::uint32_t, std::uint32_t>> frames;
  std::uint32_t counter = 0;

  for (std::uint32_t start = 0; start < n; ++start) {
    if (index[start] != kUnset) continue;
    frames.emplace_back(start, g.offsets[start]);
    index[start] = lowlink[start] = counter++;
    stack.push_back(start);
    on_stack[start] = true;

    while (!frames.empty()) {
      auto& [u, pos] = frames.back();
      if (pos < g.offsets[u + 1]) {
        const std::uint32_t v = g.edges[pos++];
        if (index[v] == kUnset) {
          index[v] = lowlink[v] = counter++;
          stack.push_back(v);
          on_stack[v] = true;
          frames.emplace_back(v, g.offsets[v]);
        } else if (on_stack[v]) {
          lowlink[u] = std::min(lowlink[u], index[v]);
        }
        continue;
      }
      if (lowlink[u] == index[u]) {
        std::vector<std::uint32_t> scc;
        for (;;) {
          const std::uint32_t w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          scc.push_back(w);
          if (w == u) break;
        }
        sccs.push_back(std::move(scc));
      }
      const std::uint32_t done = u;
      frames.pop_back();
      if (!frames.empty()) {
        lowlink[frames.back().first] = std::min(lowlink[frames.back().first], lowlink[done]);
      }
    }
  }
  return sccs;
}

std::vector<std::vector<std::uint32_t>> closed_classes(const Digraph& g) {
  auto sccs = strongly_connected_components(g);
  std::vector<std::uint32_t> component(g.size(), 0);
  for (std::uint32_t c = 0; c < sccs.size(); ++c) {
    for (std::uint32_t u : sccs[c]) component[u] = c;
  }
  std::vector<bool> closed(sccs.size(), true);
  for (std::uint32_t u = 0; u < g.size(); ++u) {
    for (std::uint32_t v : g.successors(u)) {
      if (component[v] != component[u]) closed[component[u]] = false;
    }
  }
  std::vector<std::vector<std::uint32_t>> out;
  for (std::uint32_t c = 0; c < sccs.size(); ++c) {
    if (closed[c]) out.push_back(std::move(sccs[c]));
  }
  return out;
}

namespace {

// Dense growth-path variant of Edmonds' algorithm, O(n^2) per root.
//
// Components grow along a path of chosen minimum in-edges; a cycle on the
// path contracts immediately into a fresh component whose entry costs are
// the elementwise minima of the members' entry costs less their chosen edge
// weights (re-entering replaces that member's cycle edge). inc[c][u] holds
// the cheapest cost of entering component c from original node u, which for
// the toward-root orientation starts as exactly cost[c][u].
struct ArboWorkspace {
  std::vector<std::uint64_t> inc;       // (2n) x n entry-cost rows
  std::vector<std::uint32_t> dsu;       // over component ids [0, 2n)
  std::vector<std::uint8_t> status;     // 0 new, 1 on path, 2 done
  std::vector<std::uint64_t> chosen_w;  // chosen in-edge weight per component
  std::vector<std::uint32_t> path;

  std::uint32_t find(std::uint32_t x) {
    while (dsu[x] != x) {
      dsu[x] = dsu[dsu[x]];
      x = dsu[x];
    }
    return x;
  }
};

std::uint64_t arborescence_toward_root(std::span<const std::uint64_t> cost, std::uint32_t n,
                                       std::uint32_t root, ArboWorkspace& ws) {
  if (n <= 1) return 0;
  ws.inc.resize(static_cast<std::size_t>(2) * n * n);
  std::memcpy(ws.inc.data(), cost.data(), static_cast<std::size_t>(n) * n * sizeof(std::uint64_t));
  ws.dsu.resize(2 * n);
  for (std::uint32_t i = 0; i < 2 * n; ++i) ws.dsu[i] = i;
  ws.status.assign(2 * n, 0);
  ws.chosen_w.assign(2 * n, 0);
  ws.path.clear();
  ws.status[root] = 2;

  std::uint32_t next_id = n;
  std::uint64_t total = 0;

  for (std::uint32_t start = 0; start < n; ++start) {
    if (ws.status[ws.find(start)] != 0) continue;
    ws.path.push_back(ws.find(start));
    ws.status[ws.path.back()] = 1;

    while (!ws.path.empty()) {
      const std::uint32_t c = ws.path.back();
      // Cheapest entry into c from outside c.
      const std::uint64_t* row = ws.inc.data() + static_cast<std::size_t>(c) * n;
      std::uint64_t best = kInfCost;
      std::uint32_t best_src = 0;
      for (std::uint32_t u = 0; u < n; ++u) {
        if (row[u] < best && ws.find(u) != c) {
          best = row[u];
          best_src = u;
        }
      }
      if (best == kInfCost) return kInfCost;
      total += best;
      ws.chosen_w[c] = best;
      const std::uint32_t s = ws.find(best_src);

      if (ws.status[s] == 0) {
        ws.status[s] = 1;
        ws.path.push_back(s);
        continue;
      }
      if (ws.status[s] == 2) {
        for (std::uint32_t m : ws.path) ws.status[m] = 2;
        ws.path.clear();
        continue;
      }
      // s sits on the path: contract the cycle s .. c.
      const std::uint32_t fresh = next_id++;
      std::uint64_t* merged = ws.inc.data() + static_cast<std::size_t>(fresh) * n;
      for (std::uint32_t u = 0; u < n; ++u) merged[u] = kInfCost;
      for (;;) {
        const std::uint32_t m = ws.path.back();
        ws.path.pop_back();
        const std::uint64_t w = ws.chosen_w[m];
        const std::uint64_t* mrow = ws.inc.data() + static_cast<std::size_t>(m) * n;
        for (std::uint32_t u = 0; u < n; ++u) {
          if (mrow[u] == kInfCost) continue;
          const std::uint64_t adjusted = mrow[u] - w;
          if (adjusted < merged[u]) merged[u] = adjusted;
        }
        ws.dsu[m] = fresh;
        if (m == s) break;
      }
      ws.status[fresh] = 1;
      ws.path.push_back(fresh);
    }
  }
  return total;
}

}  // namespace

std::uint64_t min_arborescence_cost(std::span<const std::uint64_t> cost, std::uint32_t n,
                                    std::uint32_t root) {
  ArboWorkspace ws;
  return arborescence_toward_root(cost, n, root, ws);
}

std::vector<std::uint64_t> min_arborescence_costs_all_roots(std::span<const std::uint64_t> cost,
                                                            std::uint32_t n, int threads) {
  std::vector<std::uint64_t> out(n, kInfCost);
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, std::max<std::uint32_t>(n, 1));
  std::atomic<std::uint32_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      ArboWorkspace ws;
      for (;;) {
        const std::uint32_t root = next.fetch_add(1);
        if (root >= n) return;
        out[root] = arborescence_toward_root(cost, n, root, ws);
      }
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace collusim
