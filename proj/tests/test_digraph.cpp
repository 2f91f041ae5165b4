#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "collusim/digraph.hpp"
#include "collusim/rng.hpp"

using namespace collusim;

namespace {

// Reachability-closure oracle for closed communicating classes: u and v are
// in the same class iff each reaches the other, and the class is closed iff
// nothing outside is reachable from it.
std::vector<std::set<std::uint32_t>> closure_oracle(
    const std::vector<std::vector<std::uint32_t>>& adj) {
  const std::size_t n = adj.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t u = 0; u < n; ++u) {
    reach[u][u] = true;
    for (auto v : adj[u]) reach[u][v] = true;
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!reach[i][k]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (reach[k][j]) reach[i][j] = true;
      }
    }
  }
  std::vector<std::set<std::uint32_t>> classes;
  std::vector<bool> used(n, false);
  for (std::uint32_t u = 0; u < n; ++u) {
    if (used[u]) continue;
    std::set<std::uint32_t> cls;
    for (std::uint32_t v = 0; v < n; ++v) {
      if (reach[u][v] && reach[v][u]) cls.insert(v);
    }
    bool closed = true;
    for (std::uint32_t m : cls) {
      for (std::uint32_t w = 0; w < n; ++w) {
        if (reach[m][w] && !cls.count(w)) closed = false;
      }
    }
    for (std::uint32_t m : cls) used[m] = true;
    if (closed) classes.push_back(std::move(cls));
  }
  return classes;
}

std::vector<std::set<std::uint32_t>> as_sets(
    const std::vector<std::vector<std::uint32_t>>& classes) {
  std::vector<std::set<std::uint32_t>> out;
  for (const auto& c : classes) out.emplace_back(c.begin(), c.end());
  return out;
}

bool same_family(std::vector<std::set<std::uint32_t>> a, std::vector<std::set<std::uint32_t>> b) {
  auto key = [](const std::set<std::uint32_t>& s) { return *s.begin(); };
  std::sort(a.begin(), a.end(), [&](auto& x, auto& y) { return key(x) < key(y); });
  std::sort(b.begin(), b.end(), [&](auto& x, auto& y) { return key(x) < key(y); });
  return a == b;
}

// Exhaustive minimum toward-root arborescence: every non-root node picks one
// outgoing edge; the assignment must reach the root from everywhere.
std::uint64_t arborescence_oracle(const std::vector<std::uint64_t>& cost, std::uint32_t n,
                                  std::uint32_t root) {
  std::vector<std::uint32_t> nodes;
  for (std::uint32_t v = 0; v < n; ++v) {
    if (v != root) nodes.push_back(v);
  }
  std::vector<std::uint32_t> choice(nodes.size(), 0);
  std::uint64_t best = kInfCost;
  for (;;) {
    std::uint64_t total = 0;
    bool valid = true;
    std::vector<std::uint32_t> parent(n, n);
    for (std::size_t i = 0; i < nodes.size() && valid; ++i) {
      const std::uint32_t v = nodes[i];
      const std::uint32_t p = choice[i] >= v ? choice[i] + 1 : choice[i];  // skip self
      const std::uint64_t w = cost[v * n + p];
      if (w == kInfCost) {
        valid = false;
      } else {
        parent[v] = p;
        total += w;
      }
    }
    if (valid) {
      for (std::uint32_t v = 0; v < n && valid; ++v) {
        if (v == root) continue;
        std::uint32_t cur = v;
        for (std::uint32_t steps = 0; cur != root; ++steps) {
          if (steps > n) {
            valid = false;
            break;
          }
          cur = parent[cur];
        }
      }
      if (valid) best = std::min(best, total);
    }
    // Next assignment in mixed radix n-1.
    std::size_t i = 0;
    for (; i < choice.size(); ++i) {
      if (++choice[i] < n - 1) break;
      choice[i] = 0;
    }
    if (i == choice.size()) break;
  }
  return best;
}

}  // namespace

TEST_CASE("closed classes: one big cycle is a single class") {
  std::vector<std::vector<std::uint32_t>> adj(6);
  for (std::uint32_t u = 0; u < 6; ++u) adj[u] = {(u + 1) % 6};
  const auto classes = closed_classes(Digraph::from_lists(adj));
  REQUIRE(classes.size() == 1);
  CHECK(classes.front().size() == 6);
}

TEST_CASE("closed classes match the reachability-closure oracle on random digraphs") {
  Rng rng(43);
  for (int trial = 0; trial < 60; ++trial) {
    const std::uint32_t n = 3 + rng.next_below(60);
    std::vector<std::vector<std::uint32_t>> adj(n);
    for (std::uint32_t u = 0; u < n; ++u) {
      const std::uint32_t degree = rng.next_below(4);
      for (std::uint32_t d = 0; d < degree; ++d) adj[u].push_back(rng.next_below(n));
    }
    CHECK(same_family(as_sets(closed_classes(Digraph::from_lists(adj))), closure_oracle(adj)));
  }
}

TEST_CASE("tarjan handles self loops and duplicate edges") {
  std::vector<std::vector<std::uint32_t>> adj = {{0, 1, 1}, {2}, {1}, {3}};
  const auto sccs = strongly_connected_components(Digraph::from_lists(adj));
  CHECK(sccs.size() == 3);  // {0}, {1,2}, {3}
  const auto classes = closed_classes(Digraph::from_lists(adj));
  REQUIRE(classes.size() == 2);
}

TEST_CASE("arborescence: two nodes, both roots cost 1") {
  const std::vector<std::uint64_t> cost = {kInfCost, 1, 1, kInfCost};
  CHECK(min_arborescence_cost(cost, 2, 0) == 1);
  CHECK(min_arborescence_cost(cost, 2, 1) == 1);
}

TEST_CASE("arborescence: unreachable root reports infinity") {
  // 2 -> nothing; rooting at 0 leaves 2 stranded.
  std::vector<std::uint64_t> cost(9, kInfCost);
  cost[0 * 3 + 1] = 1;
  cost[1 * 3 + 0] = 1;
  CHECK(min_arborescence_cost(cost, 3, 0) == kInfCost);
}

TEST_CASE("arborescence matches exhaustive enumeration on small digraphs") {
  Rng rng(47);
  for (int trial = 0; trial < 120; ++trial) {
    const std::uint32_t n = 2 + rng.next_below(6);  // up to 7 nodes
    std::vector<std::uint64_t> cost(static_cast<std::size_t>(n) * n, kInfCost);
    for (std::uint32_t u = 0; u < n; ++u) {
      for (std::uint32_t v = 0; v < n; ++v) {
        if (u == v) continue;
        if (rng.next_double() < 0.75) cost[u * n + v] = 1 + rng.next_below(9);
      }
    }
    for (std::uint32_t root = 0; root < n; ++root) {
      CHECK(min_arborescence_cost(cost, n, root) == arborescence_oracle(cost, n, root));
    }
  }
}

TEST_CASE("all-roots batch equals per-root calls") {
  Rng rng(53);
  const std::uint32_t n = 12;
  std::vector<std::uint64_t> cost(n * n, kInfCost);
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t v = 0; v < n; ++v) {
      if (u != v) cost[u * n + v] = 1 + rng.next_below(4);
    }
  }
  const auto all = min_arborescence_costs_all_roots(cost, n, 2);
  for (std::uint32_t root = 0; root < n; ++root) {
    CHECK(all[root] == min_arborescence_cost(cost, n, root));
  }
}
