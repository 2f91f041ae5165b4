#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace collusim {

// Compressed sparse-row digraph.
struct Digraph {
  std::vector<std::uint32_t> offsets;  // size() + 1 entries
  std::vector<std::uint32_t> edges;

  static Digraph from_lists(const std::vector<std::vector<std::uint32_t>>& adjacency);
  std::uint32_t size() const { return static_cast<std::uint32_t>(offsets.size()) - 1; }
  std::span<const std::uint32_t> successors(std::uint32_t u) const {
    return {edges.data() + offsets[u], edges.data() + offsets[u + 1]};
  }
};

// Tarjan's algorithm, iterative. Components come out in reverse topological
// order of the condensation.
std::vector<std::vector<std::uint32_t>> strongly_connected_components(const Digraph& g);

// SCCs with no edge leaving the component (the recurrent classes of a finite
// chain whose positive-probability transitions are g's edges).
std::vector<std::vector<std::uint32_t>> closed_classes(const Digraph& g);

inline constexpr std::uint64_t kInfCost = std::numeric_limits<std::uint64_t>::max();

// Minimum-cost spanning arborescence ORIENTED TOWARD `root`: every other
// node keeps exactly one outgoing edge and has a unique directed path to the
// root. `cost` is row-major n*n with cost[u*n+v] the weight of u -> v;
// kInfCost marks a missing edge. Returns the total tree cost, or kInfCost
// when some node cannot reach the root.
std::uint64_t min_arborescence_cost(std::span<const std::uint64_t> cost, std::uint32_t n,
                                    std::uint32_t root);

// Arborescence cost for every root, parallel across roots.
std::vector<std::uint64_t> min_arborescence_costs_all_roots(std::span<const std::uint64_t> cost,
                                                            std::uint32_t n, int threads = 0);

}  // namespace collusim
