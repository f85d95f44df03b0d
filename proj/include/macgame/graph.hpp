#pragma once

#include <numeric>
#include <optional>
#include <vector>

#include "macgame/game.hpp"

namespace macgame {

/// Union-find with path halving and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  /// Merges the sets of x and y; false if they were already joined.
  bool unite(std::size_t x, std::size_t y) {
    x = find(x);
    y = find(y);
    if (x == y) return false;
    if (size_[x] < size_[y]) std::swap(x, y);
    parent_[y] = x;
    size_[x] += size_[y];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

/// Nodes a user transmits to: p(k, a) > support_tol * P_k, with P_k the row sum.
inline Mask support_mask(const PowerProfile& profile, double support_tol) {
  const Matrix& p = profile.allocation();
  Mask s(p.rows(), p.cols());
  for (Index k = 0; k < p.rows(); ++k) {
    const double budget = p.row(k).sum();
    for (Index a = 0; a < p.cols(); ++a) s(k, a) = p(k, a) > support_tol * budget;
  }
  return s;
}

struct GraphEdge {
  Index from;
  Index to;
  Index owner;
  bool operator==(const GraphEdge&) const = default;
};

/**
 * Multigraph on the network nodes representing a power profile: each user
 * picks a hub among its supported nodes and joins it to every other node it
 * supports. Parallel edges from different owners are kept.
 */
struct ProfileGraph {
  Index num_nodes = 0;
  std::vector<GraphEdge> edges;
  std::vector<std::optional<Index>> hubs;  // empty for users with no support
};

/// Builds the graph from a support mask; `hub_choice[k]` overrides the hub when it is supported.
inline ProfileGraph profile_graph(const Mask& support,
                                  const std::vector<std::optional<Index>>& hub_choice = {}) {
  ProfileGraph g;
  g.num_nodes = support.cols();
  g.hubs.resize(std::size_t(support.rows()));
  for (Index k = 0; k < support.rows(); ++k) {
    std::optional<Index> hub;
    if (std::size_t(k) < hub_choice.size() && hub_choice[std::size_t(k)] &&
        support(k, *hub_choice[std::size_t(k)]))
      hub = hub_choice[std::size_t(k)];
    for (Index a = 0; a < support.cols() && !hub; ++a)
      if (support(k, a)) hub = a;
    g.hubs[std::size_t(k)] = hub;
    if (!hub) continue;
    for (Index a = 0; a < support.cols(); ++a)
      if (support(k, a) && a != *hub) g.edges.push_back({*hub, a, k});
  }
  return g;
}

/// Hub of each user is its lowest-index supported node.
inline ProfileGraph profile_graph(const PowerProfile& profile, double support_tol) {
  return profile_graph(support_mask(profile, support_tol));
}

/// No cycles, counting two parallel edges as a cycle.
inline bool is_forest(const ProfileGraph& graph) {
  DisjointSets sets(std::size_t(graph.num_nodes));
  for (const GraphEdge& e : graph.edges)
    if (!sets.unite(std::size_t(e.from), std::size_t(e.to))) return false;
  return true;
}

/// Dimension of the smallest face of the profile space containing the profile in its interior.
inline Index equilibrium_face_dim(const Mask& support) {
  Index dim = 0;
  for (Index k = 0; k < support.rows(); ++k) dim += std::max<Index>(0, support.row(k).count() - 1);
  return dim;
}

inline Index equilibrium_face_dim(const PowerProfile& profile, double support_tol) {
  return equilibrium_face_dim(support_mask(profile, support_tol));
}

}  // namespace macgame
