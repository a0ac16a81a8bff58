#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "cdp/dynamics.hpp"
#include "cdp/lattice.hpp"

namespace cdp {

// A decreasing path is a chain of adjacent edges whose clocks strictly
// decrease. The decreasing cluster of a set of edges is everything reachable
// from it by such chains, and it is exactly the set of edges whose clocks can
// influence the sources' states. Ties between equal clocks follow the same
// EdgeId rule as the dynamics.

struct DecreasingCluster {
  std::vector<EdgeId> members;  // sorted
  bool censored = false;        // some member touches the boundary of the graph

  bool contains(EdgeId e) const { return std::binary_search(members.begin(), members.end(), e); }
};

namespace detail {

inline bool in_region(std::span<const std::uint8_t> region, EdgeId e) {
  return region.empty() || region[e] != 0;
}

template <EdgeGraph G>
DecreasingCluster grow_cluster(const G& g, std::span<const double> u,
                               std::span<const EdgeId> sources, std::span<const EdgeId> singletons,
                               std::span<const std::uint8_t> region) {
  DecreasingCluster out;
  std::vector<std::uint8_t> seen(g.edge_count(), 0);
  std::vector<EdgeId> stack;
  for (EdgeId e : sources) {
    if (!in_region(region, e)) throw std::invalid_argument("decreasing_cluster: source outside region");
    if (!seen[e]) {
      seen[e] = 1;
      stack.push_back(e);
    }
  }
  while (!stack.empty()) {
    const EdgeId f = stack.back();
    stack.pop_back();
    out.members.push_back(f);
    auto [a, b] = g.endpoints(f);
    for (VertexId v : {a, b}) {
      if (g.is_boundary_vertex(v)) out.censored = true;
      for (EdgeId h : g.incident_edges(v)) {
        if (seen[h] || !in_region(region, h) || !rings_before(u, h, f)) continue;
        seen[h] = 1;
        stack.push_back(h);
      }
    }
  }
  for (EdgeId e : singletons) {
    if (!seen[e]) {
      seen[e] = 1;
      out.members.push_back(e);
    }
  }
  std::sort(out.members.begin(), out.members.end());
  return out;
}

}  // namespace detail

/// Edges of `region` reachable from `sources` by decreasing chains inside
/// the region. An empty region mask means the whole graph.
template <EdgeGraph G>
DecreasingCluster decreasing_cluster(const G& g, std::span<const double> u,
                                     std::span<const EdgeId> sources,
                                     std::span<const std::uint8_t> region = {}) {
  return detail::grow_cluster(g, u, sources, {}, region);
}

/// The time-t cluster: sources that have rung by t contribute their whole
/// decreasing cluster, the others only themselves.
template <EdgeGraph G>
DecreasingCluster restricted_cluster(const G& g, std::span<const double> u,
                                     std::span<const EdgeId> gamma, double t) {
  std::vector<EdgeId> rung, silent;
  for (EdgeId e : gamma) (u[e] <= t ? rung : silent).push_back(e);
  return detail::grow_cluster(g, u, rung, silent, {});
}

/// True iff every endpoint of the time-t cluster of gamma lies in `ball`.
/// Stops as soon as the cluster leaves the ball.
template <EdgeGraph G>
bool xi_indicator(const G& g, std::span<const double> u, std::span<const EdgeId> gamma, double t,
                  const Ball& ball) {
  std::vector<std::uint8_t> seen(g.edge_count(), 0);
  std::vector<EdgeId> stack;
  for (EdgeId e : gamma) {
    auto [a, b] = g.endpoints(e);
    if (!ball.has(a) || !ball.has(b)) return false;
    if (u[e] <= t && !seen[e]) {
      seen[e] = 1;
      stack.push_back(e);
    }
  }
  while (!stack.empty()) {
    const EdgeId f = stack.back();
    stack.pop_back();
    auto [a, b] = g.endpoints(f);
    if (!ball.has(a) || !ball.has(b)) return false;
    for (VertexId v : {a, b}) {
      for (EdgeId h : g.incident_edges(v)) {
        if (seen[h] || !rings_before(u, h, f)) continue;
        seen[h] = 1;
        stack.push_back(h);
      }
    }
  }
  return true;
}

template <EdgeGraph G>
bool xi_indicator(const G& g, std::span<const double> u, std::span<const EdgeId> gamma, double t,
                  int r) {
  return xi_indicator(g, u, gamma, t, graph_ball(g, gamma, r));
}

struct PathLength {
  int length = 0;         // number of edges, including the starting edge
  bool censored = false;  // the search reached the boundary of the graph
};

/// Longest decreasing self-avoiding path (no repeated vertex) whose first
/// edge is e. Exhaustive depth-first search; the decreasing constraint keeps
/// the search tree small.
template <EdgeGraph G>
PathLength longest_decreasing_path(const G& g, std::span<const double> u, EdgeId e,
                                   std::span<const std::uint8_t> region = {}) {
  PathLength out;
  std::vector<std::uint8_t> visited(g.vertex_count(), 0);
  std::function<void(VertexId, EdgeId, int)> extend = [&](VertexId v, EdgeId last, int len) {
    out.length = std::max(out.length, len);
    if (g.is_boundary_vertex(v)) out.censored = true;
    for (EdgeId h : g.incident_edges(v)) {
      if (!detail::in_region(region, h) || !rings_before(u, h, last)) continue;
      const VertexId w = other_end(g.endpoints(h), v);
      if (visited[w]) continue;
      visited[w] = 1;
      extend(w, h, len + 1);
      visited[w] = 0;
    }
  };
  auto [x, y] = g.endpoints(e);
  visited[x] = visited[y] = 1;
  if (g.is_boundary_vertex(x) || g.is_boundary_vertex(y)) out.censored = true;
  extend(y, e, 1);
  extend(x, e, 1);
  return out;
}

/// Longest decreasing trail starting with e: consecutive edges share the
/// vertex the trail passes through, vertices may repeat. Dynamic programming
/// over the acyclic "rings later" order. Always >= longest_decreasing_path.
template <EdgeGraph G>
int longest_decreasing_trail(const G& g, std::span<const double> u, EdgeId e) {
  std::unordered_map<std::uint64_t, int> memo;
  std::function<int(EdgeId, VertexId)> from = [&](EdgeId h, VertexId w) -> int {
    const std::uint64_t key = (static_cast<std::uint64_t>(h) << 32) | w;
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    int best = 1;
    for (EdgeId f : g.incident_edges(w)) {
      if (!rings_before(u, f, h)) continue;
      best = std::max(best, 1 + from(f, other_end(g.endpoints(f), w)));
    }
    memo.emplace(key, best);
    return best;
  };
  auto [x, y] = g.endpoints(e);
  return std::max(from(e, y), from(e, x));
}

/// min(1, 2d (2d-1)^(n-1) / n!): bound on a decreasing self-avoiding path
/// with n edges starting at a given edge.
inline double tail_bound(int d, int n) {
  if (d < 1 || n < 1) throw std::invalid_argument("tail_bound: need d >= 1, n >= 1");
  double v = 2.0 * d;
  for (int i = 2; i <= n; ++i) v *= (2.0 * d - 1.0) / i;
  return std::min(1.0, v);
}

/// min(1, |gamma| e^(2d) (2dt)^r / r!): bound on the time-t cluster of gamma
/// leaving the radius-r ball.
inline double xi_bound(std::size_t gamma_size, int d, double t, int r) {
  if (d < 1 || r < 0) throw std::invalid_argument("xi_bound: need d >= 1, r >= 0");
  double v = static_cast<double>(gamma_size) * std::exp(2.0 * d);
  for (int i = 1; i <= r; ++i) v *= 2.0 * d * t / i;
  return std::min(1.0, v);
}

}  // namespace cdp
