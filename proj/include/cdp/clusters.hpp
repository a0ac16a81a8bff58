#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "cdp/dynamics.hpp"
#include "cdp/lattice.hpp"
#include "cdp/union_find.hpp"

namespace cdp {

/// Open clusters of one configuration.
struct ClusterLabeling {
  std::vector<VertexId> root;                  // smallest vertex id of the component
  std::vector<std::uint32_t> size;             // indexed by root; 0 for non-roots
  std::vector<std::uint8_t> touches_boundary;  // indexed by root
  std::array<bool, kMaxDim> wraps{};           // periodic: some cluster winds around axis a
  std::size_t component_count = 0;

  bool connected(VertexId x, VertexId y) const { return root[x] == root[y]; }
  std::uint32_t cluster_size(VertexId v) const { return size[root[v]]; }

  /// Component sizes, largest first.
  std::vector<std::uint32_t> sizes_descending() const {
    std::vector<std::uint32_t> out;
    out.reserve(component_count);
    for (VertexId v = 0; v < root.size(); ++v)
      if (root[v] == v) out.push_back(size[v]);
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
  }
};

template <EdgeGraph G>
ClusterLabeling label(const G& g, const Configuration& config) {
  if (config.open.size() != g.edge_count()) throw std::invalid_argument("label: size mismatch");
  const std::size_t nv = g.vertex_count();
  ClusterLabeling lab;
  lab.root.resize(nv);

  constexpr bool kLattice = std::is_same_v<G, LatticeBox>;
  bool torus = false;
  if constexpr (kLattice) torus = g.periodic();

  if (torus) {
    if constexpr (kLattice) {
      DisplacementUnionFind uf(nv, g.dim());
      for (EdgeId e = 0; e < g.edge_count(); ++e) {
        if (!config.open[e]) continue;
        auto [a, b] = g.endpoints(e);
        DisplacementUnionFind::Offset step{};
        step[g.edge_axis(e)] = 1;
        auto winding = uf.unite(a, b, step);
        for (int i = 0; i < g.dim(); ++i)
          if (winding[i] != 0) lab.wraps[i] = true;
      }
      DisplacementUnionFind::Offset scratch;
      for (VertexId v = 0; v < nv; ++v) lab.root[v] = uf.find(v, scratch);
    }
  } else {
    DisjointSet uf(nv);
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      if (!config.open[e]) continue;
      auto [a, b] = g.endpoints(e);
      uf.unite(a, b);
    }
    for (VertexId v = 0; v < nv; ++v) lab.root[v] = uf.find(v);
  }

  lab.size.assign(nv, 0);
  lab.touches_boundary.assign(nv, 0);
  for (VertexId v = 0; v < nv; ++v) {
    const VertexId r = lab.root[v];
    if (lab.size[r]++ == 0) ++lab.component_count;
    if (g.is_boundary_vertex(v)) lab.touches_boundary[r] = 1;
  }
  return lab;
}

namespace detail {

// BFS over edges open at time t. visit(v) returning true stops the search.
template <EdgeGraph G, class Visit>
bool open_bfs(const G& g, const OpeningSchedule& s, double t, VertexId start, Visit&& visit) {
  std::vector<std::uint8_t> seen(g.vertex_count(), 0);
  std::deque<VertexId> queue{start};
  seen[start] = 1;
  while (!queue.empty()) {
    VertexId v = queue.front();
    queue.pop_front();
    if (visit(v)) return true;
    for (EdgeId e : g.incident_edges(v)) {
      if (!s.open_at(e, t)) continue;
      VertexId w = other_end(g.endpoints(e), v);
      if (!seen[w]) {
        seen[w] = 1;
        queue.push_back(w);
      }
    }
  }
  return false;
}

}  // namespace detail

/// Finite-volume proxy for the origin percolating: the origin's open
/// cluster at time t reaches the boundary of the free box.
inline bool theta_hat(const LatticeBox& box, const OpeningSchedule& s, double t) {
  if (box.periodic()) throw std::invalid_argument("theta_hat: free boundary condition required");
  return detail::open_bfs(box, s, t, box.origin(),
                          [&](VertexId v) { return box.is_boundary_vertex(v); });
}

/// Indicator that x and y are in the same open cluster at time t.
inline bool two_point_hat(const LatticeBox& box, const OpeningSchedule& s, double t, VertexId x,
                          VertexId y) {
  if (!box.periodic()) throw std::invalid_argument("two_point_hat: periodic boundary condition required");
  if (x >= box.vertex_count() || y >= box.vertex_count())
    throw std::invalid_argument("two_point_hat: vertex out of range");
  return detail::open_bfs(box, s, t, x, [&](VertexId v) { return v == y; });
}

/// Some open cluster winds around the torus along `axis`.
inline bool wraps_around(const LatticeBox& box, const OpeningSchedule& s, double t, int axis = 0) {
  if (!box.periodic()) throw std::invalid_argument("wraps_around: periodic boundary condition required");
  return label(box, config_at(s, t)).wraps[axis];
}

/// Free box: some open cluster touches both faces orthogonal to `axis`.
inline bool crosses(const LatticeBox& box, const Configuration& config, int axis = 0) {
  if (box.periodic()) throw std::invalid_argument("crosses: free boundary condition required");
  ClusterLabeling lab = label(box, config);
  std::vector<std::uint8_t> side(box.vertex_count(), 0);
  for (VertexId v = 0; v < box.vertex_count(); ++v) {
    const int c = box.decode(v)[axis];
    if (c == 0) side[lab.root[v]] |= 1;
    if (c == box.side() - 1) side[lab.root[v]] |= 2;
  }
  return std::any_of(side.begin(), side.end(), [](std::uint8_t f) { return f == 3; });
}

struct GiantStats {
  std::size_t giant_count = 0;
  std::uint32_t largest = 0;
  std::uint32_t second = 0;
};

/// Number of components holding at least an eps fraction of all vertices,
/// plus the two largest component sizes.
inline GiantStats uniqueness_stats(const ClusterLabeling& lab, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("uniqueness_stats: eps must lie in (0,1)");
  GiantStats g;
  const double threshold = eps * static_cast<double>(lab.root.size());
  for (VertexId v = 0; v < lab.root.size(); ++v) {
    if (lab.root[v] != v) continue;
    const std::uint32_t sz = lab.size[v];
    if (static_cast<double>(sz) >= threshold) ++g.giant_count;
    if (sz > g.largest) {
      g.second = g.largest;
      g.largest = sz;
    } else if (sz > g.second) {
      g.second = sz;
    }
  }
  return g;
}

struct TrifurcationCount {
  std::size_t count = 0;
  std::size_t bound = 0;  // |inner boundary of Lambda_m|
  bool violates() const { return count > bound; }
};

/// Encounter-point proxy: vertices v of Lambda_m whose cluster reaches the
/// box boundary and such that removing v leaves at least three pieces of
/// that cluster which each still reach the boundary.
inline TrifurcationCount trifurcation_proxy_count(const LatticeBox& box, const OpeningSchedule& s,
                                                  double t, int m) {
  if (box.periodic())
    throw std::invalid_argument("trifurcation_proxy_count: free boundary condition required");
  if (m < 0 || m >= box.half_side()) throw std::invalid_argument("trifurcation_proxy_count: need m < n");
  const Configuration config = config_at(s, t);
  const ClusterLabeling lab = label(box, config);

  TrifurcationCount out;
  std::vector<std::int64_t> mark(box.vertex_count(), -1);
  std::deque<VertexId> queue;
  for (VertexId v = 0; v < box.vertex_count(); ++v) {
    const int r = box.norm_from_center(v);
    if (r > m) continue;
    if (r == m) ++out.bound;
    if (!lab.touches_boundary[lab.root[v]]) continue;

    int open_degree = 0;
    for (EdgeId e : box.incident_edges(v)) open_degree += config.open[e];
    if (open_degree < 3) continue;

    int arms = 0;
    mark[v] = v;
    for (EdgeId e : box.incident_edges(v)) {
      if (!config.open[e]) continue;
      const VertexId w = other_end(box.endpoints(e), v);
      if (mark[w] == static_cast<std::int64_t>(v)) continue;
      bool reaches = false;
      mark[w] = v;
      queue.assign(1, w);
      while (!queue.empty()) {
        VertexId x = queue.front();
        queue.pop_front();
        if (box.is_boundary_vertex(x)) reaches = true;
        for (EdgeId f : box.incident_edges(x)) {
          if (!config.open[f]) continue;
          const VertexId y = other_end(box.endpoints(f), x);
          if (mark[y] != static_cast<std::int64_t>(v)) {
            mark[y] = v;
            queue.push_back(y);
          }
        }
      }
      if (reaches) ++arms;
    }
    if (arms >= 3) ++out.count;
  }
  return out;
}

}  // namespace cdp
