#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "cdp/clusters.hpp"
#include "cdp/dynamics.hpp"
#include "cdp/lattice.hpp"

namespace cdp {

/// Replacement clocks on a region of edges; everything else keeps the base.
struct ClockModification {
  std::vector<EdgeId> region;       // sorted, unique
  std::vector<double> replacement;  // parallel to region
};

inline ClockField apply(const ClockField& base, const ClockModification& mod) {
  if (mod.region.size() != mod.replacement.size())
    throw std::invalid_argument("apply: region/replacement size mismatch");
  ClockField out = base;
  for (std::size_t i = 0; i < mod.region.size(); ++i) {
    const EdgeId e = mod.region[i];
    const double r = mod.replacement[i];
    if (e >= out.u.size()) throw std::invalid_argument("apply: region edge out of range");
    if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("apply: replacement outside [0,1)");
    out.u[e] = r;
  }
  return out;
}

namespace detail {

// Distinct values in (t, 1), evenly spaced; the j-th of `count` edges
// (ascending id) gets the j-th value.
inline double above(double t, std::size_t j, std::size_t count) {
  return t + (1.0 - t) * static_cast<double>(j + 1) / static_cast<double>(count + 1);
}

inline std::vector<EdgeId> merged_sorted(std::vector<EdgeId> a, const std::vector<EdgeId>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

inline VertexId inner_endpoint(const LatticeBox& box, EdgeId e, int m) {
  auto [a, b] = box.endpoints(e);
  return box.in_box(a, m) ? a : b;
}

}  // namespace detail

/// Modification on E(Lambda_m) and the external edge boundary of Lambda_m:
/// interior edges and t-closed boundary edges get clocks above t, t-open
/// boundary edges keep theirs.
inline ClockModification boundary_simplification(const LatticeBox& box, const ClockField& u, int m,
                                                  double t, int k) {
  if (!(t >= 0.0 && t < 1.0)) throw std::invalid_argument("simplify_boundary: t must lie in [0,1)");
  const BoundarySets sets = boundary_sets(box, m);
  const OpeningSchedule s = run(box, u, k);

  ClockModification mod;
  mod.region = detail::merged_sorted(sets.interior_edges, sets.external_edges);
  std::vector<std::uint8_t> keep(box.edge_count(), 0);
  for (EdgeId e : sets.external_edges)
    if (s.open_at(e, t)) keep[e] = 1;

  std::size_t raised = 0;
  for (EdgeId e : mod.region) raised += keep[e] ? 0 : 1;
  std::size_t j = 0;
  mod.replacement.reserve(mod.region.size());
  for (EdgeId e : mod.region)
    mod.replacement.push_back(keep[e] ? u.u[e] : detail::above(t, j++, raised));
  return mod;
}

inline ClockField simplify_boundary(const LatticeBox& box, const ClockField& u, int m, double t,
                                    int k) {
  return apply(u, boundary_simplification(box, u, m, t, k));
}

/// Checks that r is a modification of u on E(Lambda_m) plus the external
/// edge boundary that simplifies the boundary of Lambda_m at time t: closed
/// boundary edges ring after t; open ones keep their clock and, in the
/// dynamics driven by r, find their inner endpoint below k until they ring.
inline bool simplifies_boundary(const LatticeBox& box, const ClockField& u, const ClockField& r,
                                int m, double t, int k) {
  const BoundarySets sets = boundary_sets(box, m);
  std::vector<std::uint8_t> in_region(box.edge_count(), 0);
  for (EdgeId e : sets.interior_edges) in_region[e] = 1;
  for (EdgeId e : sets.external_edges) in_region[e] = 1;
  for (EdgeId e = 0; e < box.edge_count(); ++e)
    if (!in_region[e] && u.u[e] != r.u[e]) return false;

  const OpeningSchedule su = run(box, u, k);
  const OpeningSchedule sr = run(box, r, k);
  for (EdgeId e : sets.external_edges) {
    if (!su.open_at(e, t)) {
      if (!(r.u[e] > t)) return false;
      continue;
    }
    if (r.u[e] != u.u[e]) return false;
    const VertexId x = detail::inner_endpoint(box, e, m);
    int before = 0;
    for (EdgeId f : box.incident_edges(x))
      if (f != e && sr.open_time[f] < r.u[e]) ++before;
    if (before >= k) return false;
  }
  return true;
}

/// States at time t agree on every edge outside E(Lambda_m).
inline bool outside_states_equal(const LatticeBox& box, const ClockField& u, const ClockField& r,
                                 int m, double t, int k) {
  const OpeningSchedule su = run(box, u, k);
  const OpeningSchedule sr = run(box, r, k);
  for (EdgeId e = 0; e < box.edge_count(); ++e) {
    auto [a, b] = box.endpoints(e);
    if (box.in_box(a, m) && box.in_box(b, m)) continue;
    if (su.open_at(e, t) != sr.open_at(e, t)) return false;
  }
  return true;
}

/// Edges of a vertex path; throws unless the path is self-avoiding and
/// consecutive vertices are adjacent.
inline std::vector<EdgeId> path_edges(const LatticeBox& box, std::span<const VertexId> path) {
  std::set<VertexId> seen;
  for (VertexId v : path) {
    if (v >= box.vertex_count()) throw std::invalid_argument("path: vertex out of range");
    if (!seen.insert(v).second) throw std::invalid_argument("path: not self-avoiding");
  }
  std::vector<EdgeId> edges;
  for (std::size_t i = 1; i < path.size(); ++i) {
    auto e = box.edge_between(path[i - 1], path[i]);
    if (!e) throw std::invalid_argument("path: consecutive vertices are not adjacent");
    edges.push_back(*e);
  }
  return edges;
}

/// Modification on `region` that rings the path edges at increasing times in
/// (0, t) along the path and every other region edge after t.
inline ClockModification path_opening(const LatticeBox& box, std::span<const VertexId> path,
                                      std::span<const EdgeId> region, double t) {
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("open_path_modification: t must lie in (0,1)");
  const std::vector<EdgeId> gamma = path_edges(box, path);
  ClockModification mod;
  mod.region.assign(region.begin(), region.end());
  std::sort(mod.region.begin(), mod.region.end());
  mod.region.erase(std::unique(mod.region.begin(), mod.region.end()), mod.region.end());

  std::vector<std::int64_t> position(box.edge_count(), -1);
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (!std::binary_search(mod.region.begin(), mod.region.end(), gamma[i]))
      throw std::invalid_argument("open_path_modification: path edge outside region");
    position[gamma[i]] = static_cast<std::int64_t>(i);
  }
  const std::size_t raised = mod.region.size() - gamma.size();
  std::size_t j = 0;
  for (EdgeId e : mod.region) {
    if (position[e] >= 0)
      mod.replacement.push_back(t * static_cast<double>(position[e] + 1) /
                                static_cast<double>(gamma.size() + 1));
    else
      mod.replacement.push_back(detail::above(t, j++, raised));
  }
  return mod;
}

inline ClockField open_path_modification(const LatticeBox& box, const ClockField& u,
                                         std::span<const VertexId> path,
                                         std::span<const EdgeId> region, double t) {
  return apply(u, path_opening(box, path, region, t));
}

/// Axis-by-axis lattice path from a to b (inclusive). Stays inside any
/// centred box containing both ends.
inline std::vector<VertexId> l_path(const LatticeBox& box, VertexId a, VertexId b) {
  std::vector<VertexId> path{a};
  Coord cur = box.decode(a);
  const Coord goal = box.decode(b);
  for (int axis = 0; axis < box.dim(); ++axis) {
    while (cur[axis] != goal[axis]) {
      cur[axis] += cur[axis] < goal[axis] ? 1 : -1;
      path.push_back(box.encode(cur));
    }
  }
  return path;
}

struct MergeReport {
  bool applicable = false;
  bool merged = false;
  bool outside_equal = false;
  int n = 0;
  int m = 0;
  double t = 0.0;
  int k = 0;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  VertexId v1 = 0;
  VertexId v2 = 0;
  std::size_t path_length = 0;
};

inline void to_json(nlohmann::json& j, const MergeReport& r) {
  j = nlohmann::json{{"applicable", r.applicable}, {"merged", r.merged},
                     {"outside_equal", r.outside_equal}, {"n", r.n}, {"m", r.m}, {"t", r.t},
                     {"k", r.k}, {"seed", r.seed}, {"replica", r.replica}};
}

/// Two-step surgery joining two boundary-reaching clusters through Lambda_m.
///
/// Representatives are the smallest-id vertices of the inner boundary of
/// Lambda_m that have a neighbour in Lambda_{m-1} and reach the box boundary
/// without using edges of E(Lambda_m), one per distinct cluster of the
/// time-t configuration with E(Lambda_m) removed.
/// Step one simplifies the boundary of Lambda_m; step two opens
/// gamma = <v1,u1> alpha <u2,v2> and pushes the rest of E(Lambda_{m-1}) and
/// its external boundary above t.
inline MergeReport merge_experiment(const LatticeBox& box, const ClockField& u, int m, double t,
                                    int k) {
  if (k < 3) throw std::invalid_argument("merge_experiment: requires k >= 3");
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("merge_experiment: t must lie in (0,1)");
  if (box.periodic()) throw std::invalid_argument("merge_experiment: free boundary condition required");
  if (m < 1 || m >= box.half_side()) throw std::invalid_argument("merge_experiment: need 1 <= m < n");

  MergeReport rep;
  rep.n = box.half_side();
  rep.m = m;
  rep.t = t;
  rep.k = k;
  rep.seed = u.seed;
  rep.replica = u.replica;

  const OpeningSchedule su = run(box, u, k);
  const Configuration cfg = config_at(su, t);
  Configuration outside = cfg;
  for (EdgeId e = 0; e < box.edge_count(); ++e) {
    auto [a, b] = box.endpoints(e);
    if (box.in_box(a, m) && box.in_box(b, m)) outside.open[e] = 0;
  }
  const ClusterLabeling lab_out = label(box, outside);

  auto inner_neighbour = [&](VertexId v) -> std::optional<VertexId> {
    for (EdgeId e : box.incident_edges(v)) {
      const VertexId w = other_end(box.endpoints(e), v);
      if (box.in_box(w, m - 1)) return w;
    }
    return std::nullopt;
  };

  std::vector<VertexId> reps;
  for (VertexId v = 0; v < box.vertex_count() && reps.size() < 2; ++v) {
    if (box.norm_from_center(v) != m) continue;
    if (!lab_out.touches_boundary[lab_out.root[v]]) continue;
    if (!inner_neighbour(v)) continue;
    if (!reps.empty() && lab_out.connected(reps.front(), v)) continue;
    reps.push_back(v);
  }
  if (reps.size() < 2) return rep;
  rep.applicable = true;
  rep.v1 = reps[0];
  rep.v2 = reps[1];

  const ClockField r1 = simplify_boundary(box, u, m, t, k);

  const VertexId u1 = *inner_neighbour(rep.v1);
  const VertexId u2 = *inner_neighbour(rep.v2);
  std::vector<VertexId> gamma{rep.v1};
  for (VertexId w : l_path(box, u1, u2)) gamma.push_back(w);
  gamma.push_back(rep.v2);
  rep.path_length = gamma.size() - 1;

  const BoundarySets inner = boundary_sets(box, m - 1);
  const std::vector<EdgeId> h = detail::merged_sorted(inner.interior_edges, inner.external_edges);
  const ClockField r2 = open_path_modification(box, r1, gamma, h, t);

  const OpeningSchedule sr = run(box, r2, k);
  const ClusterLabeling lab_r = label(box, config_at(sr, t));
  rep.merged = lab_r.connected(rep.v1, rep.v2) && lab_r.touches_boundary[lab_r.root[rep.v1]];
  rep.outside_equal = true;
  for (EdgeId e = 0; e < box.edge_count(); ++e) {
    auto [a, b] = box.endpoints(e);
    if (box.in_box(a, m) && box.in_box(b, m)) continue;
    if (su.open_at(e, t) != sr.open_at(e, t)) {
      rep.outside_equal = false;
      break;
    }
  }
  return rep;
}

}  // namespace cdp
