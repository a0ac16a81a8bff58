#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cdp/graph.hpp"
#include "cdp/lattice.hpp"
#include "cdp/rng.hpp"

namespace cdp {

/// One uniform clock per edge; the only randomness of the model.
struct ClockField {
  std::vector<double> u;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;

  std::size_t size() const { return u.size(); }
  double operator[](EdgeId e) const { return u[e]; }
};

/// Strict total order on edges: by clock, ties broken by EdgeId.
inline bool rings_before(std::span<const double> u, EdgeId a, EdgeId b) {
  return u[a] < u[b] || (u[a] == u[b] && a < b);
}

inline std::uint64_t stream_tag(const LatticeBox& box) {
  return (static_cast<std::uint64_t>(box.dim()) << 40) |
         (static_cast<std::uint64_t>(box.side()) << 8) | static_cast<std::uint64_t>(box.bc());
}

inline std::uint64_t stream_tag(const SimpleGraph& g) {
  const std::string s = g.to_string();
  return fnv1a(s.data(), s.size());
}

template <EdgeGraph G>
ClockField sample_clocks(const G& g, std::uint64_t seed, std::uint64_t replica) {
  auto gen = make_stream(seed, replica, {stream_tag(g), g.edge_count()});
  ClockField f;
  f.seed = seed;
  f.replica = replica;
  f.u.resize(g.edge_count());
  for (double& x : f.u) x = uniform01(gen);
  return f;
}

/// Verdict of every edge. Accepted edges open at their own clock and stay
/// open; rejected edges never open.
struct OpeningSchedule {
  static constexpr double kNever = std::numeric_limits<double>::infinity();

  std::vector<double> open_time;  // u[e] if accepted, kNever otherwise
  int k = 0;

  std::size_t size() const { return open_time.size(); }
  bool accepted(EdgeId e) const { return open_time[e] != kNever; }
  bool open_at(EdgeId e, double t) const { return open_time[e] <= t; }
};

/// Open edges at a fixed time t.
struct Configuration {
  std::vector<std::uint8_t> open;
  double t = 0.0;

  bool operator[](EdgeId e) const { return open[e] != 0; }
  std::size_t open_count() const {
    return static_cast<std::size_t>(std::count(open.begin(), open.end(), std::uint8_t{1}));
  }
};

inline void check_constraint(int k, int cap) {
  if (k < 1 || k > cap)
    throw std::invalid_argument("dynamics: k must be in [1, " + std::to_string(cap) + "], got " +
                                std::to_string(k));
}

/// Edges in ringing order.
inline std::vector<EdgeId> ringing_order(std::span<const double> u) {
  std::vector<std::pair<double, EdgeId>> keyed(u.size());
  for (EdgeId e = 0; e < u.size(); ++e) keyed[e] = {u[e], e};
  std::sort(keyed.begin(), keyed.end());
  std::vector<EdgeId> order(u.size());
  for (std::size_t i = 0; i < keyed.size(); ++i) order[i] = keyed[i].second;
  return order;
}

/// Runs the constrained-degree dynamics: edges are processed in ringing
/// order and accepted iff both endpoints have fewer than k accepted edges.
template <EdgeGraph G>
OpeningSchedule run(const G& g, std::span<const double> u, int k) {
  check_constraint(k, g.max_constraint());
  if (u.size() != g.edge_count()) throw std::invalid_argument("dynamics: clock count mismatch");
  OpeningSchedule s;
  s.k = k;
  s.open_time.assign(u.size(), OpeningSchedule::kNever);
  std::vector<std::uint8_t> deg(g.vertex_count(), 0);
  const auto cap = static_cast<std::uint8_t>(k);
  for (EdgeId e : ringing_order(u)) {
    auto [x, y] = g.endpoints(e);
    if (deg[x] < cap && deg[y] < cap) {
      s.open_time[e] = u[e];
      ++deg[x];
      ++deg[y];
    }
  }
  return s;
}

template <EdgeGraph G>
OpeningSchedule run(const G& g, const ClockField& clocks, int k) {
  return run(g, std::span<const double>(clocks.u), k);
}

inline Configuration config_at(const OpeningSchedule& s, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("config_at: t must lie in [0,1]");
  Configuration c;
  c.t = t;
  c.open.resize(s.size());
  for (std::size_t e = 0; e < s.size(); ++e) c.open[e] = s.open_time[e] <= t ? 1 : 0;
  return c;
}

template <EdgeGraph G>
int degree_at(const G& g, const OpeningSchedule& s, VertexId v, double t) {
  int deg = 0;
  for (EdgeId e : g.incident_edges(v)) deg += s.open_at(e, t) ? 1 : 0;
  return deg;
}

/// Recomputes each verdict from the accepted edges that ring strictly
/// earlier. True iff every verdict is reproduced.
template <EdgeGraph G>
bool replay_matches(const G& g, std::span<const double> u, const OpeningSchedule& s) {
  if (s.size() != g.edge_count() || u.size() != g.edge_count()) return false;
  auto earlier_accepted = [&](VertexId v, EdgeId e) {
    int n = 0;
    for (EdgeId f : g.incident_edges(v))
      if (f != e && s.accepted(f) && rings_before(u, f, e)) ++n;
    return n;
  };
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    auto [x, y] = g.endpoints(e);
    const bool admit = earlier_accepted(x, e) < s.k && earlier_accepted(y, e) < s.k;
    if (admit != s.accepted(e)) return false;
    if (s.accepted(e) && s.open_time[e] != u[e]) return false;
  }
  return true;
}

template <EdgeGraph G>
int max_degree_at(const G& g, const OpeningSchedule& s, double t) {
  int m = 0;
  for (VertexId v = 0; v < g.vertex_count(); ++v) m = std::max(m, degree_at(g, s, v, t));
  return m;
}

}  // namespace cdp
