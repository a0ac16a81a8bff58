#pragma once

#include <algorithm>
#include <array>
#include <concepts>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cdp {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

inline constexpr int kMaxDim = 8;

enum class BoundaryCondition : std::uint8_t { free_bc = 0, periodic = 1 };

inline const char* to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::free_bc ? "free" : "periodic";
}

inline BoundaryCondition parse_boundary_condition(const std::string& s) {
  if (s == "free") return BoundaryCondition::free_bc;
  if (s == "periodic") return BoundaryCondition::periodic;
  throw std::invalid_argument("unknown boundary condition '" + s + "'");
}

/// Fixed-capacity list of edges incident to one vertex, sorted by EdgeId.
struct IncidentEdges {
  std::array<EdgeId, 2 * kMaxDim> ids{};
  std::uint8_t count = 0;

  void push(EdgeId e) { ids[count++] = e; }
  const EdgeId* begin() const { return ids.data(); }
  const EdgeId* end() const { return ids.data() + count; }
  std::size_t size() const { return count; }
  EdgeId operator[](std::size_t i) const { return ids[i]; }
};

using Coord = std::array<int, kMaxDim>;

/// What the dynamics and cluster code need from a graph.
template <class G>
concept EdgeGraph = requires(const G& g, EdgeId e, VertexId v) {
  { g.vertex_count() } -> std::convertible_to<std::size_t>;
  { g.edge_count() } -> std::convertible_to<std::size_t>;
  { g.endpoints(e) } -> std::convertible_to<std::pair<VertexId, VertexId>>;
  { g.incident_edges(v) };
  { g.max_constraint() } -> std::convertible_to<int>;
  { g.is_boundary_vertex(v) } -> std::convertible_to<bool>;
};

inline VertexId other_end(std::pair<VertexId, VertexId> ends, VertexId v) {
  return ends.first == v ? ends.second : ends.first;
}

// Hypercubic box or torus. Vertices are mixed-radix encoded coordinates in
// [0, side)^d. Edge ids are packed per axis: edges along axis a occupy
// [axis_offset(a), axis_offset(a+1)) and are indexed by the coordinates of
// their tail endpoint (the endpoint with the smaller coordinate along a; for
// the wrap-around edge of a torus, the endpoint at side-1).
class LatticeBox {
 public:
  /// Free box Lambda_n (side 2n+1) or torus with side 2n+1.
  static LatticeBox build(int d, int n, BoundaryCondition bc) {
    if (n < 1) throw std::invalid_argument("lattice: n must be >= 1");
    return LatticeBox(d, 2 * n + 1, bc);
  }

  static LatticeBox free_box(int d, int n) { return build(d, n, BoundaryCondition::free_bc); }

  static LatticeBox torus(int d, int side) { return LatticeBox(d, side, BoundaryCondition::periodic); }

  int dim() const { return d_; }
  int side() const { return side_; }
  BoundaryCondition bc() const { return bc_; }
  bool periodic() const { return bc_ == BoundaryCondition::periodic; }
  /// Half side-length n of a free box; for a torus, side/2.
  int half_side() const { return side_ / 2; }

  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return edge_count_; }
  int max_constraint() const { return 2 * d_; }

  VertexId encode(const Coord& c) const {
    std::size_t v = 0;
    for (int i = d_ - 1; i >= 0; --i) v = v * side_ + static_cast<std::size_t>(c[i]);
    return static_cast<VertexId>(v);
  }

  Coord decode(VertexId v) const {
    Coord c{};
    std::size_t x = v;
    for (int i = 0; i < d_; ++i) {
      c[i] = static_cast<int>(x % side_);
      x /= side_;
    }
    return c;
  }

  /// Vertex at the centre of the box (the origin of Lambda_n).
  VertexId origin() const {
    Coord c{};
    for (int i = 0; i < d_; ++i) c[i] = half_side();
    return encode(c);
  }

  /// Sup-norm distance to the centre (torus distance under periodic bc).
  int norm_from_center(VertexId v) const { return norm_[v]; }

  int compute_norm_from_center(VertexId v) const {
    Coord c = decode(v);
    int r = 0;
    for (int i = 0; i < d_; ++i) {
      int a = std::abs(c[i] - half_side());
      if (periodic()) a = std::min(a, side_ - a);
      r = std::max(r, a);
    }
    return r;
  }

  /// Membership in Lambda_m (centred sub-box).
  bool in_box(VertexId v, int m) const { return norm_from_center(v) <= m; }

  /// Inner vertex boundary of the whole box. Always false on a torus.
  bool is_boundary_vertex(VertexId v) const {
    if (periodic()) return false;
    return norm_[v] == half_side();
  }

  int edge_axis(EdgeId e) const {
    int a = 0;
    while (a + 1 < d_ && e >= axis_offset_[a + 1]) ++a;
    return a;
  }

  VertexId edge_tail(EdgeId e) const {
    int a = edge_axis(e);
    std::size_t idx = e - axis_offset_[a];
    const int ext_a = periodic() ? side_ : side_ - 1;
    std::size_t v = 0, stride = 1;
    for (int i = 0; i < d_; ++i) {
      const int ext = (i == a) ? ext_a : side_;
      v += (idx % ext) * stride;
      idx /= ext;
      stride *= side_;
    }
    return static_cast<VertexId>(v);
  }

  std::pair<VertexId, VertexId> endpoints(EdgeId e) const { return ends_[e]; }

  /// Neighbour of v one step along +/- axis, if it exists.
  std::optional<VertexId> step(VertexId v, int axis, int dir) const {
    Coord c = decode(v);
    int x = c[axis] + dir;
    if (x < 0 || x >= side_) {
      if (!periodic()) return std::nullopt;
      x = (x + side_) % side_;
    }
    c[axis] = x;
    return encode(c);
  }

  /// Edge whose tail is v along the given axis, if it exists.
  std::optional<EdgeId> edge_from(VertexId v, int axis) const {
    Coord c = decode(v);
    const int ext_a = periodic() ? side_ : side_ - 1;
    if (c[axis] >= ext_a) return std::nullopt;
    std::size_t idx = 0, stride = 1;
    for (int i = 0; i < d_; ++i) {
      const int ext = (i == axis) ? ext_a : side_;
      idx += static_cast<std::size_t>(c[i]) * stride;
      stride *= ext;
    }
    return static_cast<EdgeId>(axis_offset_[axis] + idx);
  }

  IncidentEdges incident_edges(VertexId v) const {
    IncidentEdges out;
    const std::size_t base = static_cast<std::size_t>(v) * 2 * d_;
    for (int i = 0; i < inc_count_[v]; ++i) out.push(inc_[base + i]);
    return out;
  }

  /// Same as incident_edges() without the lookup table.
  IncidentEdges compute_incident_edges(VertexId v) const {
    IncidentEdges out;
    for (int a = 0; a < d_; ++a) {
      if (auto e = edge_from(v, a)) out.push(*e);
      if (auto u = step(v, a, -1)) {
        if (auto e = edge_from(*u, a)) out.push(*e);
      }
    }
    std::sort(out.ids.begin(), out.ids.begin() + out.count);
    return out;
  }

  std::optional<EdgeId> edge_between(VertexId u, VertexId v) const {
    for (EdgeId e : incident_edges(u)) {
      auto [a, b] = endpoints(e);
      if ((a == u && b == v) || (a == v && b == u)) return e;
    }
    return std::nullopt;
  }

  bool operator==(const LatticeBox& o) const {
    return d_ == o.d_ && side_ == o.side_ && bc_ == o.bc_;
  }

 private:
  LatticeBox(int d, int side, BoundaryCondition bc) : d_(d), side_(side), bc_(bc) {
    if (d < 1 || d > kMaxDim)
      throw std::invalid_argument("lattice: d must be in [1, " + std::to_string(kMaxDim) + "]");
    if (side < 2) throw std::invalid_argument("lattice: side must be >= 2");
    if (bc == BoundaryCondition::periodic && side < 3)
      throw std::invalid_argument("lattice: periodic side must be >= 3");
    long double vc = 1;
    for (int i = 0; i < d; ++i) vc *= side;
    if (vc * d > 4.0e9L) throw std::invalid_argument("lattice: box too large for 32-bit ids");
    vertex_count_ = static_cast<std::size_t>(vc);
    const std::size_t per_axis =
        periodic() ? vertex_count_ : vertex_count_ / static_cast<std::size_t>(side) * (side - 1);
    axis_offset_.fill(0);
    for (int a = 0; a < d; ++a) axis_offset_[a] = static_cast<EdgeId>(a * per_axis);
    edge_count_ = per_axis * d;

    norm_.resize(vertex_count_);
    for (VertexId v = 0; v < vertex_count_; ++v)
      norm_[v] = static_cast<std::uint16_t>(compute_norm_from_center(v));
    ends_.resize(edge_count_);
    for (EdgeId e = 0; e < edge_count_; ++e) {
      VertexId tail = edge_tail(e);
      ends_[e] = {tail, step(tail, edge_axis(e), +1).value()};
    }
    inc_.assign(vertex_count_ * 2 * d, 0);
    inc_count_.assign(vertex_count_, 0);
    for (VertexId v = 0; v < vertex_count_; ++v) {
      IncidentEdges ie = compute_incident_edges(v);
      inc_count_[v] = ie.count;
      std::copy(ie.begin(), ie.end(), inc_.begin() + static_cast<std::ptrdiff_t>(v) * 2 * d);
    }
  }

  int d_;
  int side_;
  BoundaryCondition bc_;
  std::size_t vertex_count_ = 0;
  std::size_t edge_count_ = 0;
  std::array<EdgeId, kMaxDim> axis_offset_{};
  std::vector<std::pair<VertexId, VertexId>> ends_;
  std::vector<EdgeId> inc_;
  std::vector<std::uint8_t> inc_count_;
  std::vector<std::uint16_t> norm_;
};

struct BoundarySets {
  std::vector<VertexId> inner_vertices;  // boundary of Lambda_m, inside Lambda_m
  std::vector<EdgeId> external_edges;    // exactly one endpoint in Lambda_m
  std::vector<EdgeId> interior_edges;    // both endpoints in Lambda_m
};

/// Boundary sets of the centred sub-box Lambda_m of a free box. Sorted by id.
inline BoundarySets boundary_sets(const LatticeBox& box, int m) {
  if (box.periodic()) throw std::invalid_argument("boundary_sets: free boundary condition required");
  if (m < 0 || m >= box.half_side())
    throw std::invalid_argument("boundary_sets: need 0 <= m < n");
  BoundarySets out;
  for (VertexId v = 0; v < box.vertex_count(); ++v)
    if (box.norm_from_center(v) == m) out.inner_vertices.push_back(v);
  for (EdgeId e = 0; e < box.edge_count(); ++e) {
    auto [a, b] = box.endpoints(e);
    const bool ia = box.in_box(a, m), ib = box.in_box(b, m);
    if (ia && ib) out.interior_edges.push_back(e);
    else if (ia != ib) out.external_edges.push_back(e);
  }
  return out;
}

/// Vertices within graph distance r of the endpoint set of gamma.
struct Ball {
  std::vector<VertexId> vertices;  // sorted
  std::vector<std::uint8_t> contains;

  bool has(VertexId v) const { return contains[v] != 0; }
};

template <EdgeGraph Graph>
Ball graph_ball(const Graph& g, std::span<const EdgeId> gamma, int r) {
  if (gamma.empty()) throw std::invalid_argument("graph_ball: empty edge set");
  if (r < 0) throw std::invalid_argument("graph_ball: negative radius");
  Ball ball;
  ball.contains.assign(g.vertex_count(), 0);
  std::vector<int> dist(g.vertex_count(), -1);
  std::deque<VertexId> queue;
  auto seed = [&](VertexId v) {
    if (dist[v] < 0) {
      dist[v] = 0;
      queue.push_back(v);
    }
  };
  for (EdgeId e : gamma) {
    auto [a, b] = g.endpoints(e);
    seed(a);
    seed(b);
  }
  while (!queue.empty()) {
    VertexId v = queue.front();
    queue.pop_front();
    ball.contains[v] = 1;
    if (dist[v] == r) continue;
    for (EdgeId e : g.incident_edges(v)) {
      VertexId w = other_end(g.endpoints(e), v);
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    if (ball.contains[v]) ball.vertices.push_back(v);
  return ball;
}

}  // namespace cdp
