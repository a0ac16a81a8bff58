#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "cdp/dynamics.hpp"
#include "cdp/graph.hpp"
#include "cdp/rng.hpp"
#include "cdp/union_find.hpp"

namespace cdp {

inline constexpr std::size_t kExactEdgeBudget = 10;

/// Event on the open/closed pattern of a small graph. The predicate sees a
/// bitmask with bit e set iff edge e is open, and must only look at the
/// support bits.
struct LocalEvent {
  std::vector<EdgeId> support;
  std::function<bool(std::uint32_t)> predicate;
  std::string name;

  bool operator()(std::uint32_t open_mask) const { return predicate(open_mask); }
};

inline std::uint32_t support_mask(std::span<const EdgeId> support) {
  std::uint32_t m = 0;
  for (EdgeId e : support) m |= 1u << e;
  return m;
}

inline LocalEvent edge_open_event(EdgeId e) {
  return {{e}, [e](std::uint32_t s) { return ((s >> e) & 1u) != 0; }, "edge:" + std::to_string(e)};
}

inline LocalEvent all_open_event(std::vector<EdgeId> edges) {
  const std::uint32_t need = support_mask(edges);
  std::string name = "all:";
  for (std::size_t i = 0; i < edges.size(); ++i) name += (i ? "+" : "") + std::to_string(edges[i]);
  return {std::move(edges), [need](std::uint32_t s) { return (s & need) == need; }, name};
}

inline LocalEvent sure_event() {
  return {{}, [](std::uint32_t) { return true; }, "sure"};
}

inline LocalEvent impossible_event() {
  return {{}, [](std::uint32_t) { return false; }, "empty"};
}

inline LocalEvent complement(const LocalEvent& a) {
  auto p = a.predicate;
  return {a.support, [p](std::uint32_t s) { return !p(s); }, "not(" + a.name + ")"};
}

/// x and y joined by open edges. Lives on all edges of the graph.
inline LocalEvent connection_event(const SimpleGraph& g, VertexId x, VertexId y) {
  if (x >= g.vertex_count() || y >= g.vertex_count())
    throw std::invalid_argument("connection_event: vertex out of range");
  std::vector<EdgeId> all(g.edge_count());
  for (EdgeId e = 0; e < all.size(); ++e) all[e] = e;
  auto pred = [g, x, y](std::uint32_t s) {
    DisjointSet uf(g.vertex_count());
    for (EdgeId e = 0; e < g.edge_count(); ++e)
      if ((s >> e) & 1u) uf.unite(g.endpoints(e).first, g.endpoints(e).second);
    return uf.find(x) == uf.find(y);
  };
  return {std::move(all), pred, "connect:" + std::to_string(x) + "-" + std::to_string(y)};
}

/// Parses "edge:E", "all:E+F+...", "connect:X-Y", "sure", "empty".
inline LocalEvent parse_event(const SimpleGraph& g, const std::string& spec) {
  if (spec == "sure") return sure_event();
  if (spec == "empty") return impossible_event();
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("event: bad spec '" + spec + "'");
  const std::string kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
  if (kind == "edge") return edge_open_event(static_cast<EdgeId>(std::stoul(arg)));
  if (kind == "all") {
    std::vector<EdgeId> edges;
    std::size_t pos = 0;
    while (pos <= arg.size()) {
      auto plus = arg.find('+', pos);
      if (plus == std::string::npos) plus = arg.size();
      edges.push_back(static_cast<EdgeId>(std::stoul(arg.substr(pos, plus - pos))));
      pos = plus + 1;
    }
    return all_open_event(std::move(edges));
  }
  if (kind == "connect") {
    const auto dash = arg.find('-');
    if (dash == std::string::npos) throw std::invalid_argument("event: bad connect spec");
    return connection_event(g, static_cast<VertexId>(std::stoul(arg.substr(0, dash))),
                            static_cast<VertexId>(std::stoul(arg.substr(dash + 1))));
  }
  throw std::invalid_argument("event: unknown kind '" + kind + "'");
}

/// Exhaustively checks that toggling edges outside the support never
/// changes the predicate.
inline bool lives_on_support(const LocalEvent& a, std::size_t edge_count) {
  const std::uint32_t inside = support_mask(a.support);
  const std::uint32_t all = (edge_count >= 32) ? ~0u : ((1u << edge_count) - 1u);
  for (std::uint32_t s = 0; s <= all; ++s) {
    const bool base = a(s & inside);
    if (a(s) != base) return false;
    if (s == all) break;
  }
  return true;
}

inline std::uint64_t falling_factorial(std::size_t m, std::size_t l) {
  std::uint64_t v = 1;
  for (std::size_t i = 0; i < l; ++i) v *= (m - i);
  return v;
}

inline std::uint64_t factorial(std::size_t m) { return falling_factorial(m, m); }

/// P_t(A) = sum_l K_l t^l / l! (1-t)^(m-l), where K_l counts the ordered
/// l-prefixes of distinct edges (the edges ringing before t, in order) whose
/// dynamics realises A.
struct EventPolynomial {
  std::size_t m = 0;
  std::vector<std::uint64_t> K;

  /// K_l (m-l)!: full edge orderings whose first l edges ring before t and
  /// realise A. Divided by m! these are Bernstein coefficients.
  std::vector<std::int64_t> ordering_counts() const {
    std::vector<std::int64_t> s(m + 1);
    for (std::size_t l = 0; l <= m; ++l) s[l] = static_cast<std::int64_t>(K[l] * factorial(m - l));
    return s;
  }

  double operator()(double t) const { return derivative(t, 0); }

  /// order-th derivative. Forward differences of the ordering counts are
  /// exact integers; the result is (1/(m-r)!) sum_l D^r S_l B_{l,m-r}(t).
  double derivative(double t, int order) const {
    if (order < 0) throw std::invalid_argument("derivative: negative order");
    const auto r = static_cast<std::size_t>(order);
    if (r > m) return 0.0;
    std::vector<std::int64_t> diff = ordering_counts();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t l = 0; l + 1 < diff.size() - i; ++l) diff[l] = diff[l + 1] - diff[l];
    const std::size_t deg = m - r;
    std::vector<double> b(deg + 1);
    const double scale = static_cast<double>(factorial(deg));
    for (std::size_t l = 0; l <= deg; ++l) b[l] = static_cast<double>(diff[l]) / scale;
    // de Casteljau
    for (std::size_t j = 1; j <= deg; ++j)
      for (std::size_t l = 0; l + j <= deg; ++l) b[l] = (1.0 - t) * b[l] + t * b[l + 1];
    return b[0];
  }
};

inline void to_json(nlohmann::json& j, const EventPolynomial& p) {
  j = nlohmann::json{{"m", p.m}, {"K", p.K}, {"basis", "t^l/l! (1-t)^(m-l)"}};
}

namespace detail {

struct PrefixEnumerator {
  const SimpleGraph& g;
  int k;
  const std::vector<std::uint8_t>& holds;  // event value per open mask
  std::vector<std::uint64_t>& K;
  std::vector<std::uint8_t> deg;

  void visit(std::size_t depth, std::uint32_t used, std::uint32_t open) {
    K[depth] += holds[open];
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      if ((used >> e) & 1u) continue;
      extend(depth, used, open, e);
    }
  }

  void extend(std::size_t depth, std::uint32_t used, std::uint32_t open, EdgeId e) {
    auto [x, y] = g.endpoints(e);
    if (deg[x] < k && deg[y] < k) {
      ++deg[x];
      ++deg[y];
      visit(depth + 1, used | (1u << e), open | (1u << e));
      --deg[x];
      --deg[y];
    } else {
      visit(depth + 1, used | (1u << e), open);
    }
  }
};

inline std::vector<std::uint8_t> event_table(const LocalEvent& a, std::size_t m) {
  std::vector<std::uint8_t> holds(std::size_t{1} << m);
  for (std::uint32_t s = 0; s < holds.size(); ++s) holds[s] = a(s) ? 1 : 0;
  return holds;
}

inline void check_exact_inputs(const SimpleGraph& g, int k, const LocalEvent& a) {
  if (g.edge_count() > kExactEdgeBudget)
    throw std::invalid_argument("exact: graph has " + std::to_string(g.edge_count()) +
                                " edges, budget is " + std::to_string(kExactEdgeBudget));
  check_constraint(k, g.max_constraint());
  for (EdgeId e : a.support)
    if (e >= g.edge_count()) throw std::invalid_argument("exact: event support exceeds the graph");
}

}  // namespace detail

/// Enumerates every ordered prefix of distinct edges, runs the dynamics on
/// exactly that prefix and counts those realising the event. Work is split
/// by first prefix element; the integer sums do not depend on `workers`.
inline EventPolynomial exact_polynomial(const SimpleGraph& g, int k, const LocalEvent& a,
                                        unsigned workers = 1) {
  detail::check_exact_inputs(g, k, a);
  const std::size_t m = g.edge_count();
  const auto holds = detail::event_table(a, m);

  EventPolynomial p;
  p.m = m;
  p.K.assign(m + 1, 0);
  p.K[0] = holds[0];

  std::vector<std::vector<std::uint64_t>> partial(m, std::vector<std::uint64_t>(m + 1, 0));
  auto branch = [&](EdgeId first) {
    detail::PrefixEnumerator en{g, k, holds, partial[first],
                                std::vector<std::uint8_t>(g.vertex_count(), 0)};
    en.extend(0, 0u, 0u, first);
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(m)));
  if (workers == 1) {
    for (EdgeId e = 0; e < m; ++e) branch(e);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (EdgeId e = w; e < m; e += workers) branch(e);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& part : partial)
    for (std::size_t l = 0; l <= m; ++l) p.K[l] += part[l];
  return p;
}

inline double exact_probability(const SimpleGraph& g, int k, const LocalEvent& a, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("exact_probability: t must lie in [0,1]");
  return exact_polynomial(g, k, a)(t);
}

/// Monte Carlo hit counts: result[i][j] = #samples where events[i] holds at
/// ts[j]. One engine per call, keyed by (seed, replica, graph, k).
inline std::vector<std::vector<std::uint64_t>> monte_carlo_counts(
    const SimpleGraph& g, int k, std::span<const LocalEvent> events, std::span<const double> ts,
    std::uint64_t samples, std::uint64_t seed, std::uint64_t replica = 0) {
  const std::size_t m = g.edge_count();
  if (m > 31) throw std::invalid_argument("monte_carlo_counts: too many edges");
  check_constraint(k, g.max_constraint());
  std::vector<std::vector<std::uint8_t>> tables;
  for (const auto& a : events) tables.push_back(detail::event_table(a, m));
  std::vector<std::vector<std::uint64_t>> hits(events.size(), std::vector<std::uint64_t>(ts.size(), 0));

  auto gen = make_stream(seed, replica, {stream_tag(g), static_cast<std::uint64_t>(k)});
  std::vector<double> u(m);
  std::vector<EdgeId> order(m);
  std::vector<std::uint8_t> deg(g.vertex_count());
  std::vector<std::uint32_t> masks(ts.size());
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (double& x : u) x = uniform01(gen);
    for (EdgeId e = 0; e < m; ++e) order[e] = e;
    std::sort(order.begin(), order.end(),
              [&](EdgeId a, EdgeId b) { return rings_before(u, a, b); });
    std::fill(deg.begin(), deg.end(), 0);
    std::fill(masks.begin(), masks.end(), 0u);
    for (EdgeId e : order) {
      auto [x, y] = g.endpoints(e);
      if (deg[x] < k && deg[y] < k) {
        ++deg[x];
        ++deg[y];
        for (std::size_t j = 0; j < ts.size(); ++j)
          if (u[e] <= ts[j]) masks[j] |= 1u << e;
      }
    }
    for (std::size_t i = 0; i < tables.size(); ++i)
      for (std::size_t j = 0; j < ts.size(); ++j) hits[i][j] += tables[i][masks[j]];
  }
  return hits;
}

struct InvariancePoint {
  double t = 0.0;
  double exact = 0.0;
  double mc = 0.0;
  double stderr_ = 0.0;  // binomial, from the exact probability
  bool within = false;   // |mc - exact| <= 4 stderr
};

struct InvarianceReport {
  std::vector<InvariancePoint> points;
  bool passed() const {
    return std::all_of(points.begin(), points.end(), [](const auto& p) { return p.within; });
  }
};

/// The polynomial is computed once; Monte Carlo at two different times must
/// both agree with it, which checks that the prefix counts do not depend on t.
inline InvarianceReport order_invariance_check(const SimpleGraph& g, int k, const LocalEvent& a,
                                               double t1, double t2, std::uint64_t samples,
                                               std::uint64_t seed) {
  if (!(0.0 < t1 && t1 < t2 && t2 < 1.0))
    throw std::invalid_argument("order_invariance_check: need 0 < t1 < t2 < 1");
  const EventPolynomial p = exact_polynomial(g, k, a);
  const std::vector<double> ts{t1, t2};
  const auto hits = monte_carlo_counts(g, k, std::span<const LocalEvent>(&a, 1), ts, samples, seed);
  InvarianceReport rep;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    InvariancePoint pt;
    pt.t = ts[j];
    pt.exact = p(ts[j]);
    pt.mc = static_cast<double>(hits[0][j]) / static_cast<double>(samples);
    pt.stderr_ = std::sqrt(pt.exact * (1.0 - pt.exact) / static_cast<double>(samples));
    pt.within = std::abs(pt.mc - pt.exact) <= 4.0 * pt.stderr_ + 1e-15;
    rep.points.push_back(pt);
  }
  return rep;
}

}  // namespace cdp
