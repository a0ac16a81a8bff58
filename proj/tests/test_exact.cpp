#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "cdp/decreasing.hpp"
#include "cdp/exact.hpp"

using namespace cdp;

namespace {

// Independent oracle: walk all m! orderings, cut each at every l, run the
// dynamics on the first l edges and count the cuts realising the event.
// Returns |S^l| for l = 0..m.
std::vector<std::uint64_t> permutation_counts(const SimpleGraph& g, int k, const LocalEvent& a) {
  const std::size_t m = g.edge_count();
  std::vector<EdgeId> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::uint64_t> s(m + 1, 0);
  do {
    for (std::size_t l = 0; l <= m; ++l) {
      std::vector<int> deg(g.vertex_count(), 0);
      std::uint32_t open = 0;
      for (std::size_t i = 0; i < l; ++i) {
        auto [x, y] = g.endpoints(perm[i]);
        if (deg[x] < k && deg[y] < k) {
          ++deg[x];
          ++deg[y];
          open |= 1u << perm[i];
        }
      }
      s[l] += a(open);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return s;
}

const SimpleGraph kEdge = SimpleGraph::parse("0-1");
const SimpleGraph kCherry = SimpleGraph::parse("0-1,1-2");

std::vector<SimpleGraph> small_graphs() {
  return {SimpleGraph::parse("0-1,1-2"),
          SimpleGraph::parse("0-1,1-2,2-0"),
          SimpleGraph::parse("0-1,0-2,0-3,0-4"),
          SimpleGraph::parse("0-1,1-2,2-3,3-0"),
          SimpleGraph::parse("0-1,1-2,2-3,3-0,0-2"),
          SimpleGraph::parse("0-1,1-2,2-3,3-4,4-5")};
}

}  // namespace

TEST(ExactPolynomial, SingleEdge) {
  auto p = exact_polynomial(kEdge, 1, edge_open_event(0));
  EXPECT_EQ(p.K, (std::vector<std::uint64_t>{0, 1}));
  for (double t : {0.0, 0.3, 0.77, 1.0}) EXPECT_NEAR(p(t), t, 1e-15);
}

TEST(ExactPolynomial, CherryWithCapOne) {
  auto p = exact_polynomial(kCherry, 1, edge_open_event(0));
  EXPECT_EQ(p.K, (std::vector<std::uint64_t>{0, 1, 1}));
  for (double t : {0.1, 0.5, 0.7, 0.9}) EXPECT_NEAR(p(t), t - t * t / 2, 1e-14);
  EXPECT_NEAR(p(0.7), 0.455, 1e-14);
  EXPECT_NEAR(p.derivative(0.5, 1), 0.5, 1e-14);
}

// Area of {u1 <= t, u1 < u2} in the unit square by a midpoint grid.
TEST(ExactPolynomial, CherryMatchesQuadrature) {
  auto p = exact_polynomial(kCherry, 1, edge_open_event(0));
  const int n = 2000;
  for (double t : {0.2, 0.5, 0.8}) {
    std::uint64_t inside = 0;
    for (int i = 0; i < n; ++i) {
      const double u1 = (i + 0.5) / n;
      if (u1 > t) continue;
      for (int j = 0; j < n; ++j) inside += u1 < (j + 0.5) / n;
    }
    EXPECT_NEAR(p(t), static_cast<double>(inside) / (double(n) * n), 2.0 / n);
  }
}

TEST(ExactPolynomial, MatchesPermutationOracle) {
  for (const auto& g : small_graphs()) {
    const std::size_t m = g.edge_count();
    for (int k : {1, 2, g.max_degree()}) {
      std::vector<LocalEvent> events{edge_open_event(0), edge_open_event(static_cast<EdgeId>(m - 1)),
                                     connection_event(g, 0, 2), all_open_event({0, 1})};
      for (const auto& a : events) {
        auto p = exact_polynomial(g, k, a);
        auto s = permutation_counts(g, k, a);
        for (std::size_t l = 0; l <= m; ++l)
          EXPECT_EQ(p.K[l] * factorial(m - l), s[l]) << g.to_string() << " k=" << k << " " << a.name;
      }
    }
  }
}

TEST(ExactPolynomial, UnconstrainedIsBernoulli) {
  for (const auto& g : small_graphs()) {
    const int k = g.max_degree();
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      auto p = exact_polynomial(g, k, edge_open_event(e));
      for (double t : {0.2, 0.5, 0.8}) EXPECT_NEAR(p(t), t, 1e-13);
    }
  }
}

TEST(ExactPolynomial, NormalizationAndComplement) {
  for (const auto& g : small_graphs()) {
    const std::size_t m = g.edge_count();
    auto sure = exact_polynomial(g, 1, sure_event());
    auto none = exact_polynomial(g, 1, impossible_event());
    auto a = connection_event(g, 0, 1);
    auto pa = exact_polynomial(g, 2, a);
    auto pc = exact_polynomial(g, 2, complement(a));
    for (std::size_t l = 0; l <= m; ++l) {
      EXPECT_EQ(sure.K[l], falling_factorial(m, l));
      EXPECT_EQ(none.K[l], 0u);
      EXPECT_EQ(pa.K[l] + pc.K[l], falling_factorial(m, l));
      EXPECT_LE(pa.K[l], falling_factorial(m, l));
    }
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      EXPECT_NEAR(sure(t), 1.0, 1e-13);
      EXPECT_EQ(none(t), 0.0);
      EXPECT_NEAR(pa(t) + pc(t), 1.0, 1e-13);
      EXPECT_GE(pa(t), -1e-15);
      EXPECT_LE(pa(t), 1.0 + 1e-15);
    }
  }
}

TEST(ExactPolynomial, AllOpenEventsAreMonotone) {
  for (const auto& g : small_graphs()) {
    for (int k : {1, 2}) {
      auto p = exact_polynomial(g, k, all_open_event({0, 1}));
      double prev = 0.0;
      for (int i = 0; i <= 100; ++i) {
        const double now = p(i / 100.0);
        EXPECT_GE(now, prev - 1e-14);
        prev = now;
      }
    }
  }
}

TEST(ExactPolynomial, DegreeAtMostM) {
  auto g = small_graphs()[4];
  auto p = exact_polynomial(g, 2, connection_event(g, 1, 3));
  const int m = static_cast<int>(g.edge_count());
  EXPECT_NEAR(p.derivative(0.1, m), p.derivative(0.6, m), 1e-9);
  for (double t : {0.1, 0.6}) EXPECT_EQ(p.derivative(t, m + 1), 0.0);
}

TEST(Derivative, KnownCases) {
  auto p = exact_polynomial(kEdge, 1, edge_open_event(0));
  for (double t : {0.1, 0.5, 0.9}) {
    EXPECT_NEAR(p.derivative(t, 1), 1.0, 1e-14);
    EXPECT_EQ(p.derivative(t, 2), 0.0);
  }
  auto q = exact_polynomial(kCherry, 1, edge_open_event(0));
  EXPECT_NEAR(q.derivative(0.3, 1), 0.7, 1e-14);
  EXPECT_NEAR(q.derivative(0.3, 2), -1.0, 1e-14);
}

TEST(Derivative, MatchesCentredDifferences) {
  const double h = 1e-5;
  for (const auto& g : small_graphs()) {
    for (int k : {1, 2}) {
      auto p = exact_polynomial(g, k, connection_event(g, 0, 2));
      for (double t = 0.05; t < 1.0; t += 0.05) {
        const double fd = (p(t + h) - p(t - h)) / (2 * h);
        EXPECT_NEAR(p.derivative(t, 1), fd, 1e-8);
      }
    }
  }
}

TEST(ExactPolynomial, WorkersDoNotChangeCounts) {
  auto g = SimpleGraph::parse("0-1,1-2,2-3,3-0,0-2,1-3,3-4,4-5");
  auto a = connection_event(g, 0, 5);
  EXPECT_EQ(exact_polynomial(g, 2, a, 1).K, exact_polynomial(g, 2, a, 3).K);
}

TEST(ExactPolynomial, TenEdgeBudget) {
  auto g10 = SimpleGraph::parse("0-1,1-2,2-3,3-4,4-5,5-6,6-7,7-8,8-9,9-10");
  auto p = exact_polynomial(g10, 1, edge_open_event(4));
  std::uint64_t total = 0;
  for (std::size_t l = 0; l <= 10; ++l) total += falling_factorial(10, l);
  EXPECT_EQ(total, 9864101u);
  EXPECT_GT(p(0.5), 0.0);
  auto g11 = SimpleGraph::parse("0-1,1-2,2-3,3-4,4-5,5-6,6-7,7-8,8-9,9-10,10-11");
  EXPECT_THROW(exact_polynomial(g11, 1, edge_open_event(0)), std::invalid_argument);
  EXPECT_THROW(exact_polynomial(kCherry, 1, edge_open_event(2)), std::invalid_argument);
}

TEST(LocalEvent, LivesOnSupport) {
  auto g = small_graphs()[1];
  EXPECT_TRUE(lives_on_support(edge_open_event(1), g.edge_count()));
  EXPECT_TRUE(lives_on_support(all_open_event({0, 2}), g.edge_count()));
  EXPECT_TRUE(lives_on_support(connection_event(g, 0, 1), g.edge_count()));
  LocalEvent liar{{0}, [](std::uint32_t s) { return (s & 2u) != 0; }, "liar"};
  EXPECT_FALSE(lives_on_support(liar, g.edge_count()));
}

TEST(LocalEvent, Parse) {
  auto g = small_graphs()[3];
  EXPECT_EQ(parse_event(g, "edge:2").support, (std::vector<EdgeId>{2}));
  EXPECT_TRUE(parse_event(g, "all:0+1")(0b11u));
  EXPECT_FALSE(parse_event(g, "all:0+1")(0b01u));
  EXPECT_TRUE(parse_event(g, "connect:0-2")(0b0011u));
  EXPECT_TRUE(parse_event(g, "sure")(0u));
  EXPECT_THROW(parse_event(g, "bogus:1"), std::invalid_argument);
  EXPECT_THROW(parse_event(g, "connect:0-9"), std::invalid_argument);
}

TEST(OrderInvariance, SingleEdgeAndCherry) {
  auto r1 = order_invariance_check(kEdge, 1, edge_open_event(0), 0.3, 0.7, 200000, 1);
  EXPECT_TRUE(r1.passed());
  EXPECT_NEAR(r1.points[0].exact, 0.3, 1e-15);
  auto r2 = order_invariance_check(kCherry, 1, edge_open_event(0), 0.3, 0.7, 200000, 2);
  EXPECT_TRUE(r2.passed());
  EXPECT_NEAR(r2.points[1].exact, 0.455, 1e-14);
  auto g = small_graphs()[2];
  auto r3 = order_invariance_check(g, g.max_degree(), edge_open_event(1), 0.2, 0.8, 200000, 3);
  EXPECT_TRUE(r3.passed());
  EXPECT_THROW(order_invariance_check(kEdge, 1, edge_open_event(0), 0.7, 0.3, 10, 1),
               std::invalid_argument);
}

// Perturbing clocks of edges far from a contained decreasing cluster never
// changes whether the source edge is open.
TEST(Locality, FarPerturbationsDoNotMatter) {
  auto box = LatticeBox::free_box(2, 9);
  const EdgeId e = *box.edge_from(box.origin(), 0);
  const std::vector<EdgeId> gamma{e};
  const double t = 0.5;
  const int r = 3;
  const Ball outer = graph_ball(box, std::span<const EdgeId>(gamma), r + 1);
  std::mt19937_64 gen(5);
  int contained = 0;
  for (std::uint64_t rep = 0; rep < 300; ++rep) {
    auto u = sample_clocks(box, 13, rep);
    if (!xi_indicator(box, std::span<const double>(u.u), std::span<const EdgeId>(gamma), t, r)) continue;
    ++contained;
    auto v = u;
    for (EdgeId f = 0; f < box.edge_count(); ++f) {
      auto [a, b] = box.endpoints(f);
      if (!outer.has(a) || !outer.has(b)) v.u[f] = t + (1 - t) * uniform01(gen);
    }
    EXPECT_EQ(run(box, u, 3).open_at(e, t), run(box, v, 3).open_at(e, t)) << rep;
  }
  EXPECT_GT(contained, 100);
}
