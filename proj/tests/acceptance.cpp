// Acceptance gate: one PASS/FAIL line per criterion, details indented below.
// Usage: acceptance [--out DIR] [--workers W]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cdp/experiments.hpp"

using namespace cdp;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240917;

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    details.push_back(std::string(ok ? "ok   " : "BAD  ") + what);
  }
  void note(const std::string& what) { details.push_back("     " + what); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Experiments run by the criteria; criterion 11 re-runs them all.
struct Registry {
  fs::path dir;
  std::vector<std::pair<std::string, ExperimentConfig>> runs;

  ExperimentResult run(const std::string& name, const ExperimentConfig& c) {
    runs.emplace_back(name, c);
    ExperimentResult res = run_experiment(c);
    std::ofstream os(dir / (name + ".csv"), std::ios::binary);
    write_csv(os, res);
    return res;
  }
};

Registry registry;

// ---- 1 -------------------------------------------------------------------
Outcome bernoulli_reduction() {
  Outcome out;
  for (int d : {2, 3}) {
    const auto box = LatticeBox::torus(d, 32);
    const int k = 2 * d;
    std::size_t mismatches = 0;
    for (std::uint64_t r = 0; r < 1000; ++r) {
      const ClockField u = sample_clocks(box, kSeed, r);
      const OpeningSchedule s = run(box, u, k);
      for (double t : {0.25, 0.5, 0.75}) {
        const Configuration c = config_at(s, t);
        for (EdgeId e = 0; e < box.edge_count(); ++e) mismatches += (c.open[e] != 0) != (u.u[e] <= t);
      }
    }
    out.check(mismatches == 0, fmt("(d,k)=(%d,%d) L=32, 1000 schedules x 3 times: %zu mismatching edges", d, k, mismatches));
  }
  return out;
}

// ---- 2 -------------------------------------------------------------------
Outcome degree_cap_and_monotonicity() {
  Outcome out;
  const double grid[] = {0.2, 0.4, 0.6, 0.8, 1.0};
  for (auto [d, k] : {std::pair{2, 1}, {2, 3}, {3, 5}}) {
    const auto box = LatticeBox::torus(d, d == 2 ? 32 : 12);
    int worst = 0;
    std::size_t non_monotone = 0;
    for (std::uint64_t r = 0; r < 1000; ++r) {
      const OpeningSchedule s = run(box, sample_clocks(box, kSeed, r), k);
      Configuration prev = config_at(s, 0.0);
      for (double t : grid) {
        const Configuration c = config_at(s, t);
        worst = std::max(worst, max_degree_at(box, s, t));
        for (EdgeId e = 0; e < box.edge_count(); ++e) non_monotone += prev.open[e] > c.open[e];
        prev = c;
      }
    }
    out.check(worst <= k && non_monotone == 0,
              fmt("(d,k)=(%d,%d) side %d, 1000 schedules: max degree %d, monotonicity breaks %zu", d, k,
                  box.side(), worst, non_monotone));
  }
  return out;
}

// ---- 3 -------------------------------------------------------------------
Outcome boundary_simplification_check() {
  Outcome out;
  std::uint64_t trials = 0;
  for (auto [d, k, n] : {std::tuple{2, 3, 8}, {3, 5, 5}}) {
    ExperimentConfig c;
    c.kind = ExperimentKind::surgery;
    c.d = d;
    c.k = k;
    c.sizes = {n};
    c.m_gap = 3;
    c.t_grid = {0.3, 0.6, 0.9};
    c.replicas = 500;
    c.seed = kSeed;
    const auto res = registry.run(fmt("c3_surgery_d%d", d), c);
    for (const auto& row : res.rows) {
      trials += row.replicas;
      out.check(row.estimate == 0.0, fmt("(d,k)=(%d,%d) n=%d m=%s t=%.1f %s: %.0f of %llu", d, k, n,
                                         row.param.c_str(), row.t, row.observable.c_str(),
                                         row.estimate * row.replicas, (unsigned long long)row.replicas));
    }
  }
  trials /= 2;  // two rows per trial
  out.check(trials >= 1000, fmt("%llu trials", (unsigned long long)trials));
  return out;
}

// ---- 4 -------------------------------------------------------------------
Outcome merge_surgery() {
  Outcome out;
  ExperimentConfig c;
  c.kind = ExperimentKind::merge;
  c.d = 2;
  c.k = 3;
  c.sizes = {16};
  c.m_gap = 2;
  c.t_grid = {0.9};
  c.replicas = 1000;
  c.seed = kSeed;
  const auto res = registry.run("c4_merge", c);
  const auto& app = res.find("applicable", 16, 0.9);
  const auto& merged = res.find("merged", 16, 0.9);
  const auto& outside = res.find("outside_equal", 16, 0.9);
  const auto applicable = static_cast<std::uint64_t>(std::llround(app.estimate * app.replicas));
  out.check(applicable >= 200, fmt("applicable replicas: %llu of %llu", (unsigned long long)applicable,
                                   (unsigned long long)app.replicas));
  out.check(merged.replicas == applicable && merged.estimate == 1.0,
            fmt("merged in %.6f of %llu applicable", merged.estimate, (unsigned long long)merged.replicas));
  out.check(outside.replicas == applicable && outside.estimate == 1.0,
            fmt("outside states equal in %.6f of %llu applicable", outside.estimate,
                (unsigned long long)outside.replicas));
  return out;
}

// ---- 5 -------------------------------------------------------------------
Outcome decreasing_tail() {
  Outcome out;
  ExperimentConfig c;
  c.kind = ExperimentKind::tail;
  c.d = 2;
  c.k = 4;
  c.sizes = {30};
  c.lengths = {6, 7, 8, 9, 10};
  c.replicas = 100000;
  c.seed = kSeed;
  const auto res = registry.run("c5_tail", c);
  for (int n : c.lengths) {
    const auto& tail = res.find("tail", 30, 1.0, std::to_string(n));
    const double bound = tail_bound(2, n);
    out.check(tail.estimate <= bound + 3 * tail.stderr_,
              fmt("n=%d: P(path >= n) = %.6f +- %.6f, bound %.6f", n, tail.estimate, tail.stderr_, bound));
  }
  out.note(fmt("censored fraction %.6f", res.find("censored", 30, 1.0).estimate));
  return out;
}

// ---- 6 -------------------------------------------------------------------
Outcome xi_localization() {
  Outcome out;
  ExperimentConfig c;
  c.kind = ExperimentKind::xi;
  c.d = 2;
  c.k = 3;
  c.sizes = {30};
  c.radii = {6, 8, 10};
  c.t_grid = {0.5};
  c.replicas = 100000;
  c.seed = kSeed;
  const auto res = registry.run("c6_xi", c);
  for (int r : c.radii) {
    const auto& row = res.find("xi_complement", 30, 0.5, std::to_string(r));
    const double bound = xi_bound(1, 2, 0.5, r);
    out.check(row.estimate <= bound + 3 * row.stderr_,
              fmt("r=%d: P(leaves ball) = %.6f +- %.6f, bound %.6f", r, row.estimate, row.stderr_, bound));
  }
  out.note(fmt("censored fraction %.6f", res.find("censored", 30, 0.5).estimate));
  return out;
}

// ---- 7 and 8 -------------------------------------------------------------
struct SmallCase {
  const char* name;
  const char* graph;
  const char* connect;  // two vertices joined through a two-edge path
};

const SmallCase kCases[] = {
    {"cherry", "0-1,1-2", "connect:0-2"},
    {"triangle", "0-1,1-2,2-0", "connect:0-2"},
    {"star4", "0-1,0-2,0-3,0-4", "connect:1-2"},
    {"square", "0-1,1-2,2-3,3-0", "connect:0-2"},
    {"diamond", "0-1,1-2,2-3,3-0,0-2", "connect:1-3"},
    {"path6", "0-1,1-2,2-3,3-4,4-5", "connect:0-2"},
    {"k4", "0-1,0-2,0-3,1-2,1-3,2-3", "connect:0-3"},
    {"kite7", "0-1,1-2,2-3,3-0,0-2,2-4,4-5", "connect:1-4"},
};

Outcome exact_vs_monte_carlo() {
  Outcome out;
  std::size_t compared = 0, within = 0;
  double worst_z = 0.0;
  for (const auto& sc : kCases) {
    const SimpleGraph g = SimpleGraph::parse(sc.graph);
    std::vector<int> ks{1, 2, g.max_degree()};
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (int k : ks) {
      ExperimentConfig c;
      c.kind = ExperimentKind::exact;
      c.k = k;
      c.graph = sc.graph;
      c.events = {"edge:0", sc.connect};
      c.t_grid = {0.2, 0.5, 0.8};
      c.replicas = 100;
      c.samples = 10000;
      c.seed = kSeed;
      const auto res = registry.run(fmt("c7_exact_%s_k%d", sc.name, k), c);
      for (const auto& ev : c.events) {
        for (double t : c.t_grid) {
          const double exact = res.find("exact", int(g.edge_count()), t, ev).estimate;
          const auto& mc = res.find("mc", int(g.edge_count()), t, ev);
          const double sigma = binomial_stderr(exact, static_cast<double>(mc.replicas));
          const double dev = std::abs(mc.estimate - exact);
          const bool ok = sigma > 0 ? dev <= 4 * sigma : dev == 0.0;
          if (sigma > 0) worst_z = std::max(worst_z, dev / sigma);
          ++compared;
          within += ok;
          if (!ok)
            out.check(false, fmt("%s k=%d %s t=%.1f: exact %.6f mc %.6f (%.2f sigma)", sc.name, k, ev.c_str(),
                                 t, exact, mc.estimate, dev / sigma));
        }
      }
    }
  }
  out.check(within == compared, fmt("%zu of %zu comparisons within 4 sigma at 1e6 samples, worst %.2f sigma",
                                    within, compared, worst_z));
  const SimpleGraph cherry = SimpleGraph::parse("0-1,1-2");
  const EventPolynomial p = exact_polynomial(cherry, 1, edge_open_event(0));
  double err = 0.0;
  for (double t : {0.2, 0.5, 0.7, 0.8}) err = std::max(err, std::abs(p(t) - (t - t * t / 2)));
  out.check(err < 1e-14 && std::abs(p(0.7) - 0.455) < 1e-14,
            fmt("cherry k=1 edge event equals t - t^2/2 (max error %.1e), P(0.7) = %.15f", err, p(0.7)));
  return out;
}

Outcome differentiability() {
  Outcome out;
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t polys = 0;
  for (const auto& sc : kCases) {
    const SimpleGraph g = SimpleGraph::parse(sc.graph);
    for (int k = 1; k <= g.max_degree(); ++k) {
      for (const std::string& ev : {std::string("edge:0"), std::string(sc.connect), std::string("all:0+1")}) {
        const EventPolynomial p = exact_polynomial(g, k, parse_event(g, ev));
        ++polys;
        for (int i = 1; i < 100; ++i) {
          const double t = i / 100.0;
          const double fd = (p(t + h) - p(t - h)) / (2 * h);
          worst = std::max(worst, std::abs(p.derivative(t, 1) - fd));
        }
      }
    }
  }
  out.check(worst <= 1e-8, fmt("%zu polynomials, t in {0.01..0.99}, step 1e-5: max |P' - central diff| = %.3e",
                               polys, worst));
  return out;
}

// ---- 9 -------------------------------------------------------------------
bool ordered(const std::vector<const ResultRow*>& rows, bool decreasing, Outcome& out, const std::string& label) {
  bool ok = true;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double diff = decreasing ? rows[i]->estimate - rows[i + 1]->estimate
                                   : rows[i + 1]->estimate - rows[i]->estimate;
    const double sigma = std::hypot(rows[i]->stderr_, rows[i + 1]->stderr_);
    const bool pair_ok = diff > 2 * sigma;
    ok = ok && pair_ok;
    out.check(pair_ok, fmt("%s size %d -> %d: %.5f -> %.5f (gap %.2f sigma)", label.c_str(), rows[i]->size,
                           rows[i + 1]->size, rows[i]->estimate, rows[i + 1]->estimate,
                           sigma > 0 ? diff / sigma : (diff > 0 ? INFINITY : 0.0)));
  }
  return ok;
}

Outcome brackets() {
  Outcome out;
  {
    ExperimentConfig c;
    c.kind = ExperimentKind::theta;
    c.d = 2;
    c.k = 3;
    c.sizes = {8, 16, 32};
    c.t_grid = {0.5};
    c.replicas = 10000;
    c.seed = kSeed;
    const auto res = registry.run("c9a_theta", c);
    ordered({&res.find("theta", 8, 0.5), &res.find("theta", 16, 0.5), &res.find("theta", 32, 0.5)}, true, out,
            "(a) theta (2,3) t=0.5");
  }
  {
    ExperimentConfig c;
    c.kind = ExperimentKind::wrap;
    c.d = 3;
    c.k = 5;
    c.bc = BoundaryCondition::periodic;
    c.sizes = {8, 12, 16};
    c.t_grid = {0.7};
    c.replicas = 10000;
    c.seed = kSeed;
    const auto res = registry.run("c9b_wrap", c);
    ordered({&res.find("wrap", 8, 0.7), &res.find("wrap", 12, 0.7), &res.find("wrap", 16, 0.7)}, false, out,
            "(b) wrap (3,5) t=0.7");
  }
  {
    ExperimentConfig c;
    c.kind = ExperimentKind::unique;
    c.d = 2;
    c.k = 2;
    c.bc = BoundaryCondition::periodic;
    c.sizes = {16, 32, 64};
    c.t_grid = {1.0};
    c.replicas = 10000;
    c.seed = kSeed;
    const auto res = registry.run("c9c_largest", c);
    ordered({&res.find("largest_fraction", 16, 1.0), &res.find("largest_fraction", 32, 1.0),
             &res.find("largest_fraction", 64, 1.0)},
            true, out, "(c) largest fraction (2,2) t=1");
  }
  return out;
}

// ---- 10 ------------------------------------------------------------------
Outcome uniqueness_plateau() {
  Outcome out;
  {
    ExperimentConfig c;
    c.kind = ExperimentKind::unique;
    c.d = 3;
    c.k = 5;
    c.bc = BoundaryCondition::periodic;
    c.sizes = {8, 16};
    c.t_grid = {0.8};
    c.eps = 0.05;
    c.replicas = 10000;
    c.seed = kSeed;
    const auto res = registry.run("c10a_unique", c);
    const auto& small = res.find("multi_giant", 8, 0.8);
    const auto& big = res.find("multi_giant", 16, 0.8);
    out.check(big.estimate < 0.01, fmt("(a) L=16: fraction with >= 2 giants %.5f (< 0.01)", big.estimate));
    out.check(big.estimate < small.estimate,
              fmt("(a) decreases L=8 -> 16: %.5f -> %.5f", small.estimate, big.estimate));
    out.note(fmt("largest fraction L=8 %.4f, L=16 %.4f", res.find("largest_fraction", 8, 0.8).estimate,
                 res.find("largest_fraction", 16, 0.8).estimate));
  }
  {
    ExperimentConfig c;
    c.kind = ExperimentKind::twopoint;
    c.d = 3;
    c.k = 5;
    c.bc = BoundaryCondition::periodic;
    c.sizes = {16};
    c.t_grid = {0.8};
    c.distances = {1, 2, 4, 8};
    c.replicas = 10000;
    c.seed = kSeed;
    const auto res = registry.run("c10b_twopoint", c);
    for (int D : c.distances) {
      const auto& row = res.find("tau", 16, 0.8, std::to_string(D));
      out.check(row.estimate - 3 * row.stderr_ > 0.0,
                fmt("(b) tau(0,y) |y|=%d: %.5f +- %.5f, lower 3 sigma bound %.5f", D, row.estimate, row.stderr_,
                    row.estimate - 3 * row.stderr_));
    }
  }
  return out;
}

// ---- 11 ------------------------------------------------------------------
unsigned rerun_workers = 4;

Outcome determinism() {
  Outcome out;
  const fs::path again = registry.dir / "rerun";
  fs::create_directories(again);
  for (auto [name, c] : registry.runs) {
    c.workers = rerun_workers;
    const ExperimentResult res = run_experiment(c);
    {
      std::ofstream os(again / (name + ".csv"), std::ios::binary);
      write_csv(os, res);
    }
    auto slurp = [](const fs::path& p) {
      std::ifstream is(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(is), {});
    };
    const bool same = slurp(registry.dir / (name + ".csv")) == slurp(again / (name + ".csv"));
    if (!same) out.check(false, name + ": output differs between 1 and " + std::to_string(rerun_workers) + " workers");
  }
  out.check(out.pass, fmt("%zu experiment outputs byte-identical for workers 1 and %u", registry.runs.size(),
                          rerun_workers));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out_dir = "acceptance_out";
  app.add_option("--out", out_dir, "directory for experiment outputs");
  app.add_option("--workers", rerun_workers, "worker count for the determinism re-run");
  CLI11_PARSE(app, argc, argv);
  registry.dir = out_dir;
  fs::create_directories(registry.dir);

  struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "Bernoulli reduction", 60, bernoulli_reduction},
      {2, "degree cap and monotonicity", 120, degree_cap_and_monotonicity},
      {3, "boundary simplification keeps outside states", 300, boundary_simplification_check},
      {4, "merge surgery", 600, merge_surgery},
      {5, "decreasing-path tail bound", 300, decreasing_tail},
      {6, "localization bound", 300, xi_localization},
      {7, "exact vs Monte Carlo", 600, exact_vs_monte_carlo},
      {8, "differentiability", 600, differentiability},
      {9, "finite-size brackets", 1800, brackets},
      {10, "uniqueness and connectivity plateau", 1200, uniqueness_plateau},
      {11, "determinism across worker counts", 0, determinism},
  };

  int failures = 0;
  for (const auto& cr : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.fn();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.budget_s > 0) o.check(secs < cr.budget_s, fmt("wall time %.1f s (budget %.0f s)", secs, cr.budget_s));
    else o.note(fmt("wall time %.1f s", secs));
    std::printf("%s criterion %2d: %s\n", o.pass ? "PASS" : "FAIL", cr.id, cr.title);
    for (const auto& d : o.details) std::printf("      %s\n", d.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
