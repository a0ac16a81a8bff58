// cdp: run constrained-degree percolation experiments from the command line.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cdp/experiments.hpp"
#include "cdp/schedule_io.hpp"

using namespace cdp;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replicas;
  std::optional<unsigned> workers;
  std::string out = "-";
  std::string format = "csv";
};

struct Overrides {
  std::optional<int> d, k, m_gap;
  std::optional<std::string> bc, graph;
  std::vector<int> sizes, distances, radii, lengths;
  std::vector<double> t;
  std::optional<double> eps;
  std::vector<std::string> events;
  std::optional<std::uint64_t> samples;
  bool polynomial = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "INI file with [experiment] and [params] sections");
  sub->add_option("--seed", c.seed, "master seed")->required();
  sub->add_option("--replicas", c.replicas, "number of replicas");
  sub->add_option("--workers", c.workers, "worker threads (output does not depend on it)");
  sub->add_option("--out", c.out, "output file, - for stdout");
  sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

void add_overrides(CLI::App* sub, ExperimentKind kind, Overrides& o) {
  const bool lattice = kind != ExperimentKind::exact;
  if (lattice) {
    sub->add_option("-d,--dim", o.d, "lattice dimension");
    sub->add_option("--bc", o.bc, "free or periodic")->check(CLI::IsMember({"free", "periodic"}));
    sub->add_option("--sizes", o.sizes, "box half-sides (free) or torus sides (periodic)")->delimiter(',');
  }
  sub->add_option("-k", o.k, "degree cap");
  sub->add_option("-t,--t", o.t, "time grid")->delimiter(',');
  switch (kind) {
    case ExperimentKind::unique: sub->add_option("--eps", o.eps, "giant threshold as volume fraction"); break;
    case ExperimentKind::twopoint: sub->add_option("--distances", o.distances)->delimiter(','); break;
    case ExperimentKind::xi: sub->add_option("--radii", o.radii)->delimiter(','); break;
    case ExperimentKind::tail: sub->add_option("--lengths", o.lengths)->delimiter(','); break;
    case ExperimentKind::surgery:
    case ExperimentKind::merge:
    case ExperimentKind::trifurc: sub->add_option("--m-gap", o.m_gap, "inner box m = n - gap"); break;
    case ExperimentKind::exact:
      sub->add_option("--graph", o.graph, "edge list, e.g. 0-1,1-2");
      sub->add_option("--event", o.events, "edge:E, all:E+F, connect:X-Y, sure or empty (repeatable)");
      sub->add_option("--samples", o.samples, "Monte Carlo samples per replica");
      sub->add_flag("--polynomial", o.polynomial, "print the exact polynomial of each event as JSON and exit");
      break;
    default: break;
  }
}

ExperimentConfig build_config(ExperimentKind kind, const Common& c, const Overrides& o) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  if (!c.config.empty()) {
    std::ifstream is(c.config);
    if (!is) throw ConfigError({"config: cannot open " + c.config});
    cfg = parse_config(is, cfg);
    if (cfg.kind != kind)
      throw ConfigError({std::string("kind: file says ") + to_string(cfg.kind) + ", command is " + to_string(kind)});
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.replicas) cfg.replicas = *c.replicas;
  if (c.workers) cfg.workers = *c.workers;
  if (o.d) cfg.d = *o.d;
  if (o.k) cfg.k = *o.k;
  if (o.m_gap) cfg.m_gap = *o.m_gap;
  if (o.bc) cfg.bc = parse_boundary_condition(*o.bc);
  if (o.graph) cfg.graph = *o.graph;
  if (!o.sizes.empty()) cfg.sizes = o.sizes;
  if (!o.t.empty()) cfg.t_grid = o.t;
  if (!o.distances.empty()) cfg.distances = o.distances;
  if (!o.radii.empty()) cfg.radii = o.radii;
  if (!o.lengths.empty()) cfg.lengths = o.lengths;
  if (o.eps) cfg.eps = *o.eps;
  if (!o.events.empty()) cfg.events = o.events;
  if (o.samples) cfg.samples = *o.samples;
  return cfg;
}

template <class Fn>
int with_output(const std::string& path, Fn&& fn) {
  if (path == "-") {
    fn(std::cout);
    return 0;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
    return 1;
  }
  fn(os);
  return 0;
}

int print_polynomials(const ExperimentConfig& cfg, const std::string& out) {
  const SimpleGraph g = SimpleGraph::parse(cfg.graph);
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& ev : cfg.events) {
    const EventPolynomial p = exact_polynomial(g, cfg.k, parse_event(g, ev), cfg.workers);
    nlohmann::json j = p;
    j["event"] = ev;
    j["graph"] = cfg.graph;
    j["k"] = cfg.k;
    doc.push_back(std::move(j));
  }
  return with_output(out, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained-degree percolation experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  const std::vector<std::pair<ExperimentKind, const char*>> kinds = {
      {ExperimentKind::theta, "P(origin edge reaches the box boundary)"},
      {ExperimentKind::wrap, "P(some cluster winds around the torus)"},
      {ExperimentKind::twopoint, "P(0 <-> y) along an axis on the torus"},
      {ExperimentKind::unique, "number and size of giant clusters on the torus"},
      {ExperimentKind::tail, "tail of the longest decreasing path"},
      {ExperimentKind::xi, "P(decreasing cluster leaves the graph ball)"},
      {ExperimentKind::surgery, "boundary simplification leaves the outside unchanged"},
      {ExperimentKind::merge, "open-path surgery merges boundary clusters"},
      {ExperimentKind::exact, "exact event polynomials vs Monte Carlo"},
      {ExperimentKind::trifurc, "trifurcation proxy counts vs the surface bound"},
  };

  Common common;
  Overrides over;
  std::optional<ExperimentKind> chosen;
  for (const auto& [kind, help] : kinds) {
    CLI::App* sub = app.add_subcommand(to_string(kind), help);
    add_common(sub, common);
    add_overrides(sub, kind, over);
    sub->callback([&chosen, kind = kind] { chosen = kind; });
  }

  // dump: write one replica's clocks and opening verdicts; replay: read them back.
  std::uint64_t dump_seed = 0, dump_replica = 0;
  int dump_d = 2, dump_k = 3, dump_size = 8;
  std::string dump_bc = "free", dump_out, replay_in;
  std::vector<double> replay_t{0.5};
  CLI::App* dump = app.add_subcommand("dump", "write the opening schedule of one replica");
  dump->add_option("--seed", dump_seed)->required();
  dump->add_option("--replica", dump_replica);
  dump->add_option("-d,--dim", dump_d);
  dump->add_option("-k", dump_k);
  dump->add_option("--size", dump_size, "half-side (free) or side (periodic)");
  dump->add_option("--bc", dump_bc)->check(CLI::IsMember({"free", "periodic"}));
  dump->add_option("--out", dump_out)->required();
  CLI::App* replay = app.add_subcommand("replay", "summarize a dumped schedule");
  replay->add_option("file", replay_in)->required();
  replay->add_option("-t,--t", replay_t)->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (dump->parsed()) {
      const LatticeBox box = detail::make_box(dump_d, dump_size, parse_boundary_condition(dump_bc));
      const ClockField u = sample_clocks(box, dump_seed, dump_replica);
      const OpeningSchedule s = run(box, u, dump_k);
      std::ofstream os(dump_out, std::ios::binary);
      write_dump(os, box, u, s);
      return os ? 0 : 1;
    }
    if (replay->parsed()) {
      std::ifstream is(replay_in, std::ios::binary);
      if (!is) throw std::runtime_error("cannot open " + replay_in);
      const ScheduleDump dumped = read_dump(is);
      const OpeningSchedule again = run(dumped.box, dumped.clocks, dumped.schedule.k);
      std::size_t accepted = 0;
      for (EdgeId e = 0; e < dumped.box.edge_count(); ++e) accepted += dumped.schedule.accepted(e);
      const bool consistent = again.open_time == dumped.schedule.open_time;
      std::printf("d=%d bc=%s edges=%zu k=%d seed=%llu replica=%llu accepted=%zu consistent=%s\n",
                  dumped.box.dim(), to_string(dumped.box.bc()), std::size_t(dumped.box.edge_count()),
                  dumped.schedule.k, (unsigned long long)dumped.clocks.seed,
                  (unsigned long long)dumped.clocks.replica, accepted, consistent ? "yes" : "no");
      for (double t : replay_t) {
        const Configuration c = config_at(dumped.schedule, t);
        std::size_t open = 0;
        for (auto b : c.open) open += b != 0;
        std::printf("t=%g open=%zu max_degree=%d\n", t, open, max_degree_at(dumped.box, dumped.schedule, t));
      }
      return consistent ? 0 : 1;
    }

    const ExperimentConfig cfg = build_config(*chosen, common, over);
    if (auto diags = validate(cfg); !diags.empty()) throw ConfigError(std::move(diags));
    if (over.polynomial) return print_polynomials(cfg, common.out);
    const ExperimentResult res = run_experiment(cfg);
    return with_output(common.out, [&](std::ostream& os) {
      if (common.format == "json") write_json(os, res);
      else write_csv(os, res);
    });
  } catch (const ConfigError& e) {
    for (const auto& d : e.diagnostics()) std::fprintf(stderr, "config error: %s\n", d.c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
