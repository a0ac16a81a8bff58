#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include "cdp/clusters.hpp"
#include "cdp/decreasing.hpp"
#include "cdp/dynamics.hpp"
#include "cdp/exact.hpp"
#include "cdp/graph.hpp"
#include "cdp/lattice.hpp"
#include "cdp/rng.hpp"
#include "cdp/stats.hpp"
#include "cdp/surgery.hpp"

namespace cdp {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kRowSchema = "cdp-rows/1";
inline constexpr const char* kCsvHeader = "kind,d,k,bc,size,t,observable,param,estimate,replicas,stderr";

enum class ExperimentKind { theta, wrap, twopoint, unique, tail, xi, surgery, merge, exact, trifurc };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::theta: return "theta";
    case ExperimentKind::wrap: return "wrap";
    case ExperimentKind::twopoint: return "twopoint";
    case ExperimentKind::unique: return "unique";
    case ExperimentKind::tail: return "tail";
    case ExperimentKind::xi: return "xi";
    case ExperimentKind::surgery: return "surgery";
    case ExperimentKind::merge: return "merge";
    case ExperimentKind::exact: return "exact";
    case ExperimentKind::trifurc: return "trifurc";
  }
  return "?";
}

inline ExperimentKind parse_kind(const std::string& s) {
  static const std::pair<const char*, ExperimentKind> names[] = {
      {"theta", ExperimentKind::theta},       {"theta-curve", ExperimentKind::theta},
      {"wrap", ExperimentKind::wrap},         {"wrapping", ExperimentKind::wrap},
      {"twopoint", ExperimentKind::twopoint}, {"two-point", ExperimentKind::twopoint},
      {"unique", ExperimentKind::unique},     {"uniqueness", ExperimentKind::unique},
      {"tail", ExperimentKind::tail},         {"xi", ExperimentKind::xi},
      {"surgery", ExperimentKind::surgery},   {"surgery-check", ExperimentKind::surgery},
      {"merge", ExperimentKind::merge},       {"exact", ExperimentKind::exact},
      {"exact-check", ExperimentKind::exact}, {"trifurc", ExperimentKind::trifurc},
      {"trifurcation", ExperimentKind::trifurc}};
  for (const auto& [name, kind] : names)
    if (s == name) return kind;
  throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

/// Everything that determines an experiment's output. `workers` only changes
/// how fast it is produced and is left out of the config hash.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::theta;
  int d = 2;
  int k = 3;
  BoundaryCondition bc = BoundaryCondition::free_bc;
  std::vector<int> sizes{8};  // n (half side) for free boxes, side L for tori
  std::vector<double> t_grid{0.5};
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;

  double eps = 0.05;                         // unique
  std::vector<int> distances{1, 2, 4, 8};    // twopoint
  std::vector<int> radii{6, 8, 10};          // xi
  std::vector<int> lengths{6, 7, 8, 9, 10};  // tail
  int m_gap = 3;                             // surgery, merge, trifurc: m = n - m_gap
  std::string graph = "0-1";                 // exact
  std::vector<std::string> events{"edge:0"}; // exact
  std::uint64_t samples = 10000;             // exact: Monte Carlo samples per replica

  std::string canonical() const;
  std::string hash() const;
};

namespace detail {

template <class T>
std::string join(const std::vector<T>& xs, char sep = ',');

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& xs, char sep) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += sep;
    if constexpr (std::is_floating_point_v<T>) s += format_double(xs[i]);
    else if constexpr (std::is_same_v<T, std::string>) s += xs[i];
    else s += std::to_string(xs[i]);
  }
  return s;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

template <class T>
T parse_number(const std::string& s) {
  T v{};
  const std::string t = trim(s);
  if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size()) throw std::invalid_argument("not a number: '" + s + "'");
  } else {
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size())
      throw std::invalid_argument("not an integer: '" + s + "'");
  }
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_number<T>(item));
  return out;
}

}  // namespace detail

inline std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << "kind=" << to_string(kind) << "\nd=" << d << "\nk=" << k << "\nbc=" << to_string(bc)
     << "\nsizes=" << detail::join(sizes) << "\nt=" << detail::join(t_grid)
     << "\nreplicas=" << replicas << "\nseed=" << seed;
  switch (kind) {
    case ExperimentKind::unique: os << "\neps=" << detail::format_double(eps); break;
    case ExperimentKind::twopoint: os << "\ndistances=" << detail::join(distances); break;
    case ExperimentKind::xi: os << "\nradii=" << detail::join(radii); break;
    case ExperimentKind::tail: os << "\nlengths=" << detail::join(lengths); break;
    case ExperimentKind::surgery:
    case ExperimentKind::merge:
    case ExperimentKind::trifurc: os << "\nm_gap=" << m_gap; break;
    case ExperimentKind::exact:
      os << "\ngraph=" << graph << "\nevents=" << detail::join(events, ';') << "\nsamples=" << samples;
      break;
    default: break;
  }
  os << '\n';
  return os.str();
}

inline std::string ExperimentConfig::hash() const {
  const std::string c = canonical();
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(c.data(), c.size())));
  return buf;
}

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> diagnostics)
      : std::invalid_argument(render(diagnostics)), diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  static std::string render(const std::vector<std::string>& ds) {
    std::string s = "invalid experiment config:";
    for (const auto& d : ds) s += "\n  " + d;
    return s;
  }
  std::vector<std::string> diagnostics_;
};

/// Field-level problems with a config; empty when it can be run.
inline std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> out;
  auto bad = [&](const std::string& field, const std::string& msg) { out.push_back(field + ": " + msg); };
  const auto kind = c.kind;
  const bool is_exact = kind == ExperimentKind::exact;

  if (c.replicas < 1) bad("replicas", "must be >= 1");
  if (c.t_grid.empty()) bad("t", "grid is empty");
  for (double t : c.t_grid)
    if (!(t >= 0.0 && t <= 1.0)) bad("t", "value " + detail::format_double(t) + " outside [0,1]");

  if (is_exact) {
    try {
      const SimpleGraph g = SimpleGraph::parse(c.graph);
      if (g.edge_count() > kExactEdgeBudget)
        bad("graph", "has " + std::to_string(g.edge_count()) + " edges, budget is " +
                         std::to_string(kExactEdgeBudget));
      if (c.k < 1 || c.k > g.max_constraint()) bad("k", "must lie in [1, 255]");
      if (c.events.empty()) bad("events", "no events given");
      for (const auto& ev : c.events) {
        try {
          const LocalEvent a = parse_event(g, ev);
          for (EdgeId e : a.support)
            if (e >= g.edge_count()) bad("events", "'" + ev + "' refers to an edge outside the graph");
        } catch (const std::exception& ex) {
          bad("events", ex.what());
        }
      }
    } catch (const std::exception& ex) {
      bad("graph", ex.what());
    }
    if (c.samples < 1) bad("samples", "must be >= 1");
    for (double t : c.t_grid)
      if (t <= 0.0 || t >= 1.0) bad("t", "exact comparisons need t in (0,1)");
    return out;
  }

  if (c.d < 1 || c.d > kMaxDim) bad("d", "must lie in [1, " + std::to_string(kMaxDim) + "]");
  if (c.k < 1 || c.k > 2 * c.d) bad("k", "must lie in [1, 2d]");
  if (c.sizes.empty()) bad("sizes", "no sizes given");

  const bool periodic = c.bc == BoundaryCondition::periodic;
  switch (kind) {
    case ExperimentKind::wrap:
    case ExperimentKind::twopoint:
      if (!periodic) bad("bc", std::string(to_string(kind)) + " needs periodic");
      break;
    case ExperimentKind::unique: break;
    default:
      if (periodic) bad("bc", std::string(to_string(kind)) + " needs free");
  }
  for (int s : c.sizes) {
    if (periodic && s < 3) bad("sizes", "torus side must be >= 3");
    if (!periodic && s < 1) bad("sizes", "box half side must be >= 1");
  }

  switch (kind) {
    case ExperimentKind::unique:
      if (!(c.eps > 0.0 && c.eps < 1.0)) bad("eps", "must lie in (0,1)");
      break;
    case ExperimentKind::twopoint:
      if (c.distances.empty()) bad("distances", "no distances given");
      for (int D : c.distances)
        for (int L : c.sizes)
          if (D < 0 || D > L / 2) bad("distances", std::to_string(D) + " not in [0, L/2] for L=" + std::to_string(L));
      break;
    case ExperimentKind::xi:
      if (c.radii.empty()) bad("radii", "no radii given");
      for (int r : c.radii)
        if (r < 0) bad("radii", "must be >= 0");
      break;
    case ExperimentKind::tail:
      if (c.lengths.empty()) bad("lengths", "no lengths given");
      for (int n : c.lengths)
        if (n < 1) bad("lengths", "must be >= 1");
      break;
    case ExperimentKind::surgery:
    case ExperimentKind::merge:
    case ExperimentKind::trifurc: {
      const int lowest = kind == ExperimentKind::merge ? 1 : 0;
      if (c.m_gap < 1) bad("m_gap", "must be >= 1");
      for (int n : c.sizes)
        if (n - c.m_gap < lowest) bad("m_gap", "leaves m = n - m_gap below " + std::to_string(lowest) + " for n=" + std::to_string(n));
      if (kind == ExperimentKind::merge && c.k < 3) bad("k", "merge needs k >= 3");
      for (double t : c.t_grid) {
        if (kind == ExperimentKind::surgery && t >= 1.0) bad("t", "surgery needs t < 1");
        if (kind == ExperimentKind::merge && (t <= 0.0 || t >= 1.0)) bad("t", "merge needs t in (0,1)");
      }
      break;
    }
    default: break;
  }
  return out;
}

/// Reads [experiment] and optional [params] sections of an INI file. Keys
/// missing from the file keep the values already in `base`.
inline ExperimentConfig parse_config(std::istream& is, ExperimentConfig base = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("file: ") + e.what()});
  }
  std::vector<std::string> diags;
  auto get = [&](const char* key) -> std::optional<std::string> {
    for (const char* section : {"experiment", "params"}) {
      if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(std::string(section) + "." + key, '.')))
        return detail::trim(*v);
    }
    return std::nullopt;
  };
  auto field = [&](const char* key, auto&& assign) {
    if (auto v = get(key)) {
      try {
        assign(*v);
      } catch (const std::exception& e) {
        diags.push_back(std::string(key) + ": " + e.what());
      }
    }
  };
  ExperimentConfig c = std::move(base);
  field("kind", [&](const std::string& v) { c.kind = parse_kind(v); });
  field("d", [&](const std::string& v) { c.d = detail::parse_number<int>(v); });
  field("k", [&](const std::string& v) { c.k = detail::parse_number<int>(v); });
  field("bc", [&](const std::string& v) { c.bc = parse_boundary_condition(v); });
  field("sizes", [&](const std::string& v) { c.sizes = detail::parse_list<int>(v); });
  field("t", [&](const std::string& v) { c.t_grid = detail::parse_list<double>(v); });
  field("replicas", [&](const std::string& v) { c.replicas = detail::parse_number<std::uint64_t>(v); });
  field("seed", [&](const std::string& v) { c.seed = detail::parse_number<std::uint64_t>(v); });
  field("workers", [&](const std::string& v) { c.workers = detail::parse_number<unsigned>(v); });
  field("eps", [&](const std::string& v) { c.eps = detail::parse_number<double>(v); });
  field("distances", [&](const std::string& v) { c.distances = detail::parse_list<int>(v); });
  field("radii", [&](const std::string& v) { c.radii = detail::parse_list<int>(v); });
  field("lengths", [&](const std::string& v) { c.lengths = detail::parse_list<int>(v); });
  field("m_gap", [&](const std::string& v) { c.m_gap = detail::parse_number<int>(v); });
  field("graph", [&](const std::string& v) { c.graph = v; });
  field("events", [&](const std::string& v) { c.events = detail::split(v, ';'); });
  field("samples", [&](const std::string& v) { c.samples = detail::parse_number<std::uint64_t>(v); });
  if (!diags.empty()) throw ConfigError(std::move(diags));
  return c;
}

struct ResultRow {
  std::string kind;
  int d = 0;
  int k = 0;
  std::string bc;
  int size = 0;
  double t = 0.0;
  std::string observable;
  std::string param;
  double estimate = 0.0;
  std::uint64_t replicas = 0;
  double stderr_ = 0.0;

  bool operator==(const ResultRow&) const = default;
};

struct Provenance {
  std::string schema = kRowSchema;
  std::string kind;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = kVersion;

  bool operator==(const Provenance&) const = default;
};

struct ExperimentResult {
  Provenance provenance;
  std::vector<ResultRow> rows;

  /// First row matching observable (and param, when given).
  const ResultRow& find(const std::string& observable, int size, double t,
                        const std::string& param = "") const {
    for (const auto& r : rows)
      if (r.observable == observable && r.size == size && r.t == t && (param.empty() || r.param == param))
        return r;
    throw std::out_of_range("no row " + observable + " size=" + std::to_string(size) + " param=" + param);
  }
};

namespace detail {

enum class Reduce { proportion, mean, max, constant };

// One output row. Per replica a slot holds a value; NaN means "not counted".
// For proportions each replica contributes `trials` Bernoulli trials and
// the slot value is the number of successes.
struct Slot {
  int size = 0;
  double t = 0.0;
  std::string observable;
  std::string param;
  Reduce reduce = Reduce::proportion;
  double value = 0.0;  // Reduce::constant
  double trials = 1.0;
};

using ReplicaFn = std::function<void(std::uint64_t replica, double* values)>;

// Runs replicas 0..count-1 on `workers` threads pulling from a shared
// counter. Results land in per-replica storage and are reduced afterwards
// in replica order, so the output does not depend on scheduling.
inline std::vector<double> run_replicas(std::uint64_t count, unsigned workers, std::size_t width,
                                        const ReplicaFn& fn) {
  std::vector<double> values(count * width, 0.0);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    try {
      for (std::uint64_t r; !failed && (r = next.fetch_add(1)) < count;) fn(r, values.data() + r * width);
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1 || count == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < std::min<std::uint64_t>(workers, count); ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return values;
}

inline void reduce_into(const ExperimentConfig& c, const std::vector<Slot>& slots,
                        const std::vector<double>& values, std::uint64_t count,
                        std::vector<ResultRow>& rows, const std::string& bc_name) {
  const std::size_t width = slots.size();
  for (std::size_t i = 0; i < width; ++i) {
    const Slot& s = slots[i];
    ResultRow row{to_string(c.kind), c.kind == ExperimentKind::exact ? 0 : c.d, c.k, bc_name,
                  s.size, s.t, s.observable, s.param};
    if (s.reduce == Reduce::constant) {
      row.estimate = s.value;
      row.replicas = count;
      rows.push_back(row);
      continue;
    }
    MeanAccumulator acc;
    double best = 0.0;
    for (std::uint64_t r = 0; r < count; ++r) {
      const double v = values[r * width + i];
      if (std::isnan(v)) continue;
      acc.add(v);
      best = std::max(best, v);
    }
    switch (s.reduce) {
      case Reduce::proportion: {
        const double trials = static_cast<double>(acc.n) * s.trials;
        row.estimate = trials > 0 ? acc.sum / trials : 0.0;
        row.replicas = static_cast<std::uint64_t>(trials);
        row.stderr_ = binomial_stderr(row.estimate, trials);
        break;
      }
      case Reduce::mean:
        row.estimate = acc.mean();
        row.replicas = acc.n;
        row.stderr_ = acc.stderr_of_mean();
        break;
      case Reduce::max:
        row.estimate = best;
        row.replicas = acc.n;
        break;
      case Reduce::constant: break;
    }
    rows.push_back(row);
  }
}

inline LatticeBox make_box(int d, int size, BoundaryCondition bc) {
  return bc == BoundaryCondition::periodic ? LatticeBox::torus(d, size) : LatticeBox::free_box(d, size);
}

inline constexpr double kSkip = std::numeric_limits<double>::quiet_NaN();

inline EdgeId central_edge(const LatticeBox& box) { return *box.edge_from(box.origin(), 0); }

// Builds slots and the per-replica function for one lattice size.
inline std::pair<std::vector<Slot>, ReplicaFn> plan_size(const ExperimentConfig& c,
                                                         std::shared_ptr<const LatticeBox> box,
                                                         int size) {
  std::vector<Slot> slots;
  const auto& ts = c.t_grid;
  const int k = c.k;
  const std::uint64_t seed = c.seed;

  switch (c.kind) {
    case ExperimentKind::theta: {
      for (double t : ts) slots.push_back({size, t, "theta", ""});
      return {slots, [=](std::uint64_t r, double* out) {
                const OpeningSchedule s = run(*box, sample_clocks(*box, seed, r), k);
                for (std::size_t j = 0; j < ts.size(); ++j) out[j] = theta_hat(*box, s, ts[j]);
              }};
    }
    case ExperimentKind::wrap: {
      for (double t : ts) slots.push_back({size, t, "wrap", ""});
      return {slots, [=](std::uint64_t r, double* out) {
                const OpeningSchedule s = run(*box, sample_clocks(*box, seed, r), k);
                for (std::size_t j = 0; j < ts.size(); ++j) out[j] = label(*box, config_at(s, ts[j])).wraps[0];
              }};
    }
    case ExperimentKind::twopoint: {
      const VertexId x = box->origin();
      std::vector<VertexId> ys;
      for (int D : c.distances) {
        Coord cx = box->decode(x);
        cx[0] = (cx[0] + D) % box->side();
        ys.push_back(box->encode(cx));
      }
      for (double t : ts)
        for (int D : c.distances) slots.push_back({size, t, "tau", std::to_string(D)});
      return {slots, [=](std::uint64_t r, double* out) {
                const OpeningSchedule s = run(*box, sample_clocks(*box, seed, r), k);
                for (std::size_t j = 0; j < ts.size(); ++j) {
                  const ClusterLabeling lab = label(*box, config_at(s, ts[j]));
                  for (std::size_t i = 0; i < ys.size(); ++i) *out++ = lab.connected(x, ys[i]);
                }
              }};
    }
    case ExperimentKind::unique: {
      const std::string e = format_double(c.eps);
      for (double t : ts) {
        slots.push_back({size, t, "multi_giant", e});
        slots.push_back({size, t, "largest_fraction", "", Reduce::mean});
        slots.push_back({size, t, "second_fraction", "", Reduce::mean});
      }
      const double eps = c.eps;
      return {slots, [=](std::uint64_t r, double* out) {
                const OpeningSchedule s = run(*box, sample_clocks(*box, seed, r), k);
                const double nv = static_cast<double>(box->vertex_count());
                for (double t : ts) {
                  const GiantStats g = uniqueness_stats(label(*box, config_at(s, t)), eps);
                  *out++ = g.giant_count >= 2;
                  *out++ = g.largest / nv;
                  *out++ = g.second / nv;
                }
              }};
    }
    case ExperimentKind::tail: {
      // Clocks alone, no dynamics: reported at t = 1.
      for (int n : c.lengths) {
        slots.push_back({size, 1.0, "tail", std::to_string(n)});
        slots.push_back({size, 1.0, "bound", std::to_string(n), Reduce::constant, tail_bound(c.d, n)});
      }
      slots.push_back({size, 1.0, "censored", ""});
      const auto lengths = c.lengths;
      const EdgeId e = central_edge(*box);
      return {slots, [=](std::uint64_t r, double* out) {
                const ClockField u = sample_clocks(*box, seed, r);
                const PathLength p = longest_decreasing_path(*box, std::span<const double>(u.u), e);
                for (int n : lengths) {
                  *out++ = p.length >= n;
                  *out++ = 0.0;
                }
                *out = p.censored;
              }};
    }
    case ExperimentKind::xi: {
      const EdgeId e = central_edge(*box);
      const std::vector<EdgeId> gamma{e};
      auto balls = std::make_shared<std::vector<Ball>>();
      for (int rad : c.radii) balls->push_back(graph_ball(*box, std::span<const EdgeId>(gamma), rad));
      for (double t : ts) {
        for (int rad : c.radii) {
          slots.push_back({size, t, "xi_complement", std::to_string(rad)});
          slots.push_back({size, t, "bound", std::to_string(rad), Reduce::constant,
                           xi_bound(gamma.size(), c.d, t, rad)});
        }
        slots.push_back({size, t, "censored", ""});
      }
      return {slots, [=](std::uint64_t r, double* out) {
                const ClockField u = sample_clocks(*box, seed, r);
                const std::span<const double> uu(u.u);
                for (double t : ts) {
                  for (const Ball& b : *balls) {
                    *out++ = !xi_indicator(*box, uu, std::span<const EdgeId>(gamma), t, b);
                    *out++ = 0.0;
                  }
                  *out++ = restricted_cluster(*box, uu, std::span<const EdgeId>(gamma), t).censored;
                }
              }};
    }
    case ExperimentKind::surgery: {
      const int m = size - c.m_gap;
      for (double t : ts) {
        slots.push_back({size, t, "outside_changed", std::to_string(m)});
        slots.push_back({size, t, "not_simplified", std::to_string(m)});
      }
      return {slots, [=](std::uint64_t r, double* out) {
                const ClockField u = sample_clocks(*box, seed, r);
                for (double t : ts) {
                  const ClockField rr = simplify_boundary(*box, u, m, t, k);
                  *out++ = !outside_states_equal(*box, u, rr, m, t, k);
                  *out++ = !simplifies_boundary(*box, u, rr, m, t, k);
                }
              }};
    }
    case ExperimentKind::merge: {
      const int m = size - c.m_gap;
      for (double t : ts) {
        slots.push_back({size, t, "applicable", std::to_string(m)});
        slots.push_back({size, t, "merged", std::to_string(m)});
        slots.push_back({size, t, "outside_equal", std::to_string(m)});
      }
      return {slots, [=](std::uint64_t r, double* out) {
                const ClockField u = sample_clocks(*box, seed, r);
                for (double t : ts) {
                  const MergeReport rep = merge_experiment(*box, u, m, t, k);
                  *out++ = rep.applicable;
                  *out++ = rep.applicable ? double(rep.merged) : kSkip;
                  *out++ = rep.applicable ? double(rep.outside_equal) : kSkip;
                }
              }};
    }
    case ExperimentKind::trifurc: {
      const int m = size - c.m_gap;
      std::size_t bound = 0;
      for (VertexId v = 0; v < box->vertex_count(); ++v) bound += box->norm_from_center(v) == m;
      for (double t : ts) {
        slots.push_back({size, t, "mean_count", std::to_string(m), Reduce::mean});
        slots.push_back({size, t, "max_count", std::to_string(m), Reduce::max});
        slots.push_back({size, t, "bound", std::to_string(m), Reduce::constant, double(bound)});
        slots.push_back({size, t, "violations", std::to_string(m)});
      }
      return {slots, [=](std::uint64_t r, double* out) {
                const OpeningSchedule s = run(*box, sample_clocks(*box, seed, r), k);
                for (double t : ts) {
                  const TrifurcationCount x = trifurcation_proxy_count(*box, s, t, m);
                  *out++ = double(x.count);
                  *out++ = double(x.count);
                  *out++ = 0.0;
                  *out++ = x.violates();
                }
              }};
    }
    case ExperimentKind::exact: break;
  }
  throw std::logic_error("plan_size: unsupported kind");
}

inline ExperimentResult run_exact(const ExperimentConfig& c, ExperimentResult res) {
  const SimpleGraph g = SimpleGraph::parse(c.graph);
  std::vector<LocalEvent> events;
  for (const auto& ev : c.events) events.push_back(parse_event(g, ev));
  std::vector<Slot> slots;
  const int size = static_cast<int>(g.edge_count());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const EventPolynomial p = exact_polynomial(g, c.k, events[i]);
    for (double t : c.t_grid) {
      slots.push_back({size, t, "exact", c.events[i], Reduce::constant, p(t)});
      Slot mc{size, t, "mc", c.events[i]};
      mc.trials = static_cast<double>(c.samples);
      slots.push_back(mc);
    }
  }
  const auto ts = c.t_grid;
  const int k = c.k;
  const auto values = run_replicas(c.replicas, c.workers, slots.size(), [&](std::uint64_t r, double* out) {
    const auto hits = monte_carlo_counts(g, k, events, ts, c.samples, c.seed, r);
    for (std::size_t i = 0; i < hits.size(); ++i)
      for (std::size_t j = 0; j < ts.size(); ++j) {
        *out++ = 0.0;
        *out++ = static_cast<double>(hits[i][j]);
      }
  });
  reduce_into(c, slots, values, c.replicas, res.rows, "graph");
  return res;
}

}  // namespace detail

/// Runs every replica of every size and reduces them into result rows.
/// Replica r always uses the clock stream keyed by (seed, r, box).
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  if (auto diags = validate(c); !diags.empty()) throw ConfigError(std::move(diags));
  ExperimentResult res;
  res.provenance.kind = to_string(c.kind);
  res.provenance.config_hash = c.hash();
  res.provenance.seed = c.seed;
  if (c.kind == ExperimentKind::exact) return detail::run_exact(c, std::move(res));

  for (int size : c.sizes) {
    auto box = std::make_shared<const LatticeBox>(detail::make_box(c.d, size, c.bc));
    auto [slots, fn] = detail::plan_size(c, box, size);
    const auto values = detail::run_replicas(c.replicas, c.workers, slots.size(), fn);
    detail::reduce_into(c, slots, values, c.replicas, res.rows, to_string(c.bc));
  }
  return res;
}

// ---- output --------------------------------------------------------------

inline void write_csv(std::ostream& os, const ExperimentResult& res) {
  const auto& p = res.provenance;
  os << "# schema=" << p.schema << " kind=" << p.kind << " config_hash=" << p.config_hash
     << " seed=" << p.seed << " version=" << p.version << '\n';
  os << kCsvHeader << '\n';
  for (const auto& r : res.rows) {
    for (const std::string* s : {&r.kind, &r.bc, &r.observable, &r.param})
      if (s->find_first_of(",\"\n") != std::string::npos)
        throw std::invalid_argument("write_csv: field contains a separator: " + *s);
    os << r.kind << ',' << r.d << ',' << r.k << ',' << r.bc << ',' << r.size << ','
       << detail::format_double(r.t) << ',' << r.observable << ',' << r.param << ','
       << detail::format_double(r.estimate) << ',' << r.replicas << ','
       << detail::format_double(r.stderr_) << '\n';
  }
}

inline ExperimentResult read_csv(std::istream& is) {
  ExperimentResult res;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream in(line.substr(1));
      std::string kv;
      while (in >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        auto& p = res.provenance;
        if (key == "schema") p.schema = val;
        else if (key == "kind") p.kind = val;
        else if (key == "config_hash") p.config_hash = val;
        else if (key == "seed") p.seed = detail::parse_number<std::uint64_t>(val);
        else if (key == "version") p.version = val;
      }
      continue;
    }
    if (!header_seen) {
      if (line != kCsvHeader) throw std::invalid_argument("read_csv: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 11) throw std::invalid_argument("read_csv: expected 11 fields in '" + line + "'");
    ResultRow r;
    r.kind = f[0];
    r.d = detail::parse_number<int>(f[1]);
    r.k = detail::parse_number<int>(f[2]);
    r.bc = f[3];
    r.size = detail::parse_number<int>(f[4]);
    r.t = detail::parse_number<double>(f[5]);
    r.observable = f[6];
    r.param = f[7];
    r.estimate = detail::parse_number<double>(f[8]);
    r.replicas = detail::parse_number<std::uint64_t>(f[9]);
    r.stderr_ = detail::parse_number<double>(f[10]);
    res.rows.push_back(std::move(r));
  }
  return res;
}

inline void to_json(nlohmann::json& j, const ResultRow& r) {
  j = nlohmann::json{{"kind", r.kind},   {"d", r.d},
                     {"k", r.k},         {"bc", r.bc},
                     {"size", r.size},   {"t", r.t},
                     {"observable", r.observable}, {"param", r.param},
                     {"estimate", r.estimate},     {"replicas", r.replicas},
                     {"stderr", r.stderr_}};
}

inline void from_json(const nlohmann::json& j, ResultRow& r) {
  j.at("kind").get_to(r.kind);
  j.at("d").get_to(r.d);
  j.at("k").get_to(r.k);
  j.at("bc").get_to(r.bc);
  j.at("size").get_to(r.size);
  j.at("t").get_to(r.t);
  j.at("observable").get_to(r.observable);
  j.at("param").get_to(r.param);
  j.at("estimate").get_to(r.estimate);
  j.at("replicas").get_to(r.replicas);
  j.at("stderr").get_to(r.stderr_);
}

inline nlohmann::json to_json_document(const ExperimentResult& res) {
  const auto& p = res.provenance;
  nlohmann::json doc;
  doc["provenance"] = {{"schema", p.schema}, {"kind", p.kind}, {"config_hash", p.config_hash},
                       {"seed", p.seed},     {"version", p.version}};
  doc["rows"] = res.rows;
  return doc;
}

inline ExperimentResult from_json_document(const nlohmann::json& doc) {
  ExperimentResult res;
  const auto& p = doc.at("provenance");
  p.at("schema").get_to(res.provenance.schema);
  p.at("kind").get_to(res.provenance.kind);
  p.at("config_hash").get_to(res.provenance.config_hash);
  p.at("seed").get_to(res.provenance.seed);
  p.at("version").get_to(res.provenance.version);
  res.rows = doc.at("rows").get<std::vector<ResultRow>>();
  return res;
}

inline void write_json(std::ostream& os, const ExperimentResult& res) {
  os << to_json_document(res).dump(2) << '\n';
}

inline ExperimentResult read_json(std::istream& is) {
  return from_json_document(nlohmann::json::parse(is));
}

}  // namespace cdp
