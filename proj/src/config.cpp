#include "topsync/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "topsync/errors.hpp"
#include "topsync/exactquantum.hpp"

namespace topsync {

using nlohmann::json;

namespace {

// Reads one JSON object and remembers which keys were consumed, so that
// anything left over can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail("'" + key + "' must be finite");
    return x;
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    return v.get<int>();
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail("'" + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail("'" + key + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array()) fail("'" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>()))
        fail("'" + key + "' must contain finite numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> labels(const std::string& key) {
    std::vector<int> out;
    if (!has(key)) return out;
    const json& v = raw(key);
    if (!v.is_array()) fail("'" + key + "' must be an array of site labels");
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<int>() < 1) fail("'" + key + "' labels are integers >= 1");
      out.push_back(e.get<int>() - 1);
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!seen_.count(key)) fail("unknown key '" + key + "'");
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(where_ + ": " + what); }
  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

int site_count(const LatticeSpec& s) {
  switch (s.kind) {
    case LatticeKind::SSH: return s.n_sites;
    case LatticeKind::Kagome: return kagome_site_count(s.triangles_per_edge);
    case LatticeKind::Custom: return s.custom_sites;
  }
  return 0;
}

void parse_lattice(Reader r, SimulationConfig& c) {
  const std::string kind = r.string("kind", "ssh");
  LatticeSpec& l = c.lattice;
  if (kind == "ssh") {
    l.kind = LatticeKind::SSH;
    l.n_sites = r.integer("n_sites", 20);
    l.lambda0 = r.number("lambda0", 0.25);
    l.dimerization = r.number("dimerization", 0.0);
  } else if (kind == "kagome") {
    l.kind = LatticeKind::Kagome;
    l.triangles_per_edge = r.integer("triangles_per_edge", 5);
    l.lambda_down = r.number("lambda2", 0.25);
    l.lambda_up = r.number("ratio", -0.1) * l.lambda_down;
  } else if (kind == "custom") {
    l.kind = LatticeKind::Custom;
    l.custom_sites = r.integer("n_sites", 0);
    if (r.has("bonds")) {
      const json& b = r.raw("bonds");
      if (!b.is_array()) r.fail("'bonds' must be an array of [i, j, strength]");
      for (const auto& e : b) {
        if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
            !e[1].is_number_integer() || !e[2].is_number())
          r.fail("each bond is [i, j, strength] with 1-based labels");
        l.bonds.push_back({e[0].get<int>() - 1, e[1].get<int>() - 1, e[2].get<double>()});
      }
    }
  } else {
    r.fail("kind must be ssh, kagome or custom");
  }
  r.finish();
}

void parse_initial(Reader r, SimulationConfig& c) {
  const std::string kind = r.string("kind", "random");
  auto& ic = c.initial;
  if (kind == "random") {
    ic.kind = InitKind::Random;
  } else if (kind == "eigenstate") {
    ic.kind = InitKind::Eigenstate;
    if (r.has("index") == r.has("near")) r.fail("eigenstate needs exactly one of 'index' or 'near'");
    ic.index = r.integer("index", 0) - 1;
    ic.near = r.number("near", 0.0);
    ic.scale = r.number("scale", 1.0);
    if (r.has("index") && ic.index < 0) r.fail("'index' is 1-based");
  } else if (kind == "explicit") {
    ic.kind = InitKind::Explicit;
    const json& a = r.raw("alpha");
    if (!a.is_array()) r.fail("'alpha' must be an array of [re, im]");
    for (const auto& e : a) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        r.fail("'alpha' entries are [re, im]");
      ic.alpha.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
  } else {
    r.fail("kind must be random, eigenstate or explicit");
  }
  r.finish();
}

void parse_time(Reader r, TimeGrid& t) {
  t.t_rel = r.number("t_rel", t.t_rel);
  t.t_end = r.number("t_end", t.t_end);
  t.dt_out = r.number("dt_out", t.dt_out);
  const auto w = r.numbers("window", {t.t_rel, t.t_end});
  if (w.size() != 2) r.fail("'window' is [t_i, t_f]");
  t.window = {w[0], w[1]};
  r.finish();
}

void parse_sweep(Reader r, SweepSpec& s) {
  s.control = r.string("control", "");
  s.values = r.numbers("values", {});
  s.realizations = r.integer("realizations", 1);
  r.finish();
}

void parse_spectrum(Reader r, SpectrumSpec& s) {
  s.sites = r.labels("sites");
  s.targets = r.numbers("targets", {});
  s.hann = r.boolean("hann", s.hann);
  s.real_part = r.boolean("real_part", s.real_part);
  const auto band = r.numbers("band", {s.band_lo, s.band_hi});
  if (band.size() != 2) r.fail("'band' is [lo, hi]");
  s.band_lo = band[0];
  s.band_hi = band[1];
  s.threshold = r.number("threshold", s.threshold);
  r.finish();
}

void parse_sync(Reader r, SyncSpec& s) {
  s.bulk = r.labels("bulk");
  if (r.has("targets")) {
    const json& t = r.raw("targets");
    if (!t.is_array()) r.fail("'targets' must be an array of [j, k]");
    for (const auto& e : t) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        r.fail("'targets' entries are [j, k] site labels");
      s.targets.emplace_back(e[0].get<int>() - 1, e[1].get<int>() - 1);
    }
  }
  s.disorder_values = r.numbers("disorder_values", {});
  s.disorder_realizations = r.integer("disorder_realizations", s.disorder_realizations);
  const int us = r.integer("uncertainty_stride", static_cast<int>(s.uncertainty_stride));
  const int ss = r.integer("symplectic_stride", static_cast<int>(s.symplectic_stride));
  if (us < 0 || ss < 0) r.fail("strides must be >= 0");
  s.uncertainty_stride = static_cast<std::size_t>(us);
  s.symplectic_stride = static_cast<std::size_t>(ss);
  r.finish();
}

void parse_exact(Reader r, ExactSpec& e) {
  e.dim = r.integer("dim", e.dim);
  e.single_dim = r.integer("single_dim", e.single_dim);
  e.lambdas = r.numbers("lambdas", e.lambdas);
  e.gaussian_realizations = r.integer("gaussian_realizations", e.gaussian_realizations);
  e.wigner_half_width = r.number("wigner_half_width", e.wigner_half_width);
  e.wigner_points = r.integer("wigner_points", e.wigner_points);
  e.phase_bins = r.integer("phase_bins", e.phase_bins);
  r.finish();
}

void parse_output(Reader r, OutputSpec& o) {
  o.dir = r.string("dir", o.dir);
  const int stride = r.integer("trajectory_stride", static_cast<int>(o.trajectory_stride));
  if (stride < 1) r.fail("'trajectory_stride' must be >= 1");
  o.trajectory_stride = static_cast<std::size_t>(stride);
  o.trajectories = r.boolean("trajectories", o.trajectories);
  r.finish();
}

void check(bool ok, const std::string& what) {
  if (!ok) throw InvalidSpec(what);
}

void check_sites(const std::vector<int>& sites, int n, const std::string& what) {
  for (int s : sites) check(s >= 0 && s < n, what + ": site label " + std::to_string(s + 1) + " out of range");
}

void validate_config(const SimulationConfig& c) {
  validate(c.lattice);
  c.meanfield.validate();
  check(c.gamma_bar >= 0.0, "gamma_bar must be >= 0");
  const int n = site_count(c.lattice);

  const auto& ic = c.initial;
  if (ic.kind == InitKind::Eigenstate) {
    check(ic.index < n, "eigenstate index exceeds the number of sites");
    check(ic.scale > 0.0, "eigenstate scale must be > 0");
  }
  if (ic.kind == InitKind::Explicit)
    check(static_cast<int>(ic.alpha.size()) == n, "explicit alpha must have one entry per site");
  check(c.disorder >= 0.0, "disorder r must be >= 0");

  const auto& t = c.time;
  check(t.dt_out > 0.0, "dt_out must be > 0");
  check(t.t_rel >= 0.0 && t.t_end > t.t_rel, "need 0 <= t_rel < t_end");
  check(t.window.t_i >= t.t_rel && t.window.t_f <= t.t_end && t.window.t_i < t.window.t_f,
        "analysis window must lie inside [t_rel, t_end]");

  const auto& s = c.sweep;
  if (!s.control.empty()) {
    const bool ok = s.control == "r" ||
                    (s.control == "dimerization" && c.lattice.kind == LatticeKind::SSH) ||
                    (s.control == "ratio" && c.lattice.kind == LatticeKind::Kagome);
    check(ok, "sweep control '" + s.control + "' does not apply to this lattice");
    if (s.control == "r")
      for (double r : s.values) check(r >= 0.0, "disorder sweep values must be >= 0");
  } else {
    check(s.values.empty(), "sweep values given without a control");
  }
  check(s.realizations >= 1, "realizations must be >= 1");

  check_sites(c.spectrum.sites, n, "spectrum.sites");
  check(c.spectrum.threshold > 0.0, "spectrum threshold must be > 0");

  check_sites(c.sync.bulk, n, "sync.bulk");
  for (const auto& [j, k] : c.sync.targets) {
    check_sites({j, k}, n, "sync.targets");
    check(j != k, "sync.targets pairs need two distinct sites");
  }
  for (double r : c.sync.disorder_values) check(r >= 0.0, "sync disorder values must be >= 0");
  check(c.sync.disorder_realizations >= 1, "disorder_realizations must be >= 1");

  const auto& e = c.exact;
  check(e.dim >= 2 && e.dim <= kMaxTwoModeDim,
        "exact.dim must be in [2, " + std::to_string(kMaxTwoModeDim) + "]");
  check(e.single_dim >= 2 && e.single_dim <= 80, "exact.single_dim must be in [2, 80]");
  check(e.gaussian_realizations >= 1, "gaussian_realizations must be >= 1");
  check(e.wigner_half_width > 0.0 && e.wigner_points >= 3, "Wigner grid needs width > 0, >= 3 points");
  check(e.phase_bins >= 8, "phase_bins must be >= 8");
}

}  // namespace

double SimulationConfig::lattice_scale() const {
  switch (lattice.kind) {
    case LatticeKind::SSH: return lattice.lambda0;
    case LatticeKind::Kagome: return lattice.lambda_down;
    case LatticeKind::Custom: return 1.0;
  }
  return 1.0;
}

FluctuationParams SimulationConfig::fluctuation_params() const {
  return {meanfield.omega0, meanfield.kappa1, meanfield.kappa2, gamma_bar};
}

LatticeSpec SimulationConfig::lattice_at(double control) const {
  LatticeSpec l = lattice;
  if (sweep.control == "dimerization") l.dimerization = control;
  if (sweep.control == "ratio") l.lambda_up = control * l.lambda_down;
  return l;
}

std::vector<std::pair<int, int>> SimulationConfig::sync_targets() const {
  if (!sync.targets.empty()) return sync.targets;
  switch (lattice.kind) {
    case LatticeKind::SSH: return {{0, lattice.n_sites - 1}};
    case LatticeKind::Kagome: return {{0, 1}, {0, 2}, {1, 2}};
    case LatticeKind::Custom: return {};
  }
  return {};
}

std::vector<int> SimulationConfig::bulk_sites() const {
  if (!sync.bulk.empty()) return sync.bulk;
  std::vector<int> bulk;
  switch (lattice.kind) {
    case LatticeKind::SSH:
      // three sites in from each edge
      for (int j = 3; j < lattice.n_sites - 3; ++j) bulk.push_back(j);
      break;
    case LatticeKind::Kagome: bulk = kagome_regions(lattice.triangles_per_edge).bulk; break;
    case LatticeKind::Custom:
      for (int j = 0; j < lattice.custom_sites; ++j) bulk.push_back(j);
      break;
  }
  return bulk;
}

InitialCondition SimulationConfig::initial_condition(const CouplingMatrix& coupling,
                                                     std::uint64_t seed) const {
  switch (initial.kind) {
    case InitKind::Random: return RandomInit{seed};
    case InitKind::Explicit: {
      Eigen::VectorXcd a(static_cast<Eigen::Index>(initial.alpha.size()));
      for (std::size_t i = 0; i < initial.alpha.size(); ++i) a(static_cast<Eigen::Index>(i)) = initial.alpha[i];
      return ExplicitInit{a};
    }
    case InitKind::Eigenstate: {
      if (initial.index >= 0) return EigenstateInit{initial.index, initial.scale};
      const auto ev = eigendecompose(coupling).eigenvalues;
      const double target = initial.near * lattice_scale();
      Eigen::Index best = 0;
      (ev.array() - target).abs().minCoeff(&best);
      return EigenstateInit{static_cast<int>(best), initial.scale};
    }
  }
  return RandomInit{seed};
}

SimulationConfig parse_config(const json& j) {
  SimulationConfig c;
  Reader root(j, "config");
  c.name = root.string("name", "");
  c.seed = root.unsigned64("seed", 0);
  if (root.has("lattice")) parse_lattice(Reader(root.raw("lattice"), "lattice"), c);
  if (root.has("meanfield")) {
    Reader r(root.raw("meanfield"), "meanfield");
    c.meanfield.omega0 = r.number("omega0", c.meanfield.omega0);
    c.meanfield.kappa1 = r.number("kappa1", c.meanfield.kappa1);
    c.meanfield.kappa2 = r.number("kappa2", c.meanfield.kappa2);
    r.finish();
  }
  if (root.has("fluctuations")) {
    Reader r(root.raw("fluctuations"), "fluctuations");
    c.gamma_bar = r.number("gamma_bar", 0.0);
    r.finish();
  }
  if (root.has("initial_condition")) parse_initial(Reader(root.raw("initial_condition"), "initial_condition"), c);
  if (root.has("disorder")) {
    Reader r(root.raw("disorder"), "disorder");
    c.disorder = r.number("r", 0.0);
    r.finish();
  }
  if (root.has("time")) parse_time(Reader(root.raw("time"), "time"), c.time);
  if (root.has("sweep")) parse_sweep(Reader(root.raw("sweep"), "sweep"), c.sweep);
  if (root.has("spectrum")) parse_spectrum(Reader(root.raw("spectrum"), "spectrum"), c.spectrum);
  if (root.has("sync")) parse_sync(Reader(root.raw("sync"), "sync"), c.sync);
  if (root.has("exact")) parse_exact(Reader(root.raw("exact"), "exact"), c.exact);
  if (root.has("output")) parse_output(Reader(root.raw("output"), "output"), c.output);
  root.finish();
  validate_config(c);
  return c;
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": malformed JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const SimulationConfig& c) {
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  const auto& l = c.lattice;
  switch (l.kind) {
    case LatticeKind::SSH:
      j["lattice"] = {{"kind", "ssh"}, {"n_sites", l.n_sites}, {"lambda0", l.lambda0},
                      {"dimerization", l.dimerization}};
      break;
    case LatticeKind::Kagome:
      j["lattice"] = {{"kind", "kagome"}, {"triangles_per_edge", l.triangles_per_edge},
                      {"lambda2", l.lambda_down}, {"ratio", l.lambda_up / l.lambda_down}};
      break;
    case LatticeKind::Custom: {
      json bonds = json::array();
      for (const auto& b : l.bonds) bonds.push_back({b.i + 1, b.j + 1, b.strength});
      j["lattice"] = {{"kind", "custom"}, {"n_sites", l.custom_sites}, {"bonds", bonds}};
      break;
    }
  }
  j["meanfield"] = {{"omega0", c.meanfield.omega0}, {"kappa1", c.meanfield.kappa1},
                    {"kappa2", c.meanfield.kappa2}};
  j["fluctuations"] = {{"gamma_bar", c.gamma_bar}};
  json ic;
  switch (c.initial.kind) {
    case InitKind::Random: ic = {{"kind", "random"}}; break;
    case InitKind::Eigenstate:
      ic = {{"kind", "eigenstate"}, {"scale", c.initial.scale}};
      if (c.initial.index >= 0) ic["index"] = c.initial.index + 1;
      else ic["near"] = c.initial.near;
      break;
    case InitKind::Explicit: {
      json a = json::array();
      for (auto z : c.initial.alpha) a.push_back({z.real(), z.imag()});
      ic = {{"kind", "explicit"}, {"alpha", a}};
      break;
    }
  }
  j["initial_condition"] = ic;
  j["disorder"] = {{"r", c.disorder}};
  j["time"] = {{"t_rel", c.time.t_rel}, {"t_end", c.time.t_end}, {"dt_out", c.time.dt_out},
               {"window", {c.time.window.t_i, c.time.window.t_f}}};
  j["sweep"] = {{"control", c.sweep.control}, {"values", c.sweep.values},
                {"realizations", c.sweep.realizations}};
  json sites = json::array();
  for (int s : c.spectrum.sites) sites.push_back(s + 1);
  j["spectrum"] = {{"sites", sites},         {"targets", c.spectrum.targets},
                   {"hann", c.spectrum.hann}, {"real_part", c.spectrum.real_part},
                   {"band", {c.spectrum.band_lo, c.spectrum.band_hi}},
                   {"threshold", c.spectrum.threshold}};
  json bulk = json::array(), targets = json::array();
  for (int s : c.sync.bulk) bulk.push_back(s + 1);
  for (const auto& [a, b] : c.sync.targets) targets.push_back({a + 1, b + 1});
  j["sync"] = {{"bulk", bulk},
               {"targets", targets},
               {"disorder_values", c.sync.disorder_values},
               {"disorder_realizations", c.sync.disorder_realizations},
               {"uncertainty_stride", c.sync.uncertainty_stride},
               {"symplectic_stride", c.sync.symplectic_stride}};
  j["exact"] = {{"dim", c.exact.dim},
                {"single_dim", c.exact.single_dim},
                {"lambdas", c.exact.lambdas},
                {"gaussian_realizations", c.exact.gaussian_realizations},
                {"wigner_half_width", c.exact.wigner_half_width},
                {"wigner_points", c.exact.wigner_points},
                {"phase_bins", c.exact.phase_bins}};
  j["output"] = {{"dir", c.output.dir},
                 {"trajectory_stride", c.output.trajectory_stride},
                 {"trajectories", c.output.trajectories}};
  return j;
}

std::vector<std::string> config_warnings(const SimulationConfig& c) {
  auto w = c.fluctuation_params().warnings();
  if (c.sync.disorder_realizations < 20 && !c.sync.disorder_values.empty())
    w.emplace_back("fewer than 20 disorder realizations: averages are noisy");
  return w;
}

}  // namespace topsync
