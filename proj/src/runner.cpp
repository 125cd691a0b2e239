#include "topsync/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include "topsync/errors.hpp"
#include "topsync/io.hpp"
#include "topsync/parallel.hpp"
#include "topsync/random.hpp"
#include "topsync/spectral.hpp"

namespace topsync {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

unsigned resolve_jobs(const RunOptions& o) { return o.jobs == 0 ? default_jobs() : o.jobs; }

std::string job_id(std::size_t cell, int realization) {
  return "c" + std::to_string(cell) + "_r" + std::to_string(realization);
}

// Manifest skeleton shared by every subcommand.
struct Session {
  fs::path out;
  RunManifest manifest;
  Clock::time_point t0 = Clock::now();

  Session(const std::string& command, const SimulationConfig& c) : out(c.output.dir) {
    manifest.command = command;
    manifest.config = to_json(c);
    manifest.config_hash = fnv1a_hex(manifest.config.dump());
    manifest.master_seed = c.seed;
    manifest.software = kSoftwareVersion;
    manifest.started = utc_timestamp();
    fs::create_directories(out);
  }

  std::string add_artifact(const std::string& name) {
    manifest.artifacts.push_back(name);
    return name;
  }

  RunResult finish(json summary) {
    manifest.finished = utc_timestamp();
    manifest.seconds = seconds_since(t0);
    if (!summary.is_null()) {
      write_json(out / "summary.json", summary);
      manifest.artifacts.push_back("summary.json");
    }
    write_json(out / "manifest.json", manifest.to_json());
    return {out, manifest, std::move(summary)};
  }
};

json window_json(const TimeWindow& w) { return json::array({w.t_i, w.t_f}); }

json pairs_json(const std::vector<std::pair<int, int>>& pairs) {
  json a = json::array();
  for (const auto& [j, k] : pairs) a.push_back({j + 1, k + 1});
  return a;
}

json summary_json(const SyncSummary& s) {
  return {{"argmax", {s.argmax.first + 1, s.argmax.second + 1}},
          {"max_value", s.max_value},
          {"bulk_median", s.bulk_median},
          {"target_pairs", pairs_json(s.target_pairs)},
          {"target_values", s.target_values},
          {"target_ratios", s.target_ratios},
          {"min_target_ratio", s.min_target_ratio},
          {"max_non_bulk_ratio", s.max_ratio}};
}

json physicality_json(const PhysicalityReport& p) {
  return {{"samples", p.samples},
          {"uncertainty_checks", p.uncertainty_checks},
          {"symplectic_checks", p.symplectic_checks},
          {"max_asymmetry", p.max_asymmetry},
          {"min_symplectic_eigenvalue", p.min_symplectic},
          {"min_symplectic_time", p.min_symplectic_time},
          {"initial_is_vacuum", p.initial_is_vacuum},
          {"violation_times", p.violation_times},
          {"ok", p.ok()}};
}

json mean_field_json(const MeanFieldParams& p) {
  return {{"omega0", p.omega0}, {"kappa1", p.kappa1}, {"kappa2", p.kappa2}};
}

// t, A_1..A_N with A_j = Re alpha_j.
void write_amplitude_raster(std::ostream& out, const Trajectory& tr, std::size_t stride) {
  out << "t";
  for (int j = 0; j < tr.sites(); ++j) out << ",A_" << (j + 1);
  out << '\n';
  for (std::size_t k = 0; k < tr.samples(); k += stride) {
    out << format_double(tr.time(k));
    for (int j = 0; j < tr.sites(); ++j) out << ',' << format_double(tr.alpha(k, j).real());
    out << '\n';
  }
}

CouplingMatrix realize_lattice(const LatticeSpec& lattice, double r_abs, std::uint64_t disorder_seed) {
  CouplingMatrix m = build_lattice(lattice);
  if (r_abs > 0.0) m = apply_disorder(m, DisorderSpec{r_abs, disorder_seed});
  return m;
}

EnsembleOptions ensemble_options(const SimulationConfig& c, unsigned jobs) {
  EnsembleOptions o;
  o.t_rel = c.time.t_rel;
  o.dt_out = c.time.dt_out;
  o.window = c.time.window;
  o.sites = c.spectrum.sites;
  o.spectrum.hann = c.spectrum.hann;
  o.spectrum.real_part = c.spectrum.real_part;
  o.spectrum.band_lo = c.spectrum.band_lo;
  o.spectrum.band_hi = c.spectrum.band_hi;
  o.jobs = jobs;
  o.master_seed = c.seed;
  o.peak_targets = c.spectrum.targets.empty() ? std::vector<double>{c.meanfield.omega0} : c.spectrum.targets;
  o.peak_threshold = c.spectrum.threshold;
  return o;
}

// Spectrum map, per-realization peak reports, detected lines and seeds.
json write_ensemble(Session& s, const EnsembleResult& res, const SimulationConfig& c,
                    const std::vector<double>& control_units,
                    const std::vector<Eigen::VectorXd>& reference_levels) {
  const auto& map = res.map;
  write_file(s.out / s.add_artifact("spectrum_map.csv"), [&](std::ostream& o) { map.write_csv(o); });

  const auto targets = ensemble_options(c, 1).peak_targets;
  write_file(s.out / s.add_artifact("peaks.csv"), [&](std::ostream& o) {
    o << "control,realization,target,detected,amplitude,frequency,bin_offset,median\n";
    for (std::size_t ci = 0; ci < res.peaks.size(); ++ci)
      for (std::size_t r = 0; r < res.peaks[ci].size(); ++r)
        for (const auto& p : res.peaks[ci][r])
          o << format_double(control_units[ci]) << ',' << r << ',' << format_double(p.target) << ','
            << (p.detected ? 1 : 0) << ',' << format_double(p.amplitude) << ','
            << format_double(p.frequency) << ',' << format_double(p.bin_offset) << ','
            << format_double(p.median_level) << '\n';
  });

  json cells = json::array();
  write_file(s.out / s.add_artifact("lines.csv"), [&](std::ostream& o) {
    o << "control,frequency,amplitude,nearest_level,offset_bins\n";
    for (std::size_t ci = 0; ci < map.control.size(); ++ci) {
      json cell = {{"control", control_units[ci]}, {"realizations", map.realizations[ci]}};
      if (map.realizations[ci] == 0 || map.omega.size() == 0) {
        cells.push_back(cell);
        continue;
      }
      const Spectrum sp = map.row(ci);
      const auto peaks = find_peaks(sp, c.spectrum.threshold);
      double worst = 0.0;
      for (const auto& p : peaks) {
        double nearest = std::numeric_limits<double>::quiet_NaN(), best = 1e300;
        if (ci < reference_levels.size())
          for (Eigen::Index l = 0; l < reference_levels[ci].size(); ++l) {
            const double f = c.meanfield.omega0 + reference_levels[ci](l);
            if (std::abs(p.frequency - f) < best) best = std::abs(p.frequency - f), nearest = f;
          }
        const double off = std::isnan(nearest) ? std::numeric_limits<double>::quiet_NaN()
                                                : (p.frequency - nearest) / map.resolution;
        if (!std::isnan(off)) worst = std::max(worst, std::abs(off));
        o << format_double(control_units[ci]) << ',' << format_double(p.frequency) << ','
          << format_double(p.amplitude) << ',' << format_double(nearest) << ',' << format_double(off)
          << '\n';
      }
      std::size_t hits = 0, total = 0;
      for (const auto& rep : res.peaks[ci])
        for (const auto& p : rep) hits += p.detected, ++total;
      const PeakReport mean_peak = detect_peak(sp, targets.front(), c.spectrum.threshold);
      cell["lines"] = peaks.size();
      cell["max_line_offset_bins"] = worst;
      cell["target_detected_realizations"] = hits;
      cell["target_checks"] = total;
      cell["target_detected_in_average"] = mean_peak.detected;
      cells.push_back(cell);
    }
  });

  json seeds = json::array();
  for (std::size_t ci = 0; ci < res.ic_seeds.size(); ++ci)
    seeds.push_back({{"initial_condition", res.ic_seeds[ci]}, {"disorder", res.disorder_seeds[ci]}});
  json meta = {{"control_name", map.control_name},
               {"control", control_units},
               {"lattice_scale", c.lattice_scale()},
               {"window", window_json(c.time.window)},
               {"dt_out", c.time.dt_out},
               {"resolution", map.resolution},
               {"sites", c.spectrum.sites},
               {"hann", c.spectrum.hann},
               {"targets", targets},
               {"seeds", seeds}};
  write_json(s.out / s.add_artifact("spectrum_map.json"), meta);

  for (std::size_t ci = 0; ci < res.ic_seeds.size(); ++ci)
    for (std::size_t r = 0; r < res.ic_seeds[ci].size(); ++r) {
      JobRecord job{job_id(ci, static_cast<int>(r)), true, "", -1.0, {}};
      for (const auto& f : res.failures)
        if (f.control_index == ci && static_cast<std::size_t>(f.realization) == r) job.ok = false, job.error = f.message;
      s.manifest.jobs.push_back(job);
    }
  return {{"cells", cells}, {"failures", res.failures.size()}};
}

}  // namespace

std::size_t RunManifest::failed() const {
  return static_cast<std::size_t>(std::count_if(jobs.begin(), jobs.end(), [](const JobRecord& j) { return !j.ok; }));
}

json RunManifest::to_json() const {
  json jobs_json = json::array();
  for (const auto& j : jobs) {
    json r = {{"id", j.id}, {"status", j.ok ? "ok" : "failed"}, {"artifacts", j.artifacts}};
    if (j.seconds >= 0.0) r["seconds"] = j.seconds;
    if (!j.ok) r["error"] = j.error;
    jobs_json.push_back(r);
  }
  return {{"command", command},
          {"config_hash", "fnv1a64:" + config_hash},
          {"master_seed", master_seed},
          {"software", software},
          {"started", started},
          {"finished", finished},
          {"seconds", seconds},
          {"jobs_total", jobs.size()},
          {"jobs_failed", failed()},
          {"jobs", jobs_json},
          {"artifacts", artifacts},
          {"config", config}};
}

SimulationConfig apply_overrides(SimulationConfig c, const RunOptions& o) {
  if (o.out_dir) c.output.dir = o.out_dir->string();
  if (o.seed) c.seed = *o.seed;
  if (o.realizations) {
    if (*o.realizations < 1) throw ConfigError("--realizations must be >= 1");
    c.sweep.realizations = *o.realizations;
    c.sync.disorder_realizations = *o.realizations;
    c.exact.gaussian_realizations = *o.realizations;
  }
  return c;
}

// ---------------------------------------------------------------- meanfield

RunResult run_meanfield(const SimulationConfig& config, const RunOptions& options) {
  const SimulationConfig c = apply_overrides(config, options);
  Session s("meanfield", c);
  const bool swept = !c.sweep.control.empty();
  const std::vector<double> controls = swept ? c.sweep.values : std::vector<double>{0.0};
  const int nr = c.sweep.realizations;
  const std::size_t n_jobs = controls.size() * static_cast<std::size_t>(nr);
  const MeanFieldParams mf = c.fluctuation_params().mean_field();

  std::vector<JobRecord> records(n_jobs);
  std::vector<json> job_summary(n_jobs);
  parallel_for(n_jobs, resolve_jobs(options), [&](std::size_t job) {
    const std::size_t ci = job / static_cast<std::size_t>(nr);
    const int r = static_cast<int>(job % static_cast<std::size_t>(nr));
    JobRecord& rec = records[job];
    rec.id = job_id(ci, r);
    const auto t0 = Clock::now();
    try {
      const std::uint64_t ic_seed = derive_seed(c.seed, SeedStream::InitialCondition, {ci, static_cast<std::uint64_t>(r)});
      const std::uint64_t dis_seed = derive_seed(c.seed, SeedStream::Disorder, {ci, static_cast<std::uint64_t>(r)});
      double r_abs = c.disorder * c.lattice_scale();
      LatticeSpec lattice = swept ? c.lattice_at(controls[ci]) : c.lattice;
      if (swept && c.sweep.control == "r") r_abs = controls[ci] * c.lattice_scale();
      auto coupling = std::make_shared<const CouplingMatrix>(realize_lattice(lattice, r_abs, dis_seed));
      AmplitudeState init{0.0, make_initial_state(c.initial_condition(*coupling, ic_seed), *coupling)};
      SolverOptions so;
      so.record_from = c.time.t_rel;
      const Trajectory tr = integrate(init, mf, coupling, c.time.t_end, c.time.dt_out, so);

      const auto [k0, k1] = tr.window_indices(c.time.window.t_i, c.time.window.t_f);
      std::vector<double> mean_amp(static_cast<std::size_t>(tr.sites()), 0.0);
      for (std::size_t k = k0; k <= k1; ++k)
        for (int j = 0; j < tr.sites(); ++j) mean_amp[static_cast<std::size_t>(j)] += std::abs(tr.alpha(k, j));
      for (auto& a : mean_amp) a /= static_cast<double>(k1 - k0 + 1);

      const std::string stem = rec.id;
      if (c.output.trajectories) {
        write_file(s.out / (stem + "_trajectory.csv"),
                   [&](std::ostream& o) { tr.write_csv(o, c.output.trajectory_stride); });
        rec.artifacts.push_back(stem + "_trajectory.csv");
      }
      write_file(s.out / (stem + "_amplitudes.csv"),
                 [&](std::ostream& o) { write_amplitude_raster(o, tr, c.output.trajectory_stride); });
      rec.artifacts.push_back(stem + "_amplitudes.csv");
      json meta = {{"params", mean_field_json(mf)},
                   {"lattice", to_json(c)["lattice"]},
                   {"control", swept ? json(controls[ci]) : json()},
                   {"control_name", c.sweep.control},
                   {"disorder_abs", r_abs},
                   {"initial_condition_seed", ic_seed},
                   {"disorder_seed", dis_seed},
                   {"solver", {{"method", "dopri5"},
                               {"rtol", so.ode.rtol},
                               {"atol", so.ode.atol},
                               {"rotating_frame", so.rotating_frame}}},
                   {"t_rel", c.time.t_rel},
                   {"t_end", c.time.t_end},
                   {"dt_out", c.time.dt_out},
                   {"stride", c.output.trajectory_stride}};
      write_json(s.out / (stem + "_trajectory.json"), meta);
      rec.artifacts.push_back(stem + "_trajectory.json");
      job_summary[job] = {{"id", rec.id}, {"mean_abs_alpha", mean_amp}};
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    rec.seconds = seconds_since(t0);
  });
  s.manifest.jobs = records;
  json jobs = json::array();
  for (auto& j : job_summary)
    if (!j.is_null()) jobs.push_back(j);
  return s.finish({{"limit_cycle_radius", mf.limit_cycle_radius()},
                   {"window", window_json(c.time.window)},
                   {"jobs", jobs}});
}

// ---------------------------------------------------------------- spectra

RunResult run_spectrum_sweep(const SimulationConfig& config, const RunOptions& options) {
  const SimulationConfig c = apply_overrides(config, options);
  if (c.sweep.control == "r") return run_disorder_sweep(c, options);
  if (c.sweep.control.empty()) throw ConfigError("spectrum-sweep needs sweep.control");
  Session s("spectrum-sweep", c);
  const MeanFieldParams mf = c.fluctuation_params().mean_field();
  std::vector<Eigen::VectorXd> levels;
  for (double v : c.sweep.values) levels.push_back(eigendecompose(build_lattice(c.lattice_at(v))).eigenvalues);
  const auto res = reconstruct_spectrum_sweep(
      c.sweep.control, c.sweep.values, [&](double v) { return build_lattice(c.lattice_at(v)); }, mf,
      c.sweep.realizations, ensemble_options(c, resolve_jobs(options)));
  write_file(s.out / s.add_artifact("lattice_spectrum.csv"), [&](std::ostream& o) {
    o << "control,index,mu,omega\n";
    for (std::size_t i = 0; i < levels.size(); ++i)
      for (Eigen::Index l = 0; l < levels[i].size(); ++l)
        o << format_double(c.sweep.values[i]) << ',' << (l + 1) << ',' << format_double(levels[i](l))
          << ',' << format_double(mf.omega0 + levels[i](l)) << '\n';
  });
  json summary = write_ensemble(s, res, c, c.sweep.values, levels);
  return s.finish(summary);
}

RunResult run_disorder_sweep(const SimulationConfig& config, const RunOptions& options) {
  const SimulationConfig c = apply_overrides(config, options);
  if (c.sweep.control != "r") throw ConfigError("disorder-sweep needs sweep.control = \"r\"");
  Session s("disorder-sweep", c);
  const MeanFieldParams mf = c.fluctuation_params().mean_field();
  const CouplingMatrix base = build_lattice(c.lattice);
  std::vector<double> r_abs;
  for (double r : c.sweep.values) r_abs.push_back(r * c.lattice_scale());
  const auto clean = eigendecompose(base).eigenvalues;
  const std::vector<Eigen::VectorXd> levels(c.sweep.values.size(), clean);
  const auto res = disorder_sweep(base, mf, r_abs, c.sweep.realizations, ensemble_options(c, resolve_jobs(options)));
  json summary = write_ensemble(s, res, c, c.sweep.values, levels);
  summary["r_abs"] = r_abs;
  return s.finish(summary);
}

// ---------------------------------------------------------------- sync matrices

std::uint64_t sync_ic_seed(std::uint64_t master, int realization) {
  return derive_seed(master, SeedStream::InitialCondition, {0, static_cast<std::uint64_t>(realization)});
}

std::uint64_t sync_disorder_seed(std::uint64_t master, std::size_t cell, int realization) {
  return derive_seed(master, SeedStream::Disorder, {cell, static_cast<std::uint64_t>(realization)});
}

SyncJobResult sync_job(const SimulationConfig& c, double r_abs, std::uint64_t ic_seed,
                       std::uint64_t disorder_seed) {
  const auto t0 = Clock::now();
  const FluctuationParams fp = c.fluctuation_params();
  fp.validate();
  auto coupling = std::make_shared<const CouplingMatrix>(realize_lattice(c.lattice, r_abs, disorder_seed));
  AmplitudeState init{0.0, make_initial_state(c.initial_condition(*coupling, ic_seed), *coupling)};
  SolverOptions so;
  so.record_from = c.time.t_rel;
  const Trajectory tr = integrate(init, fp.mean_field(), coupling, c.time.t_end, c.time.dt_out, so);

  SyncAccumulator acc(coupling->size(), c.time.window, c.time.dt_out);
  CovarianceOptions co;
  co.uncertainty_stride = c.sync.uncertainty_stride;
  co.symplectic_stride = c.sync.symplectic_stride;
  SyncJobResult out;
  out.physicality = evolve_covariance(vacuum_covariance(coupling->size()), tr, fp, *coupling, c.time.t_rel,
                                      c.time.t_end, [&](double t, const Eigen::MatrixXd& cov) { acc.add(t, cov); },
                                      co);
  out.matrix = acc.result();
  out.summary = summarize(out.matrix, c.bulk_sites(), c.sync_targets());
  out.seconds = seconds_since(t0);
  return out;
}

RunResult run_sync_matrix(const SimulationConfig& config, const RunOptions& options) {
  const SimulationConfig c = apply_overrides(config, options);
  Session s("sync-matrix", c);
  const auto& rs = c.sync.disorder_values;
  const int nr = c.sync.disorder_realizations;
  // job 0: clean (config) lattice; then every (r cell, realization)
  const std::size_t n_jobs = 1 + rs.size() * static_cast<std::size_t>(nr);
  std::vector<JobRecord> records(n_jobs);
  std::vector<std::optional<SyncJobResult>> results(n_jobs);

  parallel_for(n_jobs, resolve_jobs(options), [&](std::size_t job) {
    JobRecord& rec = records[job];
    std::size_t cell = 0;
    int r = 0;
    double r_abs = c.disorder * c.lattice_scale();
    if (job == 0) {
      rec.id = "clean";
    } else {
      cell = (job - 1) / static_cast<std::size_t>(nr);
      r = static_cast<int>((job - 1) % static_cast<std::size_t>(nr));
      r_abs = rs[cell] * c.lattice_scale();
      rec.id = "disorder_" + job_id(cell, r);
    }
    try {
      auto res = sync_job(c, r_abs, sync_ic_seed(c.seed, r), sync_disorder_seed(c.seed, job == 0 ? 0 : cell + 1, r));
      rec.seconds = res.seconds;
      if (job == 0) {
        write_file(s.out / "sync_matrix.csv", [&](std::ostream& o) { res.matrix.write_csv(o); });
        rec.artifacts.push_back("sync_matrix.csv");
      }
      results[job] = std::move(res);
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });
  s.manifest.jobs = records;

  json summary = {{"window", window_json(c.time.window)},
                  {"bulk_sites", json::array()},
                  {"gamma_bar", c.gamma_bar}};
  for (int b : c.bulk_sites()) summary["bulk_sites"].push_back(b + 1);
  if (results[0]) {
    summary["clean"] = summary_json(results[0]->summary);
    summary["clean"]["physicality"] = physicality_json(results[0]->physicality);
    summary["clean"]["initial_condition_seed"] = sync_ic_seed(c.seed, 0);
  }

  if (!rs.empty()) {
    // Averages over the realizations that finished.
    const auto targets = c.sync_targets();
    json cells = json::array();
    write_file(s.out / s.add_artifact("sync_disorder.csv"), [&](std::ostream& o) {
      o << "r,r_abs,pair,mean,min,max,realizations\n";
      for (std::size_t ci = 0; ci < rs.size(); ++ci) {
        std::vector<std::vector<double>> vals(targets.size());
        Eigen::MatrixXd avg;
        int done = 0;
        bool physical = true;
        for (int r = 0; r < nr; ++r) {
          const auto& res = results[1 + ci * static_cast<std::size_t>(nr) + static_cast<std::size_t>(r)];
          if (!res) continue;
          ++done;
          physical = physical && res->physicality.ok();
          avg = avg.size() ? Eigen::MatrixXd(avg + res->matrix.values) : res->matrix.values;
          for (std::size_t t = 0; t < targets.size(); ++t)
            vals[t].push_back(res->matrix(targets[t].first, targets[t].second));
        }
        json cell = {{"r", rs[ci]}, {"r_abs", rs[ci] * c.lattice_scale()}, {"realizations", done},
                     {"physical", physical}, {"pair_means", json::array()}};
        for (std::size_t t = 0; t < targets.size(); ++t) {
          if (vals[t].empty()) continue;
          double mean = 0.0;
          for (double v : vals[t]) mean += v;
          mean /= static_cast<double>(vals[t].size());
          const auto [lo, hi] = std::minmax_element(vals[t].begin(), vals[t].end());
          o << format_double(rs[ci]) << ',' << format_double(rs[ci] * c.lattice_scale()) << ','
            << targets[t].first + 1 << '-' << targets[t].second + 1 << ',' << format_double(mean) << ','
            << format_double(*lo) << ',' << format_double(*hi) << ',' << vals[t].size() << '\n';
          cell["pair_means"].push_back(mean);
        }
        if (done > 0) {
          SyncMatrix m{static_cast<int>(avg.rows()), avg / done, c.time.window};
          const std::string name = "sync_matrix_r" + std::to_string(ci) + ".csv";
          write_file(s.out / s.add_artifact(name), [&](std::ostream& os) { m.write_csv(os); });
        }
        cells.push_back(cell);
      }
    });
    summary["disorder"] = {{"targets", pairs_json(targets)}, {"cells", cells}};
  }
  return s.finish(summary);
}

// ---------------------------------------------------------------- exact vs Gaussian

ExactComparison exact_compare(const SimulationConfig& c, unsigned jobs) {
  const auto& e = c.exact;
  ExactParams base{c.meanfield.omega0, c.meanfield.kappa1, c.meanfield.kappa2, c.gamma_bar, 0.0};
  base.validate();
  ExactComparison out;
  out.mean_field_radius = c.fluctuation_params().mean_field().limit_cycle_radius();

  SteadyStateReport rep;
  out.single = steady_state(ExactModel(1, e.single_dim, base), &rep);
  out.single_leakage = rep.leakage;
  out.single_occupation = out.single.rho.diagonal().real().dot(
      Eigen::VectorXd::LinSpaced(e.single_dim, 0.0, e.single_dim - 1.0));
  const int nr = 801;
  out.radial_r = Eigen::VectorXd::LinSpaced(nr, 0.0, 2.0);
  out.radial_w = wigner_radial_profile(out.single, out.radial_r);
  Eigen::Index imax = 0;
  out.radial_w.maxCoeff(&imax);
  out.radial_peak = out.radial_r(imax);

  // One job per (lambda, kind): kind 0 exact, kind >= 1 Gaussian realization.
  const std::size_t nl = e.lambdas.size();
  const std::size_t per = 1 + static_cast<std::size_t>(e.gaussian_realizations);
  out.points.resize(nl);
  std::vector<double> gauss(nl * per, 0.0);
  std::vector<std::string> errors(nl * per);
  parallel_for(nl * per, jobs, [&](std::size_t job) {
    const std::size_t li = job / per, kind = job % per;
    const double lambda = e.lambdas[li];
    try {
      if (kind == 0) {
        ExactParams p = base;
        p.lambda = lambda;
        const ExactModel model(2, e.dim, p);
        SteadyStateReport r;
        const auto rho = steady_state(model, &r);
        auto& pt = out.points[li];
        pt.lambda = lambda;
        pt.s_c_exact = s_c_exact(rho);
        pt.occupation = mean_occupation(rho, model, 0);
        pt.leakage = r.leakage;
        pt.marginal = phase_difference_marginal(rho, e.phase_bins);
        const auto& d = pt.marginal.density;
        const double mean = d.mean();
        pt.marginal_flatness = (d.array() - mean).abs().maxCoeff() / mean;
        auto at = [&](double phi) {
          // bin containing phi (wrapped to [-pi, pi))
          double w = std::remainder(phi, 2.0 * std::numbers::pi);
          if (w >= std::numbers::pi) w -= 2.0 * std::numbers::pi;
          const auto b = static_cast<Eigen::Index>(std::floor((w + std::numbers::pi) / (2.0 * std::numbers::pi) * d.size()));
          return d(std::clamp<Eigen::Index>(b, 0, d.size() - 1));
        };
        pt.p_zero = at(0.0);
        pt.p_pi = at(-std::numbers::pi);
        pt.p_half_pi = 0.5 * (at(0.5 * std::numbers::pi) + at(-0.5 * std::numbers::pi));
      } else {
        SimulationConfig g = c;
        g.lattice = LatticeSpec{};
        g.lattice.kind = LatticeKind::Custom;
        g.lattice.custom_sites = 2;
        if (lambda != 0.0) g.lattice.bonds = {{0, 1, lambda}};
        g.initial = InitialConditionSpec{};
        g.sync.targets = {{0, 1}};
        g.sync.bulk = {0, 1};
        const int r = static_cast<int>(kind - 1);
        gauss[job] = sync_job(g, 0.0, sync_ic_seed(c.seed, r), 0).matrix(0, 1);
      }
    } catch (const std::exception& ex) {
      errors[job] = ex.what();
    }
  });
  for (std::size_t job = 0; job < errors.size(); ++job)
    if (!errors[job].empty()) throw Error("exact-compare lambda=" + format_double(e.lambdas[job / per]) + ": " + errors[job]);
  for (std::size_t li = 0; li < nl; ++li) {
    auto& pt = out.points[li];
    const auto first = gauss.begin() + static_cast<std::ptrdiff_t>(li * per + 1);
    const auto last = gauss.begin() + static_cast<std::ptrdiff_t>((li + 1) * per);
    double sum = 0.0;
    for (auto it = first; it != last; ++it) sum += *it;
    pt.s_c_effective = sum / static_cast<double>(per - 1);
    pt.s_c_effective_min = *std::min_element(first, last);
    pt.s_c_effective_max = *std::max_element(first, last);
  }
  return out;
}

RunResult run_exact_compare(const SimulationConfig& config, const RunOptions& options) {
  const SimulationConfig c = apply_overrides(config, options);
  Session s("exact-compare", c);
  JobRecord rec{"exact_compare", true, "", -1.0, {}};
  json summary;
  const auto t0 = Clock::now();
  try {
    const auto cmp = exact_compare(c, resolve_jobs(options));
    write_file(s.out / s.add_artifact("exact_compare.csv"), [&](std::ostream& o) {
      o << "lambda,s_c_exact,s_c_effective,s_c_effective_min,s_c_effective_max,occupation,leakage,"
           "marginal_flatness,p_zero,p_pi,p_half_pi\n";
      for (const auto& p : cmp.points)
        o << format_double(p.lambda) << ',' << format_double(p.s_c_exact) << ','
          << format_double(p.s_c_effective) << ',' << format_double(p.s_c_effective_min) << ','
          << format_double(p.s_c_effective_max) << ',' << format_double(p.occupation) << ','
          << format_double(p.leakage) << ',' << format_double(p.marginal_flatness) << ','
          << format_double(p.p_zero) << ',' << format_double(p.p_pi) << ',' << format_double(p.p_half_pi) << '\n';
    });
    write_file(s.out / s.add_artifact("phase_marginal.csv"), [&](std::ostream& o) {
      o << "lambda,phi,density\n";
      for (const auto& p : cmp.points)
        for (Eigen::Index i = 0; i < p.marginal.phi.size(); ++i)
          o << format_double(p.lambda) << ',' << format_double(p.marginal.phi(i)) << ','
            << format_double(p.marginal.density(i)) << '\n';
    });
    const auto grid = QuadratureGrid::square(c.exact.wigner_half_width, c.exact.wigner_points);
    const Eigen::MatrixXd w = wigner_single(cmp.single, grid);
    write_file(s.out / s.add_artifact("wigner_single.csv"), [&](std::ostream& o) { write_field_csv(o, grid, w); });
    write_file(s.out / s.add_artifact("wigner_radial.csv"), [&](std::ostream& o) {
      o << "r,W\n";
      for (Eigen::Index i = 0; i < cmp.radial_r.size(); ++i)
        o << format_double(cmp.radial_r(i)) << ',' << format_double(cmp.radial_w(i)) << '\n';
    });
    json pts = json::array();
    for (const auto& p : cmp.points)
      pts.push_back({{"lambda", p.lambda},
                     {"s_c_exact", p.s_c_exact},
                     {"s_c_effective", p.s_c_effective},
                     {"marginal_flatness", p.marginal_flatness},
                     {"leakage", p.leakage}});
    summary = {{"single", {{"dim", c.exact.single_dim},
                           {"occupation", cmp.single_occupation},
                           {"leakage", cmp.single_leakage},
                           {"radial_peak", cmp.radial_peak},
                           {"mean_field_radius", cmp.mean_field_radius}}},
               {"two_mode_dim", c.exact.dim},
               {"gaussian_realizations", c.exact.gaussian_realizations},
               {"points", pts}};
    rec.artifacts = s.manifest.artifacts;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  rec.seconds = seconds_since(t0);
  s.manifest.jobs.push_back(rec);
  return s.finish(summary);
}

// ---------------------------------------------------------------- validation

json ValidationReport::to_json() const {
  return {{"valid", valid},
          {"errors", errors},
          {"warnings", warnings},
          {"job_counts", job_counts},
          {"peak_memory_bytes", peak_memory_bytes}};
}

ValidationReport validate_config(const json& j, const RunOptions& options) {
  ValidationReport rep;
  SimulationConfig c;
  try {
    c = apply_overrides(parse_config(j), options);
  } catch (const Error& e) {
    rep.errors.push_back(e.what());
    return rep;
  }
  rep.valid = true;
  rep.warnings = config_warnings(c);
  const auto nc = c.sweep.control.empty() ? std::size_t{1} : c.sweep.values.size();
  const auto nr = static_cast<std::size_t>(c.sweep.realizations);
  rep.job_counts["meanfield"] = nc * nr;
  rep.job_counts["spectrum-sweep"] = c.sweep.control.empty() ? 0 : c.sweep.values.size() * nr;
  rep.job_counts["disorder-sweep"] = c.sweep.control == "r" ? c.sweep.values.size() * nr : 0;
  rep.job_counts["sync-matrix"] = 1 + c.sync.disorder_values.size() * static_cast<std::size_t>(c.sync.disorder_realizations);
  rep.job_counts["exact-compare"] = c.exact.lambdas.size() * (1 + static_cast<std::size_t>(c.exact.gaussian_realizations));

  // Per concurrent job: recorded trajectory plus covariance ODE stages
  // (~16 copies) or the two-mode density matrix and its sparse LU.
  int n = 0;
  try {
    n = build_lattice(c.lattice).size();
  } catch (const Error& e) {
    rep.valid = false;
    rep.errors.push_back(e.what());
    return rep;
  }
  const double samples = (c.time.t_end - c.time.t_rel) / c.time.dt_out + 1.0;
  const double traj = samples * n * 16.0;
  const double cov = 16.0 * 4.0 * n * n * 8.0;
  const double d2 = static_cast<double>(c.exact.dim) * c.exact.dim;
  const double exact = 20.0 * d2 * d2 * 16.0;
  const unsigned jobs = resolve_jobs(options);
  rep.peak_memory_bytes = static_cast<std::size_t>(jobs * std::max(traj + cov, exact));
  return rep;
}

ValidationReport validate_config(const fs::path& path, const RunOptions& options) {
  std::ifstream in(path);
  if (!in) {
    ValidationReport rep;
    rep.errors.push_back("cannot open config " + path.string());
    return rep;
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    ValidationReport rep;
    rep.errors.push_back(path.string() + ": malformed JSON: " + e.what());
    return rep;
  }
  return validate_config(j, options);
}

}  // namespace topsync
