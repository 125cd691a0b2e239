#include "topsync/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <ostream>

#include <fftw3.h>

#include "topsync/errors.hpp"
#include "topsync/parallel.hpp"
#include "topsync/random.hpp"

namespace topsync {

namespace {

// FFTW's planner is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_complex(n);
    out_ = fftw_alloc_complex(n);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  cplx* in() { return reinterpret_cast<cplx*>(in_); }
  const cplx* out() const { return reinterpret_cast<const cplx*>(out_); }
  void run() { fftw_execute(plan_); }

 private:
  std::size_t n_;
  fftw_complex* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

std::vector<double> window_weights(std::size_t m, bool hann) {
  std::vector<double> w(m, 1.0);
  if (hann && m > 1) {
    for (std::size_t i = 0; i < m; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(m - 1));
  }
  return w;
}

// Bin order after fftshift-style reordering restricted to the band.
struct BinMap {
  std::vector<std::size_t> source;  // FFT bin index per output entry
  Eigen::VectorXd omega;
};

BinMap band_bins(std::size_t m, double dt, const SpectrumOptions& opt) {
  const double dw = 2.0 * std::numbers::pi / (static_cast<double>(m) * dt);
  const auto half = static_cast<std::ptrdiff_t>(m / 2);
  const std::ptrdiff_t k_lo = -static_cast<std::ptrdiff_t>((m - 1) / 2);
  std::vector<std::size_t> src;
  std::vector<double> om;
  const bool crop = opt.band_hi > opt.band_lo;
  for (std::ptrdiff_t k = k_lo; k <= half; ++k) {
    const double w = static_cast<double>(k) * dw;
    if (crop && (w < opt.band_lo - 1e-12 || w > opt.band_hi + 1e-12)) continue;
    src.push_back(static_cast<std::size_t>(k < 0 ? k + static_cast<std::ptrdiff_t>(m) : k));
    om.push_back(w);
  }
  BinMap b;
  b.source = std::move(src);
  b.omega = Eigen::Map<Eigen::VectorXd>(om.data(), static_cast<Eigen::Index>(om.size()));
  return b;
}

double refine(const Spectrum& s, std::size_t i) {
  if (i == 0 || i + 1 >= static_cast<std::size_t>(s.amplitude.size())) return s.omega(static_cast<Eigen::Index>(i));
  const auto ii = static_cast<Eigen::Index>(i);
  const double a = std::log(std::max(s.amplitude(ii - 1), 1e-300));
  const double b = std::log(std::max(s.amplitude(ii), 1e-300));
  const double c = std::log(std::max(s.amplitude(ii + 1), 1e-300));
  const double den = a - 2.0 * b + c;
  if (!(den < 0.0)) return s.omega(ii);
  const double delta = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
  return s.omega(ii) + delta * (s.omega(ii + 1) - s.omega(ii));
}

}  // namespace

Spectrum dft_signal(const Eigen::VectorXcd& signal, double dt, const SpectrumOptions& options) {
  const auto m = static_cast<std::size_t>(signal.size());
  if (m < 2) throw InvalidInput("dft: need at least two samples");
  if (!(dt > 0.0)) throw InvalidInput("dft: non-uniform or invalid sampling interval");
  const auto w = window_weights(m, options.hann);
  double wsum = 0.0;
  for (double x : w) wsum += x;
  Fft fft(m);
  for (std::size_t i = 0; i < m; ++i) {
    const cplx v = options.real_part ? cplx(signal(static_cast<Eigen::Index>(i)).real(), 0.0)
                                     : signal(static_cast<Eigen::Index>(i));
    fft.in()[i] = w[i] * v;
  }
  fft.run();
  const BinMap bins = band_bins(m, dt, options);
  Spectrum s;
  s.omega = bins.omega;
  s.amplitude.resize(bins.omega.size());
  for (std::size_t i = 0; i < bins.source.size(); ++i)
    s.amplitude(static_cast<Eigen::Index>(i)) = std::abs(fft.out()[bins.source[i]]) / wsum;
  s.resolution = 2.0 * std::numbers::pi / (static_cast<double>(m) * dt);
  s.window_samples = m;
  return s;
}

Spectrum dft_spectrum(const Trajectory& trajectory, const std::vector<int>& sites,
                      const TimeWindow& window, const SpectrumOptions& options) {
  const auto [first, last] = trajectory.window_indices(window.t_i, window.t_f);
  const std::size_t m = last - first + 1;
  if (m < 2) throw WindowError("spectrum window holds fewer than two samples");
  std::vector<int> use = sites;
  if (use.empty()) {
    for (int j = 0; j < trajectory.sites(); ++j) use.push_back(j);
  }
  for (int j : use)
    if (j < 0 || j >= trajectory.sites()) throw InvalidInput("dft_spectrum: site out of range");

  const auto w = window_weights(m, options.hann);
  double wsum = 0.0;
  for (double x : w) wsum += x;
  const BinMap bins = band_bins(m, trajectory.dt(), options);
  Spectrum s;
  s.omega = bins.omega;
  s.amplitude = Eigen::VectorXd::Zero(bins.omega.size());
  s.resolution = 2.0 * std::numbers::pi / (static_cast<double>(m) * trajectory.dt());
  s.window_samples = m;

  Fft fft(m);
  for (int j : use) {
    for (std::size_t i = 0; i < m; ++i) {
      cplx v = trajectory.alpha(first + i, j);
      if (options.real_part) v = cplx(v.real(), 0.0);
      fft.in()[i] = w[i] * v;
    }
    fft.run();
    for (std::size_t i = 0; i < bins.source.size(); ++i)
      s.amplitude(static_cast<Eigen::Index>(i)) += std::abs(fft.out()[bins.source[i]]) / wsum;
  }
  s.amplitude /= static_cast<double>(use.size());
  return s;
}

PeakReport detect_peak(const Spectrum& spectrum, double target, double threshold) {
  PeakReport r;
  r.target = target;
  const auto n = spectrum.amplitude.size();
  if (n == 0) return r;
  std::vector<double> all(spectrum.amplitude.data(), spectrum.amplitude.data() + n);
  r.median_level = median(all);
  const double reach = 2.0 * spectrum.resolution * (1.0 + 1e-9);
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(spectrum.omega(i) - target) > reach) continue;
    if (best < 0 || spectrum.amplitude(i) > spectrum.amplitude(best)) best = i;
  }
  if (best < 0) return r;
  r.amplitude = spectrum.amplitude(best);
  r.frequency = refine(spectrum, static_cast<std::size_t>(best));
  r.bin_offset = (spectrum.omega(best) - target) / spectrum.resolution;
  r.detected = r.amplitude > threshold * r.median_level;
  return r;
}

std::vector<Peak> find_peaks(const Spectrum& spectrum, double threshold, double rel_floor) {
  std::vector<Peak> peaks;
  const auto n = spectrum.amplitude.size();
  if (n < 3) return peaks;
  std::vector<double> all(spectrum.amplitude.data(), spectrum.amplitude.data() + n);
  const double level = std::max(threshold * median(all), rel_floor * spectrum.amplitude.maxCoeff());
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double a = spectrum.amplitude(i);
    if (a <= level || a < spectrum.amplitude(i - 1) || a <= spectrum.amplitude(i + 1)) continue;
    peaks.push_back({refine(spectrum, static_cast<std::size_t>(i)), a, static_cast<std::size_t>(i)});
  }
  return peaks;
}

double dominant_frequency(const Spectrum& spectrum) {
  if (spectrum.amplitude.size() == 0) throw InvalidInput("empty spectrum");
  Eigen::Index i = 0;
  spectrum.amplitude.maxCoeff(&i);
  return refine(spectrum, static_cast<std::size_t>(i));
}

Spectrum SpectrumMap::row(std::size_t i) const {
  Spectrum s;
  s.omega = omega;
  s.amplitude = amplitude.row(static_cast<Eigen::Index>(i)).transpose();
  s.resolution = resolution;
  return s;
}

void SpectrumMap::write_csv(std::ostream& out) const {
  out << (control_name.empty() ? "control" : control_name) << ",omega,amplitude\n";
  const auto old = out.precision(17);
  for (std::size_t c = 0; c < control.size(); ++c)
    for (Eigen::Index k = 0; k < omega.size(); ++k)
      out << control[c] << ',' << omega(k) << ',' << amplitude(static_cast<Eigen::Index>(c), k) << '\n';
  out.precision(old);
}

namespace {

// One job = (control cell, realization); coupling built by `make`.
EnsembleResult run_ensemble(const std::string& control_name, const std::vector<double>& controls,
                            int n_realizations, const MeanFieldParams& params,
                            const EnsembleOptions& opt,
                            const std::function<CouplingMatrix(std::size_t, int, std::uint64_t)>& make) {
  if (n_realizations < 1) throw InvalidInput("n_realizations must be >= 1");
  params.validate();
  EnsembleResult res;
  const std::size_t nc = controls.size();
  const auto nr = static_cast<std::size_t>(n_realizations);
  res.map.control_name = control_name;
  res.map.control = controls;
  res.map.realizations.assign(nc, 0);
  res.peaks.assign(nc, std::vector<std::vector<PeakReport>>(nr));
  res.ic_seeds.assign(nc, std::vector<std::uint64_t>(nr));
  res.disorder_seeds.assign(nc, std::vector<std::uint64_t>(nr));
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t r = 0; r < nr; ++r) {
      res.ic_seeds[c][r] = derive_seed(opt.master_seed, SeedStream::InitialCondition, {c, r});
      res.disorder_seeds[c][r] = derive_seed(opt.master_seed, SeedStream::Disorder, {c, r});
    }
  }
  std::vector<Spectrum> spectra(nc * nr);
  std::vector<std::string> errors(nc * nr);
  parallel_for(nc * nr, opt.jobs, [&](std::size_t job) {
    const std::size_t c = job / nr, r = job % nr;
    try {
      auto coupling = std::make_shared<const CouplingMatrix>(
          make(c, static_cast<int>(r), res.disorder_seeds[c][r]));
      AmplitudeState init = random_initial(coupling->size(), res.ic_seeds[c][r]);
      SolverOptions so = opt.solver;
      so.record_from = std::min(opt.t_rel, opt.window.t_i);
      const Trajectory traj = integrate(init, params, coupling, opt.window.t_f, opt.dt_out, so);
      spectra[job] = dft_spectrum(traj, opt.sites, opt.window, opt.spectrum);
      for (double target : opt.peak_targets)
        res.peaks[c][r].push_back(detect_peak(spectra[job], target, opt.peak_threshold));
    } catch (const std::exception& e) {
      errors[job] = e.what();
      if (errors[job].empty()) errors[job] = "unknown failure";
    }
  });
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t r = 0; r < nr; ++r) {
      const std::size_t job = c * nr + r;
      if (!errors[job].empty()) {
        res.failures.push_back({c, static_cast<int>(r), errors[job]});
        continue;
      }
      const Spectrum& s = spectra[job];
      if (res.map.omega.size() == 0) {
        res.map.omega = s.omega;
        res.map.resolution = s.resolution;
        res.map.amplitude = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nc), s.omega.size());
      }
      res.map.amplitude.row(static_cast<Eigen::Index>(c)) += s.amplitude.transpose();
      ++res.map.realizations[c];
    }
  }
  for (std::size_t c = 0; c < nc; ++c)
    if (res.map.realizations[c] > 0)
      res.map.amplitude.row(static_cast<Eigen::Index>(c)) /= res.map.realizations[c];
  return res;
}

}  // namespace

EnsembleResult reconstruct_spectrum_sweep(const std::string& control_name,
                                          const std::vector<double>& controls,
                                          const std::function<CouplingMatrix(double)>& family,
                                          const MeanFieldParams& params, int n_realizations,
                                          const EnsembleOptions& options) {
  return run_ensemble(control_name, controls, n_realizations, params, options,
                      [&](std::size_t c, int, std::uint64_t) { return family(controls[c]); });
}

EnsembleResult disorder_sweep(const CouplingMatrix& base, const MeanFieldParams& params,
                              const std::vector<double>& r_values, int n_realizations,
                              const EnsembleOptions& options) {
  for (double r : r_values)
    if (!(r >= 0.0)) throw InvalidSpec("disorder strength must be >= 0");
  return run_ensemble("r", r_values, n_realizations, params, options,
                      [&](std::size_t c, int, std::uint64_t seed) {
                        return apply_disorder(base, DisorderSpec{r_values[c], seed});
                      });
}

}  // namespace topsync
