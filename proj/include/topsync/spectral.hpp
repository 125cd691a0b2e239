#pragma once

// Windowed DFT spectra of mean-field trajectories, peak detection, and
// ensemble sweeps over a lattice family or over disorder strength.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "topsync/lattice.hpp"
#include "topsync/measures.hpp"
#include "topsync/meanfield.hpp"

namespace topsync {

struct SpectrumOptions {
  bool hann = true;
  /// Transform A_j = Re alpha_j instead of alpha_j (two-sided, sign of mu lost).
  bool real_part = false;
  /// Kept frequency band (absolute units); band_hi <= band_lo keeps all bins.
  double band_lo = 0.0;
  double band_hi = 2.0;
};

/// Magnitude spectrum: exp(-i w t) shows up at +w. Amplitudes are |X_k|/sum(w),
/// so a unit tone has amplitude 1 at its bin.
struct Spectrum {
  Eigen::VectorXd omega;      // ascending
  Eigen::VectorXd amplitude;  // same length, >= 0
  double resolution = 0.0;    // 2 pi / (M dt)
  std::size_t window_samples = 0;
};

/// Averages the magnitude spectra of the selected sites (empty = all).
Spectrum dft_spectrum(const Trajectory& trajectory, const std::vector<int>& sites,
                      const TimeWindow& window, const SpectrumOptions& options = {});

/// Same transform applied to a raw uniformly sampled signal.
Spectrum dft_signal(const Eigen::VectorXcd& signal, double dt, const SpectrumOptions& options = {});

struct PeakReport {
  double target = 0.0;
  bool detected = false;
  double amplitude = 0.0;     // largest bin within +-2 resolution of the target
  double frequency = 0.0;     // refined (log-parabolic) peak position
  double bin_offset = 0.0;    // (peak bin frequency - target) / resolution
  double median_level = 0.0;
};

/// Searches +-2 resolution bins around the target; detected iff the largest
/// amplitude there exceeds threshold x median(amplitude).
PeakReport detect_peak(const Spectrum& spectrum, double target, double threshold = 5.0);

struct Peak {
  double frequency = 0.0;  // refined
  double amplitude = 0.0;
  std::size_t bin = 0;
};

/// Local maxima above threshold x median and above rel_floor x the global
/// maximum. The relative floor rejects window sidelobes and weak mixing
/// products.
std::vector<Peak> find_peaks(const Spectrum& spectrum, double threshold = 5.0,
                             double rel_floor = 0.05);

/// Frequency of the largest bin (refined).
double dominant_frequency(const Spectrum& spectrum);

/// Spectra stacked along a control axis; every row shares the frequency grid.
struct SpectrumMap {
  std::string control_name;
  std::vector<double> control;
  Eigen::VectorXd omega;
  Eigen::MatrixXd amplitude;  // control x omega
  std::vector<int> realizations;
  double resolution = 0.0;

  Spectrum row(std::size_t i) const;
  /// Long format: control, omega, amplitude.
  void write_csv(std::ostream& out) const;
};

struct EnsembleOptions {
  double t_rel = 2e4;
  double dt_out = 0.1;
  TimeWindow window{2e4, 2.4e4};
  std::vector<int> sites;  // spectrum sites, empty = all
  SpectrumOptions spectrum;
  SolverOptions solver;
  unsigned jobs = 1;
  std::uint64_t master_seed = 0;
  /// Targets checked per realization (e.g. omega0 for edge modes).
  std::vector<double> peak_targets;
  double peak_threshold = 5.0;
};

struct CellFailure {
  std::size_t control_index = 0;
  int realization = 0;
  std::string message;
};

struct EnsembleResult {
  SpectrumMap map;
  /// peaks[c][r][t]: target t in realization r of control cell c.
  std::vector<std::vector<std::vector<PeakReport>>> peaks;
  std::vector<CellFailure> failures;
  std::vector<std::vector<std::uint64_t>> ic_seeds;
  std::vector<std::vector<std::uint64_t>> disorder_seeds;
};

/// For each control value builds family(control), integrates n_realizations
/// random initial conditions and averages the magnitude spectra.
EnsembleResult reconstruct_spectrum_sweep(const std::string& control_name,
                                          const std::vector<double>& controls,
                                          const std::function<CouplingMatrix(double)>& family,
                                          const MeanFieldParams& params, int n_realizations,
                                          const EnsembleOptions& options);

/// Disorder strengths r (absolute units) applied to base; fresh disorder and
/// initial-condition seeds per realization.
EnsembleResult disorder_sweep(const CouplingMatrix& base, const MeanFieldParams& params,
                              const std::vector<double>& r_values, int n_realizations,
                              const EnsembleOptions& options);

}  // namespace topsync
