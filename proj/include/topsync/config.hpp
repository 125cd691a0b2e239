#pragma once

// Strict JSON run configuration. Every object rejects keys it does not know;
// site labels and eigenstate indices are 1-based in the file and 0-based
// once parsed.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "topsync/fluctuations.hpp"
#include "topsync/lattice.hpp"
#include "topsync/meanfield.hpp"
#include "topsync/measures.hpp"

namespace topsync {

enum class InitKind { Random, Eigenstate, Explicit };

struct InitialConditionSpec {
  InitKind kind = InitKind::Random;
  int index = -1;           // 0-based eigenvalue index; -1 = use `near`
  double near = 0.0;        // pick the eigenvalue closest to near * lattice scale
  double scale = 1.0;
  std::vector<std::complex<double>> alpha;
};

struct TimeGrid {
  double t_rel = 2e4;
  double t_end = 2.4e4;
  double dt_out = 0.1;
  TimeWindow window{2e4, 2.4e4};
};

/// Control axis. "dimerization" (SSH, units of lambda0), "ratio" (Kagome,
/// lambda_up / lambda_down) or "r" (disorder, units of the lattice scale).
struct SweepSpec {
  std::string control;
  std::vector<double> values;
  int realizations = 1;
};

struct SpectrumSpec {
  std::vector<int> sites;        // empty = all
  std::vector<double> targets;   // absolute frequencies; empty = {omega0}
  bool hann = true;
  bool real_part = false;
  double band_lo = 0.0;
  double band_hi = 2.0;
  double threshold = 5.0;
};

struct SyncSpec {
  std::vector<int> bulk;                      // empty = lattice default
  std::vector<std::pair<int, int>> targets;   // empty = edges / corners
  std::vector<double> disorder_values;        // units of the lattice scale
  int disorder_realizations = 20;
  std::size_t uncertainty_stride = 1;
  std::size_t symplectic_stride = 200;
};

struct ExactSpec {
  int dim = 15;
  int single_dim = 20;
  std::vector<double> lambdas{0.0, 0.1, 0.25, 0.5};
  int gaussian_realizations = 4;
  double wigner_half_width = 2.5;
  int wigner_points = 101;
  int phase_bins = 128;
};

struct OutputSpec {
  std::string dir = "out";
  std::size_t trajectory_stride = 10;
  bool trajectories = true;
};

struct SimulationConfig {
  std::string name;
  LatticeSpec lattice;
  MeanFieldParams meanfield;
  double gamma_bar = 0.0;
  InitialConditionSpec initial;
  double disorder = 0.0;  // units of the lattice scale
  TimeGrid time;
  SweepSpec sweep;
  SpectrumSpec spectrum;
  SyncSpec sync;
  ExactSpec exact;
  OutputSpec output;
  std::uint64_t seed = 0;

  /// lambda0 (SSH), lambda_down (Kagome), 1 (custom).
  double lattice_scale() const;
  FluctuationParams fluctuation_params() const;
  /// Lattice with one control value applied.
  LatticeSpec lattice_at(double control) const;
  /// Default edge/corner pairs and bulk sites of the configured lattice.
  std::vector<std::pair<int, int>> sync_targets() const;
  std::vector<int> bulk_sites() const;
  InitialCondition initial_condition(const CouplingMatrix& coupling, std::uint64_t seed) const;
};

/// Throws ConfigError (malformed or unknown keys) or InvalidSpec (values).
SimulationConfig parse_config(const nlohmann::json& j);
SimulationConfig load_config(const std::filesystem::path& path);
/// Canonical form; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const SimulationConfig& c);

/// Every warning of the physical parameters.
std::vector<std::string> config_warnings(const SimulationConfig& c);

}  // namespace topsync
