#pragma once

// Experiment orchestration: one entry point per CLI subcommand. Jobs are
// pure functions of (config, derived seeds); each writes its own files and
// a single-threaded finalizer writes the summary and the manifest.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "topsync/config.hpp"
#include "topsync/exactquantum.hpp"
#include "topsync/fluctuations.hpp"
#include "topsync/measures.hpp"

namespace topsync {

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> realizations;
  unsigned jobs = 0;  // 0 = available cores
};

/// Config with the command-line overrides applied.
SimulationConfig apply_overrides(SimulationConfig config, const RunOptions& options);

struct JobRecord {
  std::string id;
  bool ok = true;
  std::string error;
  double seconds = -1.0;  // < 0 when the job ran inside a batched call
  std::vector<std::string> artifacts;
};

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::string software;
  std::string started, finished;
  double seconds = 0.0;
  nlohmann::json config;  // resolved config, enough to rerun
  std::vector<JobRecord> jobs;
  std::vector<std::string> artifacts;  // merged outputs of the finalizer

  std::size_t failed() const;
  nlohmann::json to_json() const;
};

struct RunResult {
  std::filesystem::path out_dir;
  RunManifest manifest;
  nlohmann::json summary;
  bool partial_failure() const { return manifest.failed() > 0; }
};

RunResult run_meanfield(const SimulationConfig& config, const RunOptions& options = {});
RunResult run_spectrum_sweep(const SimulationConfig& config, const RunOptions& options = {});
RunResult run_disorder_sweep(const SimulationConfig& config, const RunOptions& options = {});
RunResult run_sync_matrix(const SimulationConfig& config, const RunOptions& options = {});
RunResult run_exact_compare(const SimulationConfig& config, const RunOptions& options = {});

struct ValidationReport {
  bool valid = false;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  std::map<std::string, std::size_t> job_counts;  // per subcommand
  std::size_t peak_memory_bytes = 0;              // rough, for the largest subcommand
  nlohmann::json to_json() const;
};

ValidationReport validate_config(const std::filesystem::path& path, const RunOptions& options = {});
ValidationReport validate_config(const nlohmann::json& j, const RunOptions& options = {});

// ---- single jobs, shared by the runners and usable directly ----

/// Seeds of the sync-matrix jobs: realization k uses the same initial
/// condition in every disorder cell, so cell r = 0, k = 0 is the clean run.
std::uint64_t sync_ic_seed(std::uint64_t master, int realization);
std::uint64_t sync_disorder_seed(std::uint64_t master, std::size_t cell, int realization);

struct SyncJobResult {
  SyncMatrix matrix;
  SyncSummary summary;
  PhysicalityReport physicality;
  double seconds = 0.0;
};

/// Mean field to t_end, then the covariance from C = I/2 at t_rel; r_abs is
/// the disorder strength in omega0 units.
SyncJobResult sync_job(const SimulationConfig& config, double r_abs, std::uint64_t ic_seed,
                       std::uint64_t disorder_seed);

struct ExactComparePoint {
  double lambda = 0.0;
  double s_c_exact = 0.0;
  double s_c_effective = 0.0;  // mean over Gaussian realizations
  double s_c_effective_min = 0.0, s_c_effective_max = 0.0;
  double occupation = 0.0;     // <n_1> of the exact state
  double leakage = 0.0;
  double marginal_flatness = 0.0;  // max |P - mean| / mean
  double p_zero = 0.0, p_pi = 0.0, p_half_pi = 0.0;
  PhaseMarginal marginal;
};

struct ExactComparison {
  FockDensityMatrix single;
  double single_occupation = 0.0;
  double single_leakage = 0.0;
  double mean_field_radius = 0.0;
  Eigen::VectorXd radial_r, radial_w;
  double radial_peak = 0.0;  // argmax of the radial Wigner profile
  std::vector<ExactComparePoint> points;
};

/// Exact steady states (one and two modes) against the Gaussian model.
ExactComparison exact_compare(const SimulationConfig& config, unsigned jobs = 1);

}  // namespace topsync
