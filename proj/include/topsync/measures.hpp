#pragma once

// Complete-synchronization measure S_c from quadrature covariances, its
// time average and pairwise matrices, and the classical phase-locking test.

#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "topsync/fluctuations.hpp"
#include "topsync/meanfield.hpp"

namespace topsync {

struct TimeWindow {
  double t_i = 2e4;
  double t_f = 2.4e4;
};

/// [Var(x_j - x_k) + Var(p_j - p_k)]^-1 from displaced-frame covariances.
double s_c_instantaneous(const Eigen::MatrixXd& c, int j, int k);

/// Trapezoidal time average over the snapshots inside the window; snapshots
/// must be uniformly spaced.
double s_c_time_average(const std::vector<CovarianceSnapshot>& snapshots, int j, int k,
                        const TimeWindow& window);

/// Pairwise <S_c>. The diagonal is undefined and holds NaN.
struct SyncMatrix {
  int n = 0;
  Eigen::MatrixXd values;
  TimeWindow window;

  double operator()(int j, int k) const { return values(j, k); }
  /// Dense CSV with a header row of 1-based labels; the diagonal is written empty.
  void write_csv(std::ostream& out) const;
};

/// Streaming trapezoidal accumulator of all pairwise S_c values, so the
/// covariance sequence never has to be stored.
class SyncAccumulator {
 public:
  SyncAccumulator(int n_sites, TimeWindow window, double dt);
  void add(double t, const Eigen::MatrixXd& c);
  /// Throws WindowError if the samples did not cover the window.
  SyncMatrix result() const;

 private:
  int n_;
  TimeWindow window_;
  double dt_;
  Eigen::MatrixXd sum_;
  Eigen::MatrixXd last_;
  double first_t_ = 0.0, last_t_ = 0.0;
  std::size_t count_ = 0;
};

SyncMatrix sync_matrix(const std::vector<CovarianceSnapshot>& snapshots, const TimeWindow& window);

struct SyncSummary {
  std::pair<int, int> argmax{-1, -1};  // 0-based, first < second
  double max_value = 0.0;
  double bulk_median = 0.0;
  std::vector<std::pair<int, int>> target_pairs;
  std::vector<double> target_values;
  std::vector<double> target_ratios;  // value / bulk median
  double min_target_ratio = 0.0;
  /// Largest ratio over all pairs not made only of bulk sites.
  double max_ratio = 0.0;
};

/// Median over bulk-bulk pairs and ratios of the target (edge/corner) pairs.
SyncSummary summarize(const SyncMatrix& m, const std::vector<int>& bulk_sites,
                      const std::vector<std::pair<int, int>>& target_pairs);

struct PhaseLockReport {
  int j = 0, k = 0;
  double drift = 0.0;   // d(phi_j - phi_k)/dt, units omega0
  double offset = 0.0;  // mean phase difference over the window, wrapped to (-pi, pi]
  double residual_rms = 0.0;
  bool locked = false;
};

/// Least-squares slope of the unwrapped phase difference. amplitude_floor < 0
/// selects 1e-3 times the limit-cycle radius; throws PhaseUndefined below it.
PhaseLockReport phase_lock_rate(const Trajectory& trajectory, int j, int k,
                                const TimeWindow& window, double tol = 1e-4,
                                double amplitude_floor = -1.0);

double median(std::vector<double> v);

}  // namespace topsync
