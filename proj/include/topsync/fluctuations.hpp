#pragma once

// Gaussian quantum fluctuations about a mean-field trajectory. The
// covariance matrix of the quadratures X_{2j} = (a_j + a_j^+)/sqrt2,
// X_{2j+1} = -i(a_j - a_j^+)/sqrt2 (0-based rows) obeys
//   dC/dt = B(t) C + C B(t)^T + D(t)
// with B, D rebuilt from alpha(t).

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "topsync/lattice.hpp"
#include "topsync/meanfield.hpp"
#include "topsync/ode.hpp"

namespace topsync {

struct FluctuationParams {
  double omega0 = 1.0;
  double kappa1 = 5e-3;
  double kappa2 = 1e-2;
  double gamma_bar = 0.0;  // linear one-phonon loss

  void validate() const;
  std::vector<std::string> warnings() const;
  /// Mean-field parameters with the effective gain kappa1 - gamma_bar.
  MeanFieldParams mean_field() const;
};

inline int x_row(int site) { return 2 * site; }
inline int p_row(int site) { return 2 * site + 1; }

/// Symplectic form of n modes in (x1, p1, x2, p2, ...) ordering.
Eigen::MatrixXd symplectic_form(int n_modes);

Eigen::MatrixXd build_drift(const Eigen::VectorXcd& alpha, const FluctuationParams& params,
                            const CouplingMatrix& coupling);
Eigen::MatrixXd build_diffusion(const Eigen::VectorXcd& alpha, const FluctuationParams& params);

/// Symplectic eigenvalues (ascending, one per mode). Requires C > 0.
Eigen::VectorXd symplectic_eigenvalues(const Eigen::MatrixXd& c);

/// True iff C + i*s*Omega is positive definite, i.e. every symplectic
/// eigenvalue exceeds s.
bool satisfies_uncertainty(const Eigen::MatrixXd& c, double s);

struct CovarianceSnapshot {
  double t = 0.0;
  Eigen::MatrixXd c;
};

struct PhysicalityReport {
  std::size_t samples = 0;
  std::size_t uncertainty_checks = 0;
  std::size_t symplectic_checks = 0;
  double max_asymmetry = 0.0;
  double min_symplectic = std::numeric_limits<double>::infinity();
  double min_symplectic_time = 0.0;
  bool initial_is_vacuum = false;  // C(t_begin) == I/2 exactly
  std::vector<double> violation_times;
  bool ok() const { return violation_times.empty(); }
};

struct CovarianceOptions {
  OdeOptions ode;
  double physicality_tol = 1e-6;
  /// Uncertainty-relation check every `uncertainty_stride` output samples.
  std::size_t uncertainty_stride = 1;
  /// Exact symplectic spectrum every `symplectic_stride` output samples
  /// (the first and last samples are always included).
  std::size_t symplectic_stride = 200;
  /// Throw PhysicalityError on the first violation instead of recording it.
  bool strict = false;
};

using CovarianceObserver = std::function<void(double t, const Eigen::MatrixXd& c)>;

/// Cubic Hermite interpolation of alpha(t) on a trajectory's grid, with
/// nodal slopes from the mean-field drift.
class MeanFieldInterpolator {
 public:
  explicit MeanFieldInterpolator(const Trajectory& trajectory);
  void evaluate(double t, Eigen::VectorXcd& out);

 private:
  const Trajectory& traj_;
  std::ptrdiff_t cached_ = -1;
  Eigen::VectorXcd f0_, f1_;
};

/// Integrates the covariance from C0 at t_begin to t_end, calling `observer`
/// on every trajectory grid point in [t_begin, t_end]. The trajectory must
/// cover the span and its parameters must equal params.mean_field().
PhysicalityReport evolve_covariance(const Eigen::MatrixXd& c0, const Trajectory& trajectory,
                                    const FluctuationParams& params, const CouplingMatrix& coupling,
                                    double t_begin, double t_end,
                                    const CovarianceObserver& observer,
                                    const CovarianceOptions& options = {});

/// Convenience overload keeping every `stride`-th snapshot.
std::vector<CovarianceSnapshot> evolve_covariance(const Eigen::MatrixXd& c0,
                                                  const Trajectory& trajectory,
                                                  const FluctuationParams& params,
                                                  const CouplingMatrix& coupling, double t_begin,
                                                  double t_end, std::size_t stride = 1,
                                                  PhysicalityReport* report = nullptr,
                                                  const CovarianceOptions& options = {});

/// Vacuum covariance I/2 for n modes.
Eigen::MatrixXd vacuum_covariance(int n_modes);

/// 2x2 block of site j.
Eigen::Matrix2d site_block(const Eigen::MatrixXd& c, int site);

struct QuadratureGrid {
  Eigen::VectorXd x;
  Eigen::VectorXd p;
  static QuadratureGrid square(double half_width, int points);
};

/// Single-mode Gaussian Wigner function with covariance c (2x2), centred at
/// (sqrt2 Re alpha, sqrt2 Im alpha). Rows index x, columns p.
Eigen::MatrixXd gaussian_wigner(const Eigen::Matrix2d& c, std::complex<double> mean,
                                const QuadratureGrid& grid);

/// CSV of snapshots: t, then the upper triangle of C row by row (c_i_j, i <= j).
void write_covariance_csv(std::ostream& out, const std::vector<CovarianceSnapshot>& snapshots);

/// Gridded field as long-format CSV: x, p, W.
void write_field_csv(std::ostream& out, const QuadratureGrid& grid, const Eigen::MatrixXd& w);

}  // namespace topsync
