#pragma once

// Mean-field dynamics of a lattice of van der Pol oscillators:
//   d(alpha)/dt = -i (omega0 + M) alpha + (kappa1/2) alpha - kappa2 |alpha|^2 alpha
// with M the coupling matrix, plus linear-stability diagnostics and the
// eigenmode superposition predictor.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "topsync/lattice.hpp"
#include "topsync/ode.hpp"

namespace topsync {

using cplx = std::complex<double>;

struct MeanFieldParams {
  double omega0 = 1.0;
  double kappa1 = 5e-3;
  double kappa2 = 1e-2;

  /// Throws InvalidSpec unless omega0, kappa1, kappa2 > 0.
  void validate() const;
  /// Regime warnings (weak dissipation, kappa1 >= kappa2).
  std::vector<std::string> warnings() const;
  /// Uncoupled limit-cycle radius sqrt(kappa1 / (2 kappa2)).
  double limit_cycle_radius() const;
};

struct AmplitudeState {
  double t = 0.0;
  Eigen::VectorXcd alpha;
};

struct EigenstateInit {
  int index = 0;  // 0-based eigenvalue index (ascending order)
  double scale = 1.0;
};
struct RandomInit {
  std::uint64_t seed = 0;
};
struct ExplicitInit {
  Eigen::VectorXcd alpha;
};
using InitialCondition = std::variant<EigenstateInit, RandomInit, ExplicitInit>;

struct SolverOptions {
  OdeOptions ode;
  /// Integrate beta = alpha * exp(i omega0 t), which removes the carrier and
  /// lets the controller take longer steps. The output is always alpha.
  bool rotating_frame = true;
  /// Samples earlier than this are integrated but not stored.
  double record_from = 0.0;
};

/// Uniformly sampled mean-field trajectory. Column k of states() is alpha at
/// time t0() + k * dt().
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(double t0, double dt, Eigen::MatrixXcd states, MeanFieldParams params,
             std::shared_ptr<const CouplingMatrix> coupling);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  double t_last() const { return time(samples() - 1); }
  std::size_t samples() const { return static_cast<std::size_t>(states_.cols()); }
  int sites() const { return static_cast<int>(states_.rows()); }
  double time(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }
  const Eigen::MatrixXcd& states() const { return states_; }
  Eigen::VectorXcd state(std::size_t k) const { return states_.col(static_cast<Eigen::Index>(k)); }
  cplx alpha(std::size_t k, int site) const { return states_(site, static_cast<Eigen::Index>(k)); }
  const MeanFieldParams& params() const { return params_; }
  const CouplingMatrix& coupling() const { return *coupling_; }
  std::shared_ptr<const CouplingMatrix> coupling_ptr() const { return coupling_; }

  /// Index range [first, last] of samples with t in [t_begin, t_end].
  std::pair<std::size_t, std::size_t> window_indices(double t_begin, double t_end) const;

  /// CSV: t, Re a_1, Im a_1, ..., Re a_N, Im a_N.
  void write_csv(std::ostream& out, std::size_t stride = 1) const;

 private:
  double t0_ = 0.0;
  double dt_ = 0.1;
  Eigen::MatrixXcd states_;
  MeanFieldParams params_;
  std::shared_ptr<const CouplingMatrix> coupling_;
};

struct StabilityReport {
  Eigen::VectorXcd eigenvalues;  // nu_l = -i (omega0 + mu_l) + kappa1/2
  Eigen::VectorXd growth_rates() const { return eigenvalues.real(); }
  Eigen::VectorXd frequencies() const { return -eigenvalues.imag(); }
};

/// Right-hand side of the mean-field equation.
Eigen::VectorXcd drift(const Eigen::VectorXcd& alpha, const MeanFieldParams& params,
                       const CouplingMatrix& coupling);

/// Allocation-free drift into `out`; `carrier` multiplies the on-site
/// -i omega0 term (0 in the rotating frame, 1 otherwise).
void drift_into(const Eigen::VectorXcd& alpha, const MeanFieldParams& params,
                const CouplingMatrix& coupling, double carrier, Eigen::VectorXcd& out);

/// Requires dt_out <= pi / (omega0 + max|mu|). Throws IntegrationFailure on
/// step-size underflow or a non-finite state.
Trajectory integrate(const AmplitudeState& initial, const MeanFieldParams& params,
                     std::shared_ptr<const CouplingMatrix> coupling, double t_end, double dt_out,
                     const SolverOptions& options = {});

/// Real Jacobian of the lab-frame drift in the ordering
/// (Re a_1, Im a_1, Re a_2, ...).
Eigen::MatrixXd drift_jacobian(const Eigen::VectorXcd& alpha, const MeanFieldParams& params,
                               const CouplingMatrix& coupling);

StabilityReport jacobian_eigenvalues(const MeanFieldParams& params,
                                     const EigenDecomposition& decomposition);

/// sum_l c_l v_l exp(-i (omega0 + mu_l) t).
Eigen::VectorXcd linear_prediction(const Eigen::VectorXcd& coefficients,
                                   const EigenDecomposition& decomposition,
                                   const MeanFieldParams& params, double t);

/// A_j(t) = Re alpha_j(t) on the trajectory grid.
std::vector<double> amplitude_series(const Trajectory& trajectory, int site);

/// alpha_j = a exp(i phi), a ~ U(0, 0.5), phi ~ U(0, 2 pi), drawn per site.
AmplitudeState random_initial(int n, std::uint64_t seed);

Eigen::VectorXcd make_initial_state(const InitialCondition& ic, const CouplingMatrix& coupling);

/// Largest |mu| of the coupling matrix (spectral radius).
double spectral_radius(const CouplingMatrix& coupling);

}  // namespace topsync
