#pragma once

// Truncated-Fock master-equation reference for one or two van der Pol
// oscillators:
//   drho/dt = -i[H, rho] + sum_j { k1 D[a_j^+] + k2 D[a_j^2] + g D[a_j] } rho
// with D[O]rho = O rho O^+ - {O^+ O, rho}/2 and
//   H = omega0 sum_j a_j^+ a_j + lambda (a_1^+ a_2 + a_2^+ a_1).

#include <complex>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "topsync/fluctuations.hpp"
#include "topsync/ode.hpp"

namespace topsync {

using SparseC = Eigen::SparseMatrix<std::complex<double>>;

struct ExactParams {
  double omega0 = 1.0;
  double kappa1 = 5e-3;
  double kappa2 = 1e-2;
  double gamma_bar = 0.0;
  double lambda = 0.0;  // two-mode hopping

  void validate() const;
};

inline constexpr int kMaxTwoModeDim = 20;

/// Operators of a 1- or 2-mode truncated Fock space (mode 0 is the most
/// significant index: |n1 n2> -> n1 * d + n2).
class ExactModel {
 public:
  ExactModel(int n_modes, int dim, const ExactParams& params);

  int n_modes() const { return n_modes_; }
  int dim() const { return dim_; }
  int size() const { return size_; }
  const ExactParams& params() const { return params_; }
  const SparseC& a(int mode) const { return a_[static_cast<std::size_t>(mode)]; }
  const SparseC& hamiltonian() const { return h_; }
  const std::vector<SparseC>& jumps() const { return jumps_; }
  /// H - (i/2) sum L^+ L.
  SparseC effective_hamiltonian(const SparseC& h) const;
  /// Total-number quantum number of each basis state.
  const std::vector<int>& total_number() const { return total_; }

 private:
  int n_modes_, dim_, size_;
  ExactParams params_;
  std::vector<SparseC> a_;
  SparseC h_;
  std::vector<SparseC> jumps_;
  SparseC jump_norm_;  // sum L^+ L
  std::vector<int> total_;
};

struct FockDensityMatrix {
  int n_modes = 1;
  int dim = 0;
  double t = 0.0;
  Eigen::MatrixXcd rho;
};

FockDensityMatrix vacuum_state(int n_modes, int dim);
FockDensityMatrix fock_state(int dim, int n);
FockDensityMatrix coherent_state(int dim, std::complex<double> beta);

/// Lindbladian applied to rho; h overrides the model's Hamiltonian when given.
Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const ExactModel& model,
                              const SparseC* h = nullptr);

using HamiltonianFn = std::function<SparseC(double t)>;
using DensityObserver = std::function<void(const FockDensityMatrix&)>;

struct ExactOptions {
  OdeOptions ode{1e-8, 1e-11};
  /// Pre-projection trace / Hermiticity drift that counts as a failure.
  double projection_tol = 1e-6;
};

/// Integrates the master equation on the grid t0 + k dt_out. Hermiticity and
/// unit trace are restored after every accepted step.
void evolve_exact(const FockDensityMatrix& rho0, const ExactModel& model, double t_end,
                  double dt_out, const DensityObserver& observer, const ExactOptions& options = {},
                  const HamiltonianFn& hamiltonian = nullptr);

struct SteadyStateReport {
  double residual = 0.0;      // ||L rho||_max
  double leakage = 0.0;       // largest population in the top two levels of any mode
  bool truncation_ok = true;  // leakage < 1e-6
};

/// Null vector of the Lindbladian with unit trace, solved in the
/// number-conserving block (ket and bra with equal total number), which holds
/// the steady state because every term changes the number difference by a
/// fixed amount. Throws InvalidInput when the null space is degenerate.
FockDensityMatrix steady_state(const ExactModel& model, SteadyStateReport* report = nullptr);

/// Population of the top two Fock levels, maximised over modes.
double truncation_leakage(const FockDensityMatrix& rho);

std::complex<double> expectation(const FockDensityMatrix& rho, const SparseC& op);
double mean_occupation(const FockDensityMatrix& rho, const ExactModel& model, int mode);

/// Single-mode Wigner function on a quadrature grid (rows x, columns p),
/// normalised so that the integral over dx dp is 1.
Eigen::MatrixXd wigner_single(const FockDensityMatrix& rho, const QuadratureGrid& grid);

/// Radial profile W(r) at alpha = r (phase-averaged), r in amplitude units.
Eigen::VectorXd wigner_radial_profile(const FockDensityMatrix& rho, const Eigen::VectorXd& r);

struct PhaseMarginal {
  Eigen::VectorXd phi;      // bin centres in [-pi, pi)
  Eigen::VectorXd density;  // bin averages, integrates to 1
};

/// Wigner function of a two-mode state integrated over both amplitudes and
/// the phase sum, as a density in the phase difference phi_1 - phi_2.
PhaseMarginal phase_difference_marginal(const FockDensityMatrix& rho, int n_bins = 128);

/// [<(x1-x2)^2> + <(p1-p2)^2>]^-1 from full (non-central) second moments.
double s_c_exact(const FockDensityMatrix& rho);
/// Trapezoidal time average over a uniformly spaced sequence.
double s_c_exact(const std::vector<FockDensityMatrix>& sequence, double t_i, double t_f);

/// Minimum eigenvalue of the Hermitian part of rho.
double min_eigenvalue(const FockDensityMatrix& rho);

}  // namespace topsync
