#include "topsync/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "topsync/errors.hpp"
#include "topsync/random.hpp"

namespace topsync {

void MeanFieldParams::validate() const {
  if (!(omega0 > 0.0) || !std::isfinite(omega0)) throw InvalidSpec("omega0 must be > 0");
  if (!(kappa1 > 0.0) || !std::isfinite(kappa1)) throw InvalidSpec("kappa1 must be > 0");
  if (!(kappa2 > 0.0) || !std::isfinite(kappa2)) throw InvalidSpec("kappa2 must be > 0");
}

std::vector<std::string> MeanFieldParams::warnings() const {
  std::vector<std::string> w;
  if (kappa1 > 0.1 * omega0 || kappa2 > 0.1 * omega0) {
    w.emplace_back("dissipation rates exceed 0.1*omega0: weak-dissipation regime violated");
  }
  if (kappa1 >= kappa2) {
    w.emplace_back("kappa1 >= kappa2: amplitude may exceed weakly nonlinear regime");
  }
  return w;
}

double MeanFieldParams::limit_cycle_radius() const { return std::sqrt(kappa1 / (2.0 * kappa2)); }

Trajectory::Trajectory(double t0, double dt, Eigen::MatrixXcd states, MeanFieldParams params,
                       std::shared_ptr<const CouplingMatrix> coupling)
    : t0_(t0), dt_(dt), states_(std::move(states)), params_(params), coupling_(std::move(coupling)) {}

std::pair<std::size_t, std::size_t> Trajectory::window_indices(double t_begin, double t_end) const {
  if (samples() == 0) throw WindowError("empty trajectory");
  const double slack = 1e-9 * dt_;
  if (t_begin < t0_ - slack || t_end > t_last() + slack || t_end < t_begin) {
    std::ostringstream msg;
    msg << "window [" << t_begin << ", " << t_end << "] outside trajectory [" << t0_ << ", "
        << t_last() << "]";
    throw WindowError(msg.str());
  }
  const auto first = static_cast<std::size_t>(std::ceil((t_begin - t0_) / dt_ - 1e-9));
  const auto last = std::min(samples() - 1,
                             static_cast<std::size_t>(std::floor((t_end - t0_) / dt_ + 1e-9)));
  return {first, last};
}

void Trajectory::write_csv(std::ostream& out, std::size_t stride) const {
  if (stride == 0) stride = 1;
  out << "t";
  for (int j = 0; j < sites(); ++j) out << ",re_" << (j + 1) << ",im_" << (j + 1);
  out << '\n';
  const auto old = out.precision(17);
  for (std::size_t k = 0; k < samples(); k += stride) {
    out << time(k);
    for (int j = 0; j < sites(); ++j) {
      const cplx a = alpha(k, j);
      out << ',' << a.real() << ',' << a.imag();
    }
    out << '\n';
  }
  out.precision(old);
}

void drift_into(const Eigen::VectorXcd& alpha, const MeanFieldParams& p,
                const CouplingMatrix& coupling, double carrier, Eigen::VectorXcd& out) {
  const auto& m = coupling.sparse();
  const auto n = alpha.size();
  const int* outer = m.outerIndexPtr();
  const int* inner = m.innerIndexPtr();
  const double* values = m.valuePtr();
  const cplx onsite(0.5 * p.kappa1, -carrier * p.omega0);
  for (Eigen::Index i = 0; i < n; ++i) {
    // M is symmetric, so column i of the compressed storage is row i.
    cplx hop(0.0, 0.0);
    for (int k = outer[i]; k < outer[i + 1]; ++k) hop += values[k] * alpha(inner[k]);
    const cplx a = alpha(i);
    out(i) = onsite * a - cplx(0.0, 1.0) * hop - p.kappa2 * std::norm(a) * a;
  }
}

Eigen::VectorXcd drift(const Eigen::VectorXcd& alpha, const MeanFieldParams& params,
                       const CouplingMatrix& coupling) {
  if (alpha.size() != coupling.size()) {
    throw InvalidInput("drift: state dimension does not match coupling matrix");
  }
  Eigen::VectorXcd out(alpha.size());
  drift_into(alpha, params, coupling, 1.0, out);
  return out;
}

double spectral_radius(const CouplingMatrix& coupling) {
  if (coupling.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(coupling.entries(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Trajectory integrate(const AmplitudeState& initial, const MeanFieldParams& params,
                     std::shared_ptr<const CouplingMatrix> coupling, double t_end, double dt_out,
                     const SolverOptions& options) {
  params.validate();
  if (!coupling) throw InvalidInput("integrate: null coupling matrix");
  if (initial.alpha.size() != coupling->size()) {
    throw InvalidInput("integrate: initial state dimension does not match coupling matrix");
  }
  if (!(t_end > initial.t)) throw InvalidInput("integrate: t_end must exceed the initial time");
  const double nyquist = std::numbers::pi / (params.omega0 + spectral_radius(*coupling));
  if (!(dt_out > 0.0) || dt_out > nyquist) {
    std::ostringstream msg;
    msg << "integrate: dt_out=" << dt_out << " does not resolve the fastest frequency (limit "
        << nyquist << ")";
    throw InvalidInput(msg.str());
  }

  const double t0 = initial.t;
  const auto k_last = static_cast<std::size_t>(std::floor((t_end - t0) / dt_out + 1e-9));
  std::size_t k_first = 0;
  if (options.record_from > t0) {
    k_first = static_cast<std::size_t>(std::ceil((options.record_from - t0) / dt_out - 1e-9));
  }
  if (k_first > k_last) throw InvalidInput("integrate: record_from lies beyond t_end");
  const auto n = coupling->size();
  Eigen::MatrixXcd states(n, static_cast<Eigen::Index>(k_last - k_first + 1));

  const CouplingMatrix& m = *coupling;
  const double carrier = options.rotating_frame ? 0.0 : 1.0;
  const double w0 = params.omega0;
  auto rhs = [&](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
    drift_into(y, params, m, carrier, dy);
  };
  auto observer = [&](std::size_t k, double t, const Eigen::VectorXcd& y) {
    if (k < k_first) return;
    auto col = states.col(static_cast<Eigen::Index>(k - k_first));
    if (options.rotating_frame) {
      col = y * std::polar(1.0, -w0 * (t - t0));
    } else {
      col = y;
    }
  };
  // In the rotating frame the state is beta = alpha(t) exp(i omega0 (t - t0)).
  integrate_dense(rhs, Eigen::VectorXcd(initial.alpha), t0, t_end, dt_out, observer,
                  options.ode, k_first);
  return Trajectory(t0 + static_cast<double>(k_first) * dt_out, dt_out, std::move(states), params,
                    std::move(coupling));
}

Eigen::MatrixXd drift_jacobian(const Eigen::VectorXcd& alpha, const MeanFieldParams& params,
                               const CouplingMatrix& coupling) {
  const int n = coupling.size();
  if (alpha.size() != n) throw InvalidInput("drift_jacobian: state size does not match coupling");
  // df = A da + B da*, so d(Re f, Im f)/d(Re a) = A + B and /d(Im a) = i(A - B).
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  auto put = [&](int j, int k, cplx a, cplx b) {
    const cplx dx = a + b, dy = cplx(0.0, 1.0) * (a - b);
    jac(2 * j, 2 * k) = dx.real();
    jac(2 * j + 1, 2 * k) = dx.imag();
    jac(2 * j, 2 * k + 1) = dy.real();
    jac(2 * j + 1, 2 * k + 1) = dy.imag();
  };
  for (int j = 0; j < n; ++j) {
    const cplx a = alpha(j);
    put(j, j, cplx(0.5 * params.kappa1 - 2.0 * params.kappa2 * std::norm(a), -params.omega0),
        -params.kappa2 * a * a);
    for (int k = 0; k < n; ++k)
      if (k != j && coupling(j, k) != 0.0) put(j, k, cplx(0.0, -coupling(j, k)), 0.0);
  }
  return jac;
}

StabilityReport jacobian_eigenvalues(const MeanFieldParams& params,
                                     const EigenDecomposition& decomposition) {
  StabilityReport report;
  const auto& mu = decomposition.eigenvalues;
  report.eigenvalues.resize(mu.size());
  for (Eigen::Index l = 0; l < mu.size(); ++l) {
    report.eigenvalues(l) = cplx(0.5 * params.kappa1, -(params.omega0 + mu(l)));
  }
  return report;
}

Eigen::VectorXcd linear_prediction(const Eigen::VectorXcd& coefficients,
                                   const EigenDecomposition& decomposition,
                                   const MeanFieldParams& params, double t) {
  const auto n = decomposition.eigenvalues.size();
  if (coefficients.size() != n) {
    throw InvalidInput("linear_prediction: one coefficient per eigenmode required");
  }
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(decomposition.eigenvectors.rows());
  for (Eigen::Index l = 0; l < n; ++l) {
    if (coefficients(l) == cplx(0.0, 0.0)) continue;
    const cplx phase = std::polar(1.0, -(params.omega0 + decomposition.eigenvalues(l)) * t);
    out += (coefficients(l) * phase) * decomposition.eigenvectors.col(l).cast<cplx>();
  }
  return out;
}

std::vector<double> amplitude_series(const Trajectory& trajectory, int site) {
  if (site < 0 || site >= trajectory.sites()) {
    throw InvalidInput("amplitude_series: site index out of range");
  }
  std::vector<double> out(trajectory.samples());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = trajectory.alpha(k, site).real();
  return out;
}

AmplitudeState random_initial(int n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("random_initial: n must be >= 1");
  Engine engine(seed);
  AmplitudeState s;
  s.alpha.resize(n);
  for (int j = 0; j < n; ++j) {
    const double a = 0.5 * uniform01(engine);
    const double phi = 2.0 * std::numbers::pi * uniform01(engine);
    s.alpha(j) = std::polar(a, phi);
  }
  return s;
}

Eigen::VectorXcd make_initial_state(const InitialCondition& ic, const CouplingMatrix& coupling) {
  const int n = coupling.size();
  if (const auto* e = std::get_if<EigenstateInit>(&ic)) {
    if (e->index < 0 || e->index >= n) throw InvalidInput("eigenstate index out of range");
    const EigenDecomposition dec = eigendecompose(coupling);
    return (e->scale * dec.eigenvectors.col(e->index)).cast<cplx>();
  }
  if (const auto* r = std::get_if<RandomInit>(&ic)) return random_initial(n, r->seed).alpha;
  const auto& x = std::get<ExplicitInit>(ic);
  if (x.alpha.size() != n) throw InvalidInput("explicit initial state has wrong dimension");
  return x.alpha;
}

}  // namespace topsync
