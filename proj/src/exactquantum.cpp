#include "topsync/exactquantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "topsync/errors.hpp"

namespace topsync {

namespace {

using Triplet = Eigen::Triplet<cplx>;
constexpr cplx I(0.0, 1.0);

SparseC identity(int n) {
  SparseC id(n, n);
  id.setIdentity();
  return id;
}

SparseC annihilation(int d) {
  std::vector<Triplet> t;
  for (int n = 1; n < d; ++n) t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  SparseC a(d, d);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

SparseC kron(const SparseC& x, const SparseC& y) {
  std::vector<Triplet> t;
  for (int kx = 0; kx < x.outerSize(); ++kx)
    for (SparseC::InnerIterator ix(x, kx); ix; ++ix)
      for (int ky = 0; ky < y.outerSize(); ++ky)
        for (SparseC::InnerIterator iy(y, ky); iy; ++iy)
          t.emplace_back(static_cast<int>(ix.row() * y.rows() + iy.row()),
                         static_cast<int>(ix.col() * y.cols() + iy.col()), ix.value() * iy.value());
  SparseC k(x.rows() * y.rows(), x.cols() * y.cols());
  k.setFromTriplets(t.begin(), t.end());
  return k;
}

// Generalized Laguerre L_n^(k)(x) for n = 0..n_max.
void laguerre(int n_max, int k, double x, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(n_max + 1), 0.0);
  out[0] = 1.0;
  if (n_max >= 1) out[1] = 1.0 + k - x;
  for (int j = 1; j < n_max; ++j)
    out[static_cast<std::size_t>(j + 1)] =
        ((2.0 * j + 1.0 + k - x) * out[static_cast<std::size_t>(j)] -
         (j + k) * out[static_cast<std::size_t>(j - 1)]) / (j + 1.0);
}

// (-1)^n sqrt(n!/m!) for m >= n.
double wigner_prefactor(int m, int n) {
  const double s = std::exp(0.5 * (std::lgamma(n + 1.0) - std::lgamma(m + 1.0)));
  return (n % 2 == 0) ? s : -s;
}

void check_state(const FockDensityMatrix& rho) {
  int expect = rho.dim;
  if (rho.n_modes == 2) expect *= rho.dim;
  if (rho.n_modes < 1 || rho.n_modes > 2 || rho.rho.rows() != expect || rho.rho.cols() != expect) {
    throw InvalidInput("density matrix shape does not match its mode count and truncation");
  }
}

}  // namespace

void ExactParams::validate() const {
  if (!(omega0 > 0.0)) throw InvalidSpec("omega0 must be > 0");
  if (!(kappa1 >= 0.0) || !(kappa2 >= 0.0) || !(gamma_bar >= 0.0)) {
    throw InvalidSpec("dissipation rates must be >= 0");
  }
  if (!std::isfinite(lambda)) throw InvalidSpec("lambda must be finite");
}

ExactModel::ExactModel(int n_modes, int dim, const ExactParams& params)
    : n_modes_(n_modes), dim_(dim), params_(params) {
  params.validate();
  if (n_modes < 1 || n_modes > 2) throw InvalidInput("exact model supports 1 or 2 modes");
  if (dim < 2) throw InvalidInput("Fock truncation must be >= 2");
  if (n_modes == 2 && dim > kMaxTwoModeDim) {
    std::ostringstream msg;
    msg << "two-mode truncation d=" << dim << " exceeds the cap d<=" << kMaxTwoModeDim
        << "; use the Gaussian model for larger systems";
    throw InvalidInput(msg.str());
  }
  size_ = n_modes == 1 ? dim : dim * dim;
  const SparseC a = annihilation(dim);
  if (n_modes == 1) {
    a_.push_back(a);
  } else {
    a_.push_back(kron(a, identity(dim)));
    a_.push_back(kron(identity(dim), a));
  }
  h_ = SparseC(size_, size_);
  for (const auto& aj : a_) {
    h_ += params.omega0 * SparseC(aj.adjoint() * aj);
    if (params.kappa1 > 0) jumps_.push_back(std::sqrt(params.kappa1) * SparseC(aj.adjoint()));
    if (params.kappa2 > 0) jumps_.push_back(std::sqrt(params.kappa2) * SparseC(aj * aj));
    if (params.gamma_bar > 0) jumps_.push_back(std::sqrt(params.gamma_bar) * aj);
  }
  if (n_modes == 2 && params.lambda != 0.0) {
    const SparseC hop = a_[0].adjoint() * a_[1];
    h_ += params.lambda * (hop + SparseC(hop.adjoint()));
  }
  jump_norm_ = SparseC(size_, size_);
  for (const auto& l : jumps_) jump_norm_ += SparseC(l.adjoint() * l);
  total_.resize(static_cast<std::size_t>(size_));
  for (int s = 0; s < size_; ++s) total_[static_cast<std::size_t>(s)] = n_modes == 1 ? s : s / dim + s % dim;
}

SparseC ExactModel::effective_hamiltonian(const SparseC& h) const {
  return h - (0.5 * I) * jump_norm_;
}

FockDensityMatrix vacuum_state(int n_modes, int dim) {
  FockDensityMatrix r;
  r.n_modes = n_modes;
  r.dim = dim;
  const int size = n_modes == 1 ? dim : dim * dim;
  r.rho = Eigen::MatrixXcd::Zero(size, size);
  r.rho(0, 0) = 1.0;
  return r;
}

FockDensityMatrix fock_state(int dim, int n) {
  if (n < 0 || n >= dim) throw InvalidInput("Fock level outside truncation");
  FockDensityMatrix r = vacuum_state(1, dim);
  r.rho(0, 0) = 0.0;
  r.rho(n, n) = 1.0;
  return r;
}

FockDensityMatrix coherent_state(int dim, std::complex<double> beta) {
  Eigen::VectorXcd c(dim);
  for (int n = 0; n < dim; ++n)
    c(n) = std::exp(-0.5 * std::norm(beta) - 0.5 * std::lgamma(n + 1.0)) * std::pow(beta, n);
  c /= c.norm();
  FockDensityMatrix r;
  r.n_modes = 1;
  r.dim = dim;
  r.rho = c * c.adjoint();
  return r;
}

Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const ExactModel& model, const SparseC* h) {
  if (rho.rows() != model.size() || rho.cols() != model.size()) {
    throw InvalidInput("lindblad_rhs: density matrix size mismatch");
  }
  const SparseC heff = model.effective_hamiltonian(h ? *h : model.hamiltonian());
  Eigen::MatrixXcd out = -I * (heff * rho);
  out += I * (rho * SparseC(heff.adjoint()));
  for (const auto& l : model.jumps()) out += (l * rho) * SparseC(l.adjoint());
  return out;
}

void evolve_exact(const FockDensityMatrix& rho0, const ExactModel& model, double t_end,
                  double dt_out, const DensityObserver& observer, const ExactOptions& options,
                  const HamiltonianFn& hamiltonian) {
  check_state(rho0);
  if (rho0.rho.rows() != model.size()) throw InvalidInput("initial state does not match the model");
  const SparseC heff_static = model.effective_hamiltonian(model.hamiltonian());
  std::vector<SparseC> jumps_adj;
  for (const auto& l : model.jumps()) jumps_adj.emplace_back(l.adjoint());

  auto rhs = [&](double t, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& d) {
    SparseC heff_t;
    const SparseC* heff = &heff_static;
    if (hamiltonian) {
      heff_t = model.effective_hamiltonian(hamiltonian(t));
      heff = &heff_t;
    }
    d.noalias() = -I * (*heff * rho);
    d.noalias() += I * (rho * SparseC(heff->adjoint()));
    for (std::size_t k = 0; k < jumps_adj.size(); ++k)
      d.noalias() += (model.jumps()[k] * rho) * jumps_adj[k];
  };
  auto project = [&](double t, Eigen::MatrixXcd& rho) {
    const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    const cplx tr = rho.trace();
    if (herm > options.projection_tol || std::abs(tr - 1.0) > options.projection_tol) {
      std::ostringstream msg;
      msg << "density matrix drifted (hermiticity " << herm << ", trace " << tr.real() << ")";
      throw IntegrationFailure(msg.str(), t);
    }
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
    return true;
  };
  auto obs = [&](std::size_t, double t, const Eigen::MatrixXcd& rho) {
    FockDensityMatrix s{rho0.n_modes, rho0.dim, t, rho};
    observer(s);
  };
  if (t_end == rho0.t) {
    observer(rho0);
    return;
  }
  integrate_dense(rhs, Eigen::MatrixXcd(rho0.rho), rho0.t, t_end, dt_out, obs, options.ode, 0, project);
}

FockDensityMatrix steady_state(const ExactModel& model, SteadyStateReport* report) {
  const int n = model.size();
  const auto& total = model.total_number();
  std::vector<int> index(static_cast<std::size_t>(n) * n, -1);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (total[static_cast<std::size_t>(i)] == total[static_cast<std::size_t>(j)]) {
        index[static_cast<std::size_t>(i) * n + j] = static_cast<int>(pairs.size());
        pairs.emplace_back(i, j);
      }
  const int m = static_cast<int>(pairs.size());
  const SparseC heff = model.effective_hamiltonian(model.hamiltonian());
  // Column-major sparse gives cheap column access to H_eff and the jumps.
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(m) * 12);
  auto at = [&](int k, int l) {
    const int r = index[static_cast<std::size_t>(k) * n + l];
    if (r < 0) throw Error("steady_state: Lindbladian left the number-conserving block");
    return r;
  };
  const int trace_row = at(0, 0);
  for (int col = 0; col < m; ++col) {
    const auto [i, j] = pairs[static_cast<std::size_t>(col)];
    auto add = [&](int k, int l, cplx v) {
      const int r = at(k, l);
      if (r != trace_row) trip.emplace_back(r, col, v);
    };
    for (SparseC::InnerIterator it(heff, i); it; ++it) add(static_cast<int>(it.row()), j, -I * it.value());
    for (SparseC::InnerIterator it(heff, j); it; ++it) add(i, static_cast<int>(it.row()), I * std::conj(it.value()));
    for (const auto& l : model.jumps())
      for (SparseC::InnerIterator ik(l, i); ik; ++ik)
        for (SparseC::InnerIterator il(l, j); il; ++il)
          add(static_cast<int>(ik.row()), static_cast<int>(il.row()), ik.value() * std::conj(il.value()));
    if (i == j) trip.emplace_back(trace_row, col, 1.0);
  }
  SparseC lmat(m, m);
  lmat.setFromTriplets(trip.begin(), trip.end());
  lmat.makeCompressed();
  Eigen::SparseLU<SparseC> lu;
  lu.analyzePattern(lmat);
  lu.factorize(lmat);
  if (lu.info() != Eigen::Success) {
    throw InvalidInput("steady_state: degenerate null space (no unique steady state)");
  }
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(m);
  b(trace_row) = 1.0;
  const Eigen::VectorXcd x = lu.solve(b);
  if (!x.allFinite() || (lmat * x - b).cwiseAbs().maxCoeff() > 1e-8) {
    throw InvalidInput("steady_state: degenerate null space (no unique steady state)");
  }
  FockDensityMatrix r;
  r.n_modes = model.n_modes();
  r.dim = model.dim();
  r.rho = Eigen::MatrixXcd::Zero(n, n);
  for (int c = 0; c < m; ++c) r.rho(pairs[static_cast<std::size_t>(c)].first, pairs[static_cast<std::size_t>(c)].second) = x(c);
  r.rho = 0.5 * (r.rho + r.rho.adjoint()).eval();
  r.rho /= r.rho.trace().real();
  if (report) {
    report->residual = lindblad_rhs(r.rho, model).cwiseAbs().maxCoeff();
    report->leakage = truncation_leakage(r);
    report->truncation_ok = report->leakage < 1e-6;
  }
  return r;
}

double truncation_leakage(const FockDensityMatrix& rho) {
  check_state(rho);
  const int d = rho.dim;
  double worst = 0.0;
  for (int mode = 0; mode < rho.n_modes; ++mode) {
    double top = 0.0;
    for (int s = 0; s < rho.rho.rows(); ++s) {
      const int level = rho.n_modes == 1 ? s : (mode == 0 ? s / d : s % d);
      if (level >= d - 2) top += rho.rho(s, s).real();
    }
    worst = std::max(worst, top);
  }
  return worst;
}

cplx expectation(const FockDensityMatrix& rho, const SparseC& op) {
  return (op * rho.rho).trace();
}

double mean_occupation(const FockDensityMatrix& rho, const ExactModel& model, int mode) {
  const SparseC n = model.a(mode).adjoint() * model.a(mode);
  return expectation(rho, n).real();
}

Eigen::MatrixXd wigner_single(const FockDensityMatrix& rho, const QuadratureGrid& grid) {
  check_state(rho);
  if (rho.n_modes != 1) throw InvalidInput("wigner_single needs a single-mode state");
  const int d = rho.dim;
  Eigen::MatrixXd w(grid.x.size(), grid.p.size());
  std::vector<double> lag;
  std::vector<double> pref(static_cast<std::size_t>(d) * d);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n <= m; ++n) pref[static_cast<std::size_t>(m) * d + n] = wigner_prefactor(m, n);
  for (Eigen::Index ix = 0; ix < grid.x.size(); ++ix) {
    for (Eigen::Index ip = 0; ip < grid.p.size(); ++ip) {
      const cplx alpha = cplx(grid.x(ix), grid.p(ip)) / std::sqrt(2.0);
      const double r2 = std::norm(alpha);
      const double g = std::exp(-2.0 * r2);
      double sum = 0.0;
      cplx pw = 1.0;  // (2 alpha*)^k
      for (int k = 0; k < d; ++k) {
        laguerre(d - 1 - k, k, 4.0 * r2, lag);
        for (int n = 0; n + k < d; ++n) {
          const int m = n + k;
          const cplx term = pref[static_cast<std::size_t>(m) * d + n] * pw * lag[static_cast<std::size_t>(n)];
          // |m><n| and its conjugate partner |n><m| (k > 0).
          if (k == 0) {
            sum += rho.rho(m, n).real() * term.real();
          } else {
            sum += 2.0 * (rho.rho(m, n) * term).real();
          }
        }
        pw *= 2.0 * std::conj(alpha);
      }
      w(ix, ip) = sum * g / std::numbers::pi;
    }
  }
  return w;
}

Eigen::VectorXd wigner_radial_profile(const FockDensityMatrix& rho, const Eigen::VectorXd& r) {
  check_state(rho);
  if (rho.n_modes != 1) throw InvalidInput("radial profile needs a single-mode state");
  Eigen::VectorXd out(r.size());
  std::vector<double> lag;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double x = 4.0 * r(i) * r(i);
    laguerre(rho.dim - 1, 0, x, lag);
    double s = 0.0;
    for (int n = 0; n < rho.dim; ++n) s += ((n % 2) ? -1.0 : 1.0) * rho.rho(n, n).real() * lag[static_cast<std::size_t>(n)];
    out(i) = s * std::exp(-0.5 * x) / std::numbers::pi;
  }
  return out;
}

PhaseMarginal phase_difference_marginal(const FockDensityMatrix& rho, int n_bins) {
  check_state(rho);
  if (rho.n_modes != 2) throw InvalidInput("phase_difference_marginal needs a two-mode state");
  if (n_bins < 2) throw InvalidInput("n_bins must be >= 2");
  const int d = rho.dim;
  // Radial integrals of the Wigner kernel of |m><n| (m >= n) in u = 4 r^2,
  // composite Simpson on [0, u_max]; the integrand has decayed by u_max.
  const double r_max = std::sqrt(static_cast<double>(d)) + 4.0;
  const double u_max = 4.0 * r_max * r_max * 1.5;
  const int steps = 20000;
  const double h = u_max / steps;
  Eigen::MatrixXd radial = Eigen::MatrixXd::Zero(d, d);
  std::vector<double> lag;
  for (int s = 0; s <= steps; ++s) {
    const double u = s * h;
    const double wgt = (s == 0 || s == steps) ? 1.0 : (s % 2 ? 4.0 : 2.0);
    const double e = std::exp(-0.5 * u);
    double uk = 1.0;  // u^{k/2}
    for (int k = 0; k < d; ++k) {
      laguerre(d - 1 - k, k, u, lag);
      for (int n = 0; n + k < d; ++n) radial(n + k, n) += wgt * uk * e * lag[static_cast<std::size_t>(n)];
      uk *= std::sqrt(u);
    }
  }
  // d^2 alpha = r dr dphi, r dr = du / 8; kernel (2/pi) pref; phi integral gives 2 pi.
  for (int m = 0; m < d; ++m)
    for (int n = 0; n <= m; ++n) radial(m, n) *= (h / 3.0) / 8.0 * (2.0 / std::numbers::pi) * 2.0 * std::numbers::pi * wigner_prefactor(m, n);

  // Fourier coefficients c_q of P(dphi) = (1/2pi) sum_q c_q e^{-i q dphi}.
  std::vector<cplx> coeff(static_cast<std::size_t>(2 * d - 1), 0.0);
  auto rad = [&](int m, int n) { return m >= n ? radial(m, n) : radial(n, m); };
  for (int m1 = 0; m1 < d; ++m1)
    for (int m2 = 0; m2 < d; ++m2)
      for (int n1 = 0; n1 < d; ++n1) {
        const int q = m1 - n1;
        const int n2 = m2 + q;  // m2 - n2 = -q
        if (n2 < 0 || n2 >= d) continue;
        const cplx v = rho.rho(m1 * d + m2, n1 * d + n2);
        if (v == cplx(0.0, 0.0)) continue;
        coeff[static_cast<std::size_t>(q + d - 1)] += v * rad(m1, n1) * rad(m2, n2);
      }
  PhaseMarginal pm;
  pm.phi.resize(n_bins);
  pm.density.resize(n_bins);
  const double bw = 2.0 * std::numbers::pi / n_bins;
  for (int b = 0; b < n_bins; ++b) {
    const double c = -std::numbers::pi + (b + 0.5) * bw;
    cplx s = 0.0;
    for (int q = -(d - 1); q <= d - 1; ++q) {
      const double sinc = q == 0 ? 1.0 : std::sin(q * bw / 2) / (q * bw / 2);
      s += coeff[static_cast<std::size_t>(q + d - 1)] * std::polar(sinc, -q * c);
    }
    pm.phi(b) = c;
    pm.density(b) = s.real() / (2.0 * std::numbers::pi);
  }
  return pm;
}

double s_c_exact(const FockDensityMatrix& rho) {
  check_state(rho);
  if (rho.n_modes != 2) throw InvalidInput("s_c_exact needs a two-mode state");
  const int d = rho.dim;
  double n1 = 0.0, n2 = 0.0;
  cplx corr = 0.0;  // <a1^+ a2>
  for (int s = 0; s < rho.rho.rows(); ++s) {
    const double p = rho.rho(s, s).real();
    n1 += (s / d) * p;
    n2 += (s % d) * p;
  }
  for (int m1 = 1; m1 < d; ++m1)
    for (int m2 = 0; m2 + 1 < d; ++m2) {
      // a1^+ a2 |m1-1, m2+1> = sqrt(m1) sqrt(m2+1) |m1, m2>
      const int from = (m1 - 1) * d + (m2 + 1), to = m1 * d + m2;
      corr += std::sqrt(static_cast<double>(m1) * (m2 + 1)) * rho.rho(from, to);
    }
  // (x1-x2)^2 + (p1-p2)^2 = 2 b^+ b + 2 with b = a1 - a2.
  const double denom = 2.0 * (n1 + n2 - 2.0 * corr.real()) + 2.0;
  return 1.0 / denom;
}

double s_c_exact(const std::vector<FockDensityMatrix>& seq, double t_i, double t_f) {
  if (seq.size() < 2) throw WindowError("need at least two states");
  if (!(t_f > t_i)) throw WindowError("window needs t_f > t_i");
  const double dt = seq[1].t - seq[0].t;
  const double eps = 1e-9 * dt;
  if (t_i < seq.front().t - eps || t_f > seq.back().t + eps) throw WindowError("window outside sequence");
  double sum = 0.0, span = 0.0;
  for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
    const double a = seq[k].t, b = seq[k + 1].t;
    if (a < t_i - eps || b > t_f + eps) continue;
    sum += 0.5 * (b - a) * (s_c_exact(seq[k]) + s_c_exact(seq[k + 1]));
    span += b - a;
  }
  if (std::abs(span - (t_f - t_i)) > 1e-6 * dt) throw WindowError("window edges must fall on state times");
  return sum / span;
}

double min_eigenvalue(const FockDensityMatrix& rho) {
  const Eigen::MatrixXcd h = 0.5 * (rho.rho + rho.rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace topsync
