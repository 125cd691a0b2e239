#include "topsync/fluctuations.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "topsync/errors.hpp"

namespace topsync {

void FluctuationParams::validate() const {
  mean_field().validate();
  if (!(gamma_bar >= 0.0) || !std::isfinite(gamma_bar)) throw InvalidSpec("gamma_bar must be >= 0");
}

std::vector<std::string> FluctuationParams::warnings() const {
  MeanFieldParams mf{omega0, kappa1, kappa2};
  auto w = mf.warnings();
  if (gamma_bar >= kappa1) w.emplace_back("gamma_bar >= kappa1: oscillators decay to the vacuum");
  return w;
}

MeanFieldParams FluctuationParams::mean_field() const {
  return MeanFieldParams{omega0, kappa1 - gamma_bar, kappa2};
}

Eigen::MatrixXd symplectic_form(int n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (int j = 0; j < n_modes; ++j) {
    omega(x_row(j), p_row(j)) = 1.0;
    omega(p_row(j), x_row(j)) = -1.0;
  }
  return omega;
}

namespace {

// On-site 2x2 drift block, row-major (xx, xp, px, pp).
struct Block {
  double xx, xp, px, pp;
};

Block onsite_block(cplx a, const FluctuationParams& p) {
  const double k1 = p.kappa1 - p.gamma_bar;
  const double n = std::norm(a);
  const cplx a2 = a * a;
  return Block{0.5 * (k1 - 4.0 * p.kappa2 * n - 2.0 * p.kappa2 * a2.real()),
               -p.omega0 - p.kappa2 * a2.imag(),
               p.omega0 - p.kappa2 * a2.imag(),
               0.5 * (k1 - 4.0 * p.kappa2 * n + 2.0 * p.kappa2 * a2.real())};
}

double diffusion_entry(cplx a, const FluctuationParams& p) {
  return 0.5 * (p.kappa1 + p.gamma_bar + 4.0 * p.kappa2 * std::norm(a));
}

void check_dimension(const Eigen::VectorXcd& alpha, const CouplingMatrix& coupling) {
  if (alpha.size() != coupling.size()) {
    throw InvalidInput("mean-field state dimension does not match coupling matrix");
  }
}

}  // namespace

Eigen::MatrixXd build_drift(const Eigen::VectorXcd& alpha, const FluctuationParams& params,
                            const CouplingMatrix& coupling) {
  check_dimension(alpha, coupling);
  const int n = coupling.size();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    const Block blk = onsite_block(alpha(j), params);
    b(x_row(j), x_row(j)) = blk.xx;
    b(x_row(j), p_row(j)) = blk.xp;
    b(p_row(j), x_row(j)) = blk.px;
    b(p_row(j), p_row(j)) = blk.pp;
  }
  for (const Bond& bond : coupling.bonds()) {
    for (auto [j, k] : {std::pair{bond.i, bond.j}, std::pair{bond.j, bond.i}}) {
      b(x_row(j), p_row(k)) = bond.strength;
      b(p_row(j), x_row(k)) = -bond.strength;
    }
  }
  return b;
}

Eigen::MatrixXd build_diffusion(const Eigen::VectorXcd& alpha, const FluctuationParams& params) {
  const auto n = alpha.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double v = diffusion_entry(alpha(j), params);
    d(2 * j, 2 * j) = v;
    d(2 * j + 1, 2 * j + 1) = v;
  }
  return d;
}

Eigen::VectorXd symplectic_eigenvalues(const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols() || c.rows() % 2 != 0) {
    throw InvalidInput("symplectic_eigenvalues: expected a 2n x 2n matrix");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw PhysicalityError("covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  // L^T Omega L is antisymmetric with eigenvalues +-i nu; (L^T Omega L)^T (L^T Omega L)
  // has each nu^2 twice.
  const Eigen::MatrixXd a = l.transpose() * symplectic_form(static_cast<int>(c.rows() / 2)) * l;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.transpose() * a, Eigen::EigenvaluesOnly);
  const auto m = c.rows() / 2;
  Eigen::VectorXd nu(m);
  for (Eigen::Index i = 0; i < m; ++i) nu(i) = std::sqrt(std::max(0.0, es.eigenvalues()(2 * i)));
  return nu;
}

bool satisfies_uncertainty(const Eigen::MatrixXd& c, double s) {
  const Eigen::MatrixXcd h = c.cast<cplx>() + cplx(0.0, s) * symplectic_form(static_cast<int>(c.rows() / 2)).cast<cplx>();
  const Eigen::LLT<Eigen::MatrixXcd> llt(h);
  return llt.info() == Eigen::Success;
}

Eigen::MatrixXd vacuum_covariance(int n_modes) {
  return 0.5 * Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes);
}

Eigen::Matrix2d site_block(const Eigen::MatrixXd& c, int site) {
  if (site < 0 || 2 * site + 1 >= c.rows()) throw InvalidInput("site_block: site out of range");
  return c.block<2, 2>(x_row(site), x_row(site));
}

MeanFieldInterpolator::MeanFieldInterpolator(const Trajectory& trajectory) : traj_(trajectory) {
  if (trajectory.samples() < 2) throw InvalidInput("interpolation needs at least two samples");
  f0_.resize(trajectory.sites());
  f1_.resize(trajectory.sites());
}

void MeanFieldInterpolator::evaluate(double t, Eigen::VectorXcd& out) {
  const double h = traj_.dt();
  const double s = (t - traj_.t0()) / h;
  const auto last = static_cast<std::ptrdiff_t>(traj_.samples()) - 2;
  const auto k = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::floor(s)), 0, last);
  if (k != cached_) {
    drift_into(traj_.states().col(k), traj_.params(), traj_.coupling(), 1.0, f0_);
    drift_into(traj_.states().col(k + 1), traj_.params(), traj_.coupling(), 1.0, f1_);
    cached_ = k;
  }
  const double u = s - static_cast<double>(k);
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  out = h00 * traj_.states().col(k) + (h10 * h) * f0_ + h01 * traj_.states().col(k + 1) +
        (h11 * h) * f1_;
}

PhysicalityReport evolve_covariance(const Eigen::MatrixXd& c0, const Trajectory& trajectory,
                                    const FluctuationParams& params, const CouplingMatrix& coupling,
                                    double t_begin, double t_end,
                                    const CovarianceObserver& observer,
                                    const CovarianceOptions& options) {
  params.validate();
  const int n = coupling.size();
  if (trajectory.sites() != n) throw InvalidInput("trajectory and coupling sizes differ");
  if (c0.rows() != 2 * n || c0.cols() != 2 * n) throw InvalidInput("C0 must be 2N x 2N");
  if ((c0 - c0.transpose()).cwiseAbs().maxCoeff() > 1e-8) throw InvalidInput("C0 is not symmetric");
  const MeanFieldParams mf = params.mean_field();
  const MeanFieldParams& tp = trajectory.params();
  if (tp.omega0 != mf.omega0 || tp.kappa1 != mf.kappa1 || tp.kappa2 != mf.kappa2) {
    throw InvalidInput("trajectory was integrated with different mean-field parameters");
  }
  if (t_end < t_begin) throw WindowError("covariance span has t_end < t_begin");
  // Throws WindowError when the span is not covered.
  trajectory.window_indices(t_begin, t_end);
  const double dt = trajectory.dt();
  // Output grid shares the trajectory's phase.
  const double grid_offset = (t_begin - trajectory.t0()) / dt;
  if (std::abs(grid_offset - std::round(grid_offset)) > 1e-6) {
    throw WindowError("covariance start must lie on the trajectory grid");
  }

  PhysicalityReport report;
  report.initial_is_vacuum = (c0.array() == vacuum_covariance(n).array()).all();
  const double floor = 0.5 - options.physicality_tol;
  const auto k_last = static_cast<std::size_t>(std::floor((t_end - t_begin) / dt + 1e-9));

  auto check = [&](std::size_t k, double t, const Eigen::MatrixXd& c) {
    ++report.samples;
    const double asym = (c - c.transpose()).cwiseAbs().maxCoeff();
    report.max_asymmetry = std::max(report.max_asymmetry, asym);
    bool bad = asym > 1e-8 || !c.allFinite();
    if (!bad && options.uncertainty_stride > 0 && k % options.uncertainty_stride == 0) {
      ++report.uncertainty_checks;
      bad = !satisfies_uncertainty(c, floor);
    }
    const bool exact = k == 0 || k == k_last ||
                       (options.symplectic_stride > 0 && k % options.symplectic_stride == 0);
    if (exact && c.allFinite()) {
      ++report.symplectic_checks;
      double nu_min = 0.0;
      try {
        nu_min = symplectic_eigenvalues(c).minCoeff();
      } catch (const PhysicalityError&) {
        nu_min = -std::numeric_limits<double>::infinity();
      }
      if (nu_min < report.min_symplectic) {
        report.min_symplectic = nu_min;
        report.min_symplectic_time = t;
      }
      bad = bad || nu_min < floor;
    }
    if (bad) {
      report.violation_times.push_back(t);
      if (options.strict) {
        std::ostringstream msg;
        msg << "covariance lost physicality at t=" << t;
        throw PhysicalityError(msg.str());
      }
    }
  };

  MeanFieldInterpolator interp(trajectory);
  Eigen::VectorXcd alpha(n);
  std::vector<Block> blocks(static_cast<std::size_t>(n));
  Eigen::VectorXd diff(n);
  Eigen::MatrixXd y(2 * n, 2 * n);
  const auto& m = coupling.sparse();
  const int* outer = m.outerIndexPtr();
  const int* inner = m.innerIndexPtr();
  const double* values = m.valuePtr();

  auto rhs = [&](double t, const Eigen::MatrixXd& c, Eigen::MatrixXd& dc) {
    interp.evaluate(t, alpha);
    for (int j = 0; j < n; ++j) {
      blocks[static_cast<std::size_t>(j)] = onsite_block(alpha(j), params);
      diff(j) = diffusion_entry(alpha(j), params);
    }
    // Y = B C column by column (B is sparse: 2x2 on-site blocks plus hopping).
    for (Eigen::Index col = 0; col < 2 * n; ++col) {
      const double* cc = c.data() + col * 2 * n;
      double* yy = y.data() + col * 2 * n;
      for (int j = 0; j < n; ++j) {
        const Block& b = blocks[static_cast<std::size_t>(j)];
        const double x = cc[2 * j], p = cc[2 * j + 1];
        double yx = b.xx * x + b.xp * p;
        double yp = b.px * x + b.pp * p;
        for (int q = outer[j]; q < outer[j + 1]; ++q) {
          const int k = inner[q];
          yx += values[q] * cc[2 * k + 1];
          yp -= values[q] * cc[2 * k];
        }
        yy[2 * j] = yx;
        yy[2 * j + 1] = yp;
      }
    }
    dc.noalias() = y + y.transpose();
    for (int j = 0; j < n; ++j) {
      dc(2 * j, 2 * j) += diff(j);
      dc(2 * j + 1, 2 * j + 1) += diff(j);
    }
  };
  auto obs = [&](std::size_t k, double t, const Eigen::MatrixXd& c) {
    check(k, t, c);
    if (observer) observer(t, c);
  };
  auto symmetrize = [](double, Eigen::MatrixXd& c) {
    c = 0.5 * (c + c.transpose()).eval();
    return false;  // the right-hand side is symmetric, so k7 stays valid
  };

  if (t_end == t_begin) {
    obs(0, t_begin, c0);
    return report;
  }
  integrate_dense(rhs, Eigen::MatrixXd(c0), t_begin, t_end, dt, obs, options.ode, 0, symmetrize);
  return report;
}

std::vector<CovarianceSnapshot> evolve_covariance(const Eigen::MatrixXd& c0,
                                                  const Trajectory& trajectory,
                                                  const FluctuationParams& params,
                                                  const CouplingMatrix& coupling, double t_begin,
                                                  double t_end, std::size_t stride,
                                                  PhysicalityReport* report,
                                                  const CovarianceOptions& options) {
  if (stride == 0) stride = 1;
  std::vector<CovarianceSnapshot> out;
  std::size_t k = 0;
  auto keep = [&](double t, const Eigen::MatrixXd& c) {
    if (k++ % stride == 0) out.push_back({t, c});
  };
  auto r = evolve_covariance(c0, trajectory, params, coupling, t_begin, t_end, keep, options);
  if (report) *report = std::move(r);
  return out;
}

QuadratureGrid QuadratureGrid::square(double half_width, int points) {
  if (points < 2 || !(half_width > 0.0)) throw InvalidInput("grid needs >= 2 points and width > 0");
  QuadratureGrid g;
  g.x = Eigen::VectorXd::LinSpaced(points, -half_width, half_width);
  g.p = g.x;
  return g;
}

Eigen::MatrixXd gaussian_wigner(const Eigen::Matrix2d& c, std::complex<double> mean,
                                const QuadratureGrid& grid) {
  const double det = c.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) throw InvalidInput("gaussian_wigner: singular covariance");
  const Eigen::Matrix2d inv = c.inverse();
  const double mx = std::sqrt(2.0) * mean.real();
  const double mp = std::sqrt(2.0) * mean.imag();
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
  Eigen::MatrixXd w(grid.x.size(), grid.p.size());
  for (Eigen::Index i = 0; i < grid.x.size(); ++i) {
    for (Eigen::Index j = 0; j < grid.p.size(); ++j) {
      const Eigen::Vector2d r(grid.x(i) - mx, grid.p(j) - mp);
      w(i, j) = norm * std::exp(-0.5 * r.dot(inv * r));
    }
  }
  return w;
}

void write_covariance_csv(std::ostream& out, const std::vector<CovarianceSnapshot>& snapshots) {
  if (snapshots.empty()) return;
  const auto m = snapshots.front().c.rows();
  out << "t";
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i; j < m; ++j) out << ",c_" << (i + 1) << '_' << (j + 1);
  out << '\n';
  const auto old = out.precision(17);
  for (const auto& s : snapshots) {
    out << s.t;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i; j < m; ++j) out << ',' << s.c(i, j);
    out << '\n';
  }
  out.precision(old);
}

void write_field_csv(std::ostream& out, const QuadratureGrid& grid, const Eigen::MatrixXd& w) {
  out << "x,p,W\n";
  const auto old = out.precision(12);
  for (Eigen::Index i = 0; i < grid.x.size(); ++i)
    for (Eigen::Index j = 0; j < grid.p.size(); ++j)
      out << grid.x(i) << ',' << grid.p(j) << ',' << w(i, j) << '\n';
  out.precision(old);
}

}  // namespace topsync
