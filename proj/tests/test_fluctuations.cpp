#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "topsync/errors.hpp"
#include "topsync/fluctuations.hpp"

using namespace topsync;
using cplx = std::complex<double>;

namespace {

std::shared_ptr<const CouplingMatrix> share(CouplingMatrix m) {
  return std::make_shared<const CouplingMatrix>(std::move(m));
}

// exp(B t) of a diagonalizable real matrix.
Eigen::MatrixXd expm(const Eigen::MatrixXd& b, double t) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(b);
  const Eigen::MatrixXcd v = es.eigenvectors();
  const Eigen::VectorXcd e = (es.eigenvalues() * t).array().exp();
  return (v * e.asDiagonal() * v.inverse()).real();
}

// Solves B X + X B^T + D = 0 by vectorization (column-major):
// vec(B X) = (I kron B) vec X, vec(X B^T) = (B kron I) vec X.
Eigen::MatrixXd lyapunov(const Eigen::MatrixXd& b, const Eigen::MatrixXd& d) {
  const auto n = b.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k.block(i * n, i * n, n, n) += b;
    for (Eigen::Index j = 0; j < n; ++j) k.block(i * n, j * n, n, n) += b(i, j) * id;
  }
  const Eigen::VectorXd x = k.fullPivLu().solve(-Eigen::Map<const Eigen::VectorXd>(d.data(), n * n));
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
}

}  // namespace

TEST_CASE("drift and diffusion blocks at the origin") {
  const FluctuationParams p{1.0, 5e-3, 1e-2, 1e-3};
  const CouplingMatrix m = build_custom(2, {{0, 1, 0.2}});
  const Eigen::MatrixXd b = build_drift(Eigen::VectorXcd::Zero(2), p, m);
  const double k1t = p.kappa1 - p.gamma_bar;
  CHECK(b(0, 0) == doctest::Approx(0.5 * k1t));
  CHECK(b(1, 1) == doctest::Approx(0.5 * k1t));
  CHECK(b(x_row(0), p_row(0)) == doctest::Approx(-1.0));
  CHECK(b(p_row(0), x_row(0)) == doctest::Approx(1.0));
  CHECK(b(x_row(0), p_row(1)) == doctest::Approx(0.2));
  CHECK(b(p_row(0), x_row(1)) == doctest::Approx(-0.2));
  const Eigen::MatrixXd d = build_diffusion(Eigen::VectorXcd::Constant(2, cplx(0.3, 0.4)), p);
  CHECK(d(0, 0) == doctest::Approx(0.5 * (p.kappa1 + p.gamma_bar + 4 * p.kappa2 * 0.25)));
  CHECK(d(0, 1) == 0.0);
}

TEST_CASE("amplitude-dependent drift entries") {
  const FluctuationParams p;
  const cplx a(0.3, 0.2);
  const Eigen::MatrixXd b = build_drift(Eigen::VectorXcd::Constant(1, a), p, build_custom(1, {}));
  const cplx a2 = a * a;
  CHECK(b(0, 0) == doctest::Approx(0.5 * (p.kappa1 - 4 * p.kappa2 * std::norm(a) - 2 * p.kappa2 * a2.real())));
  CHECK(b(1, 1) == doctest::Approx(0.5 * (p.kappa1 - 4 * p.kappa2 * std::norm(a) + 2 * p.kappa2 * a2.real())));
  CHECK(b(0, 1) == doctest::Approx(-p.omega0 - p.kappa2 * a2.imag()));
  CHECK(b(1, 0) == doctest::Approx(p.omega0 - p.kappa2 * a2.imag()));
}

TEST_CASE("constant-coefficient covariance matches the Lyapunov closed form") {
  // Mean field pinned at the origin: B, D constant, so
  // C(t) = X + e^{Bt} (C0 - X) e^{B^T t} with B X + X B^T + D = 0.
  const FluctuationParams p{1.0, 5e-3, 1e-2, 0.0};
  auto m = share(build_custom(3, {{0, 1, 0.2}, {1, 2, -0.15}}));
  const auto tr = integrate({0.0, Eigen::VectorXcd::Zero(3)}, p.mean_field(), m, 300.0, 0.1);
  const Eigen::MatrixXd b = build_drift(Eigen::VectorXcd::Zero(3), p, *m);
  const Eigen::MatrixXd d = build_diffusion(Eigen::VectorXcd::Zero(3), p);
  const Eigen::MatrixXd x = lyapunov(b, d);
  CHECK((b * x + x * b.transpose() + d).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd c0 = vacuum_covariance(3);
  double worst = 0.0;
  evolve_covariance(c0, tr, p, *m, 0.0, 300.0, [&](double t, const Eigen::MatrixXd& c) {
    const Eigen::MatrixXd e = expm(b, t);
    const Eigen::MatrixXd exact = x + e * (c0 - x) * e.transpose();
    worst = std::max(worst, (c - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff());
  });
  CHECK(worst < 1e-6);
}

TEST_CASE("physicality report on a limit-cycle run") {
  const FluctuationParams p;
  auto m = share(build_ssh(6, 0.25, 0.6));
  SolverOptions so;
  so.record_from = 1000.0;
  const auto tr = integrate(random_initial(6, 4), p.mean_field(), m, 1400.0, 0.1, so);
  PhysicalityReport rep;
  const auto snaps = evolve_covariance(vacuum_covariance(6), tr, p, *m, 1000.0, 1400.0, 100, &rep);
  CHECK(rep.ok());
  CHECK(rep.initial_is_vacuum);
  CHECK(rep.max_asymmetry < 1e-8);
  CHECK(rep.min_symplectic >= 0.5 - 1e-6);
  CHECK(rep.samples == 4001);
  CHECK(rep.symplectic_checks >= 20);
  CHECK(snaps.size() == 41);
  CHECK(snaps.front().t == doctest::Approx(1000.0));
  CHECK((snaps.front().c - vacuum_covariance(6)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("strict mode throws on unphysical covariance") {
  const FluctuationParams p;
  auto m = share(build_custom(1, {}));
  const auto tr = integrate({0.0, Eigen::VectorXcd::Constant(1, 0.5)}, p.mean_field(), m, 10.0, 0.1);
  CovarianceOptions o;
  o.strict = true;
  CHECK_THROWS_AS(evolve_covariance(0.3 * Eigen::MatrixXd::Identity(2, 2), tr, p, *m, 0.0, 10.0, nullptr, o),
                  PhysicalityError);
  o.strict = false;
  const auto rep = evolve_covariance(0.3 * Eigen::MatrixXd::Identity(2, 2), tr, p, *m, 0.0, 10.0, nullptr, o);
  CHECK_FALSE(rep.ok());
  CHECK(rep.violation_times.front() == doctest::Approx(0.0));
}

TEST_CASE("symplectic eigenvalues and the uncertainty relation") {
  CHECK(symplectic_eigenvalues(vacuum_covariance(3)).cwiseAbs().minCoeff() == doctest::Approx(0.5));
  Eigen::MatrixXd thermal = vacuum_covariance(2);
  thermal.block(2, 2, 2, 2) *= 3.0;
  auto nu = symplectic_eigenvalues(thermal);
  std::sort(nu.data(), nu.data() + nu.size());
  CHECK(nu(0) == doctest::Approx(0.5));
  CHECK(nu(1) == doctest::Approx(1.5));
  // squeezed vacuum keeps nu = 1/2
  Eigen::Matrix2d sq;
  sq << 0.5 * std::exp(-1.0), 0.0, 0.0, 0.5 * std::exp(1.0);
  CHECK(symplectic_eigenvalues(sq)(0) == doctest::Approx(0.5));
  CHECK(satisfies_uncertainty(sq, 0.5 - 1e-9));
  CHECK_FALSE(satisfies_uncertainty(0.4 * Eigen::MatrixXd::Identity(2, 2), 0.5 - 1e-6));
}

TEST_CASE("Gaussian Wigner function") {
  const auto grid = QuadratureGrid::square(6.0, 241);
  const double dx = grid.x(1) - grid.x(0);
  const Eigen::MatrixXd w = gaussian_wigner(Eigen::Matrix2d::Identity() * 0.5, cplx(0.4, -0.2), grid);
  CHECK(w.sum() * dx * dx == doctest::Approx(1.0).epsilon(1e-6));
  Eigen::Index r = 0, c = 0;
  w.maxCoeff(&r, &c);
  CHECK(grid.x(r) == doctest::Approx(std::sqrt(2.0) * 0.4).epsilon(0.05));
  CHECK(grid.p(c) == doctest::Approx(-std::sqrt(2.0) * 0.2).epsilon(0.05));
  const Eigen::MatrixXd w0 = gaussian_wigner(Eigen::Matrix2d::Identity() * 0.5, 0.0, QuadratureGrid::square(1.0, 3));
  CHECK(w0(1, 1) == doctest::Approx(1.0 / std::numbers::pi));
}

TEST_CASE("covariance CSV holds the upper triangle") {
  std::ostringstream out;
  write_covariance_csv(out, {{0.0, vacuum_covariance(2)}});
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(std::count(header.begin(), header.end(), ',') == 10);  // t + 10 entries
  CHECK(header.rfind("t,c_1_1", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == 10);
}
