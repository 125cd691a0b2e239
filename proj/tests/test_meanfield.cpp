#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "topsync/errors.hpp"
#include "topsync/meanfield.hpp"

using namespace topsync;
using cplx = std::complex<double>;

namespace {

std::shared_ptr<const CouplingMatrix> share(CouplingMatrix m) {
  return std::make_shared<const CouplingMatrix>(std::move(m));
}

// Kolmogorov-Smirnov distance of a sample against U(lo, hi).
double ks_uniform(std::vector<double> x, double lo, double hi) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = (x[i] - lo) / (hi - lo);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace

TEST_CASE("single oscillator follows the closed-form radial solution") {
  // r' = (k1/2) r - k2 r^3  =>  r^2(t) = A^2 / (1 + (A^2/r0^2 - 1) e^{-k1 t}),  phase = -omega0 t
  const MeanFieldParams p;
  const double r0 = 0.05, a2 = p.kappa1 / (2.0 * p.kappa2);
  for (bool rotating : {true, false}) {
    SolverOptions o;
    o.rotating_frame = rotating;
    const auto tr = integrate({0.0, Eigen::VectorXcd::Constant(1, r0)}, p, share(build_custom(1, {})), 3000.0, 0.5, o);
    double err_r = 0.0, err_phase = 0.0;
    for (std::size_t k = 0; k < tr.samples(); ++k) {
      const double t = tr.time(k);
      const double r = std::sqrt(a2 / (1.0 + (a2 / (r0 * r0) - 1.0) * std::exp(-p.kappa1 * t)));
      err_r = std::max(err_r, std::abs(std::abs(tr.alpha(k, 0)) - r));
      err_phase = std::max(err_phase, std::abs(std::arg(tr.alpha(k, 0) * std::polar(1.0, p.omega0 * t))));
    }
    CHECK(err_r < 1e-6);
    CHECK(err_phase < 1e-6);
    CHECK(std::abs(tr.alpha(tr.samples() - 1, 0)) == doctest::Approx(0.5).epsilon(2e-5));
  }
  CHECK(p.limit_cycle_radius() == doctest::Approx(0.5));
}

TEST_CASE("analytic Jacobian matches central finite differences") {
  const MeanFieldParams p;
  const CouplingMatrix m = apply_disorder(build_ssh(6, 0.25, 0.3), {0.05, 3});
  const Eigen::VectorXcd a = random_initial(6, 77).alpha * 1.5;
  const Eigen::MatrixXd jac = drift_jacobian(a, p, m);
  const double h = 1e-6;
  double worst = 0.0;
  for (int k = 0; k < 12; ++k) {
    Eigen::VectorXcd up = a, dn = a;
    const cplx step = (k % 2 == 0) ? cplx(h, 0.0) : cplx(0.0, h);
    up(k / 2) += step;
    dn(k / 2) -= step;
    const Eigen::VectorXcd df = (drift(up, p, m) - drift(dn, p, m)) / (2.0 * h);
    for (int j = 0; j < 6; ++j) {
      worst = std::max(worst, std::abs(df(j).real() - jac(2 * j, k)));
      worst = std::max(worst, std::abs(df(j).imag() - jac(2 * j + 1, k)));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("linear stability eigenvalues are -i(omega0 + mu) + kappa1/2") {
  const MeanFieldParams p;
  const CouplingMatrix m = build_ssh(8, 0.25, 0.5);
  const auto dec = eigendecompose(m);
  const auto rep = jacobian_eigenvalues(p, dec);
  for (int l = 0; l < 8; ++l) {
    CHECK(rep.growth_rates()(l) == doctest::Approx(p.kappa1 / 2));
    CHECK(rep.frequencies()(l) == doctest::Approx(p.omega0 + dec.eigenvalues(l)));
  }
  // the real Jacobian at the origin carries the same spectrum (plus conjugates)
  Eigen::EigenSolver<Eigen::MatrixXd> es(drift_jacobian(Eigen::VectorXcd::Zero(8), p, m));
  std::vector<double> freqs;
  for (int i = 0; i < 16; ++i) {
    CHECK(es.eigenvalues()(i).real() == doctest::Approx(p.kappa1 / 2));
    if (es.eigenvalues()(i).imag() < 0) freqs.push_back(-es.eigenvalues()(i).imag());
  }
  std::sort(freqs.begin(), freqs.end());
  REQUIRE(freqs.size() == 8);
  for (int l = 0; l < 8; ++l) CHECK(freqs[static_cast<std::size_t>(l)] == doctest::Approx(p.omega0 + dec.eigenvalues(l)));
}

TEST_CASE("small amplitudes follow the linear eigenmode prediction") {
  const MeanFieldParams p;
  auto m = share(build_ssh(10, 0.25, -0.4));
  const auto dec = eigendecompose(*m);
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(10);
  c(2) = 1e-4;
  c(7) = cplx(0.0, 5e-5);
  const Eigen::VectorXcd a0 = dec.eigenvectors.cast<cplx>() * c;
  const auto tr = integrate({0.0, a0}, p, m, 50.0, 0.5);
  // the predictor carries the mode content; linear growth is exp(kappa1 t / 2)
  const Eigen::VectorXcd pred = std::exp(p.kappa1 * 25.0) * linear_prediction(c, dec, p, 50.0);
  CHECK((tr.state(tr.samples() - 1) - pred).norm() / pred.norm() < 1e-6);
}

TEST_CASE("trivial-phase eigenstate relaxes onto one frequency") {
  const MeanFieldParams p;
  auto m = share(build_ssh(20, 0.25, -0.8));
  const auto dec = eigendecompose(*m);
  SolverOptions o;
  o.record_from = 4000.0;
  const auto tr = integrate({0.0, make_initial_state(EigenstateInit{3, 0.3}, *m)}, p, m, 4100.0, 0.1, o);
  // alpha(t) ~ c v e^{-i(omega0 + mu) t}: ratio of consecutive samples is nearly a pure
  // phase; saturation perturbs the frequency at O(kappa)
  const cplx expect = std::polar(1.0, -(p.omega0 + dec.eigenvalues(3)) * 0.1);
  const Eigen::VectorXd v = dec.eigenvectors.col(3);
  const Eigen::VectorXcd a = tr.state(500);
  const double scale = a.norm();
  for (int j = 0; j < 20; ++j) {
    const cplx ratio = tr.alpha(500, j) / tr.alpha(499, j);
    CHECK(std::abs(ratio - expect) < 1e-5);
    CHECK(std::abs(std::abs(a(j)) - scale * std::abs(v(j))) < 0.05 * scale * v.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("random initial conditions are uniform in amplitude and phase") {
  // 20 seeds at the 1% level: P(more than 2 rejections per variable) ~ 1e-3
  const double crit = 1.63 / std::sqrt(4000.0);
  int rejected_amp = 0, rejected_phase = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = random_initial(4000, seed);
    std::vector<double> amp, phase;
    for (int j = 0; j < 4000; ++j) {
      amp.push_back(std::abs(s.alpha(j)));
      double ph = std::arg(s.alpha(j));
      if (ph < 0) ph += 2.0 * std::numbers::pi;
      phase.push_back(ph);
    }
    rejected_amp += ks_uniform(amp, 0.0, 0.5) >= crit;
    rejected_phase += ks_uniform(phase, 0.0, 2.0 * std::numbers::pi) >= crit;
  }
  CHECK(rejected_amp <= 2);
  CHECK(rejected_phase <= 2);
  CHECK((random_initial(10, 5).alpha - random_initial(10, 5).alpha).norm() == 0.0);
}

TEST_CASE("integration is deterministic and the grid is exact") {
  const MeanFieldParams p;
  auto m = share(build_ssh(20, 0.25, 0.6));
  SolverOptions o;
  o.record_from = 100.0;
  const auto a = integrate(random_initial(20, 3), p, m, 200.0, 0.1, o);
  const auto b = integrate(random_initial(20, 3), p, m, 200.0, 0.1, o);
  CHECK((a.states() - b.states()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.t0() == doctest::Approx(100.0));
  CHECK(a.samples() == 1001);
  CHECK(a.time(1000) == doctest::Approx(200.0));
  const auto [k0, k1] = a.window_indices(150.0, 160.0);
  CHECK(k0 == 500);
  CHECK(k1 == 600);
  CHECK_THROWS_AS(a.window_indices(50.0, 160.0), WindowError);
  CHECK_THROWS_AS(a.window_indices(150.0, 260.0), WindowError);
}

TEST_CASE("rotating and lab frames agree") {
  const MeanFieldParams p;
  auto m = share(build_ssh(8, 0.25, 0.5));
  SolverOptions lab;
  lab.rotating_frame = false;
  const auto a = integrate(random_initial(8, 1), p, m, 300.0, 0.2);
  const auto b = integrate(random_initial(8, 1), p, m, 300.0, 0.2, lab);
  CHECK((a.states() - b.states()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("solver rejects undersampled grids and non-finite states") {
  const MeanFieldParams p;
  auto m = share(build_ssh(20, 0.25, 0.6));
  CHECK_THROWS_AS(integrate(random_initial(20, 1), p, m, 10.0, 3.0), InvalidInput);
  Eigen::VectorXcd bad = Eigen::VectorXcd::Zero(20);
  bad(3) = cplx(std::nan(""), 0.0);
  CHECK_THROWS_AS(integrate({0.0, bad}, p, m, 10.0, 0.1), IntegrationFailure);
  CHECK_THROWS_AS((MeanFieldParams{1.0, -1e-3, 1e-2}.validate()), InvalidSpec);
}

TEST_CASE("parameter warnings") {
  CHECK(MeanFieldParams{}.warnings().empty());
  const auto w = MeanFieldParams{1.0, 2e-2, 1e-2}.warnings();
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("weakly nonlinear") != std::string::npos);
}

TEST_CASE("trajectory CSV layout") {
  const auto tr = integrate({0.0, Eigen::VectorXcd::Constant(2, 0.1)}, MeanFieldParams{},
                            share(build_custom(2, {{0, 1, 0.1}})), 1.0, 0.5);
  std::ostringstream out;
  tr.write_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,re_1,im_1,re_2,im_2");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
  const auto amp = amplitude_series(tr, 1);
  CHECK(amp.size() == 3);
  CHECK(amp[0] == doctest::Approx(0.1));
}
