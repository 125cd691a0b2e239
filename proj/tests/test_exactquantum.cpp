#include "doctest.h"

#include <cmath>
#include <numbers>

#include "topsync/errors.hpp"
#include "topsync/exactquantum.hpp"

using namespace topsync;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

// Steady-state <n> of k1 D[a^+] + k2 D[a^2] from the Fock-population rate
// equations (k1 = 5e-3, k2 = 1e-2), converged in the truncation.
constexpr double kOccupationOracle = 0.7005944177155765;

double wigner_at(const FockDensityMatrix& rho, double x, double p) {
  QuadratureGrid g;
  g.x = Eigen::VectorXd::Constant(1, x);
  g.p = Eigen::VectorXd::Constant(1, p);
  return wigner_single(rho, g)(0, 0);
}

}  // namespace

TEST_CASE("Wigner functions of reference states") {
  CHECK(wigner_at(vacuum_state(1, 20), 0.0, 0.0) == doctest::Approx(1.0 / kPi).epsilon(1e-10));
  CHECK(wigner_at(fock_state(20, 1), 0.0, 0.0) == doctest::Approx(-1.0 / kPi).epsilon(1e-10));
  CHECK(wigner_at(vacuum_state(1, 20), 1.0, 0.5) ==
        doctest::Approx(std::exp(-1.25) / kPi).epsilon(1e-10));

  const cplx beta(0.8, -0.3);
  const auto coh = coherent_state(30, beta);
  CHECK(wigner_at(coh, std::sqrt(2.0) * 0.8, -std::sqrt(2.0) * 0.3) ==
        doctest::Approx(1.0 / kPi).epsilon(1e-8));

  const auto grid = QuadratureGrid::square(5.0, 201);
  const Eigen::MatrixXd w = wigner_single(coh, grid);
  const double h = grid.x(1) - grid.x(0);
  CHECK(w.sum() * h * h == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(wigner_single(vacuum_state(2, 5), grid), InvalidInput);
}

TEST_CASE("Lindbladian preserves trace and Hermiticity") {
  ExactParams p;
  p.lambda = 0.2;
  p.gamma_bar = 1e-3;
  const ExactModel model(2, 6, p);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Random(model.size(), model.size());
  rho = rho * rho.adjoint();
  rho /= rho.trace();
  const Eigen::MatrixXcd d = lindblad_rhs(rho, model);
  CHECK(std::abs(d.trace()) < 1e-12);
  CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("linear gain against loss relaxes to a thermal state") {
  ExactParams p;
  p.kappa1 = 0.01;
  p.kappa2 = 0.0;
  p.gamma_bar = 0.05;
  const ExactModel model(1, 25, p);
  SteadyStateReport rep;
  const auto ss = steady_state(model, &rep);
  CHECK(mean_occupation(ss, model, 0) == doctest::Approx(0.01 / (0.05 - 0.01)).epsilon(1e-9));
  CHECK(rep.truncation_ok);
  CHECK(rep.residual < 1e-12);
}

TEST_CASE("pure loss damps a coherent amplitude") {
  ExactParams p;
  p.kappa1 = 0.0;
  p.kappa2 = 0.0;
  p.gamma_bar = 0.1;
  const ExactModel model(1, 20, p);
  const cplx a0(1.0, 0.0);
  std::vector<FockDensityMatrix> states;
  evolve_exact(coherent_state(20, a0), model, 5.0, 1.0,
               [&](const FockDensityMatrix& r) { states.push_back(r); });
  REQUIRE(states.size() == 6);
  for (const auto& s : states) {
    const cplx expect = a0 * std::exp(cplx(-0.05 * s.t, -s.t));
    CHECK(std::abs(expectation(s, model.a(0)) - expect) < 1e-6);
    CHECK(min_eigenvalue(s) > -1e-8);  // integrator tolerance
  }
}

TEST_CASE("single-oscillator steady state") {
  const ExactParams p;
  const ExactModel m20(1, 20, p), m30(1, 30, p);
  SteadyStateReport rep;
  const auto s20 = steady_state(m20, &rep);
  const auto s30 = steady_state(m30);
  CHECK(mean_occupation(s20, m20, 0) == doctest::Approx(kOccupationOracle).epsilon(1e-10));
  CHECK(mean_occupation(s30, m30, 0) == doctest::Approx(kOccupationOracle).epsilon(1e-10));
  CHECK(rep.leakage < 1e-6);
  CHECK(min_eigenvalue(s20) > -1e-10);
  // radial Wigner profile peaks near the classical radius 0.5 but sits outside it
  const Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(401, 0.0, 2.0);
  const Eigen::VectorXd w = wigner_radial_profile(s20, r);
  Eigen::Index k = 0;
  w.maxCoeff(&k);
  CHECK(r(k) > 0.5);
  CHECK(r(k) < 1.0);
}

TEST_CASE("time evolution approaches the steady state") {
  const ExactParams p;
  const ExactModel model(1, 20, p);
  FockDensityMatrix last;
  evolve_exact(vacuum_state(1, 20), model, 3000.0, 1000.0,
               [&](const FockDensityMatrix& r) { last = r; });
  CHECK(last.t == doctest::Approx(3000.0));
  CHECK(mean_occupation(last, model, 0) == doctest::Approx(kOccupationOracle).epsilon(1e-4));
}

TEST_CASE("two-mode measures") {
  CHECK(s_c_exact(vacuum_state(2, 6)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(s_c_exact(vacuum_state(1, 6)), InvalidInput);
  CHECK_THROWS_AS(ExactModel(2, kMaxTwoModeDim + 1, ExactParams{}), InvalidInput);
  ExactParams bad;
  bad.kappa1 = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidSpec);

  const std::vector<FockDensityMatrix> seq{vacuum_state(2, 4), vacuum_state(2, 4)};
  auto seq2 = seq;
  seq2[1].t = 1.0;
  CHECK(s_c_exact(seq2, 0.0, 1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(s_c_exact(seq2, 0.0, 2.0), WindowError);
}

TEST_CASE("phase-difference marginal: flat uncoupled, peaked in-phase and anti-phase when coupled") {
  ExactParams p;
  p.lambda = 0.0;
  const auto flat = steady_state(ExactModel(2, 10, p));
  const auto m0 = phase_difference_marginal(flat, 64);
  const double bw = 2.0 * kPi / 64;
  CHECK(m0.density.sum() * bw == doctest::Approx(1.0).epsilon(1e-9));
  CHECK((m0.density.array() - 1.0 / (2.0 * kPi)).abs().maxCoeff() < 1e-8);

  p.lambda = 0.5;
  const auto coupled = steady_state(ExactModel(2, 10, p));
  const auto m1 = phase_difference_marginal(coupled, 64);
  const auto at = [&](double phi) {
    Eigen::Index best = 0;
    (m1.phi.array() - phi).abs().minCoeff(&best);
    return m1.density(best);
  };
  CHECK(m1.density.sum() * bw == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(at(0.0) > at(kPi / 2));
  CHECK(at(-kPi) > at(kPi / 2));
  CHECK(at(0.0) == doctest::Approx(at(-kPi)).epsilon(1e-6));
  CHECK(s_c_exact(coupled) > s_c_exact(flat));
}
