#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "topsync/errors.hpp"
#include "topsync/lattice.hpp"

using namespace topsync;

TEST_CASE("coupling matrices are exactly symmetric with zero diagonal") {
  const CouplingMatrix ssh = build_ssh(20, 0.25, 0.6);
  const CouplingMatrix kag = build_kagome(5, -0.025, 0.25);
  for (const auto* m : {&ssh, &kag}) {
    CHECK((m->entries() - m->entries().transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m->entries().diagonal().cwiseAbs().maxCoeff() == 0.0);
  }
  const auto d = apply_disorder(kag, {0.1, 42});
  CHECK((d.entries() - d.entries().transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("SSH bonds alternate lambda0 -+ delta") {
  const CouplingMatrix m = build_ssh(6, 0.25, 0.4);
  CHECK(m(0, 1) == doctest::Approx(0.15));
  CHECK(m(1, 2) == doctest::Approx(0.35));
  CHECK(m(4, 5) == doctest::Approx(0.15));
  CHECK(m(0, 2) == 0.0);
  CHECK(m.bonds().size() == 5);
}

TEST_CASE("uniform chain matches the closed-form tight-binding spectrum") {
  // mu_k = 2 lambda0 cos(k pi / (N + 1))
  const int n = 20;
  const auto dec = eigendecompose(build_ssh(n, 0.25, 0.0));
  std::vector<double> exact;
  for (int k = 1; k <= n; ++k) exact.push_back(0.5 * std::cos(k * std::numbers::pi / (n + 1)));
  std::sort(exact.begin(), exact.end());
  for (int k = 0; k < n; ++k) CHECK(dec.eigenvalues(k) == doctest::Approx(exact[static_cast<std::size_t>(k)]).epsilon(1e-12));
}

TEST_CASE("SSH spectrum is chiral-symmetric") {
  for (double d : {-0.8, -0.4, 0.2, 0.6, 0.8}) {
    const auto ev = eigendecompose(build_ssh(20, 0.25, d)).eigenvalues;
    const Eigen::VectorXd mirrored = -ev.reverse();
    CHECK((ev - mirrored).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("SSH zero modes exist only in the topological phase") {
  const double tol = 1e-3 * 0.25;
  for (double d : {0.4, 0.6, 0.8}) {
    const auto dec = eigendecompose(build_ssh(20, 0.25, d));
    CHECK(count_zero_modes(dec, tol) == 2);
    CHECK(dec.zero_mode_indices.size() == 2);
  }
  for (double d : {-0.2, -0.4, -0.6, -0.8}) CHECK(count_zero_modes(eigendecompose(build_ssh(20, 0.25, d)), tol) == 0);
}

TEST_CASE("finite-size edge splitting at weak dimerization") {
  // two edge levels at +-2.89e-3 omega0 for delta = 0.2 lambda0 (independent dense eigensolve)
  const auto ev = eigendecompose(build_ssh(20, 0.25, 0.2)).eigenvalues;
  CHECK(std::abs(ev(10)) == doctest::Approx(2.8947e-3).epsilon(1e-3));
  CHECK(ev(9) == doctest::Approx(-ev(10)).epsilon(1e-10));
}

TEST_CASE("edge modes localize on the chain ends") {
  const auto dec = eigendecompose(build_ssh(20, 0.25, 0.8));
  for (int idx : dec.zero_mode_indices) {
    const Eigen::VectorXd v = dec.eigenvectors.col(idx);
    CHECK(v(0) * v(0) + v(19) * v(19) > 0.45);
  }
}

TEST_CASE("Kagome flake geometry and corner modes") {
  CHECK(kagome_site_count(5) == 45);
  const auto reg = kagome_regions(5);
  CHECK(reg.corners == std::vector<int>{0, 1, 2});
  CHECK(reg.edges.size() == 24);
  CHECK(reg.bulk.size() == 18);
  CHECK(reg.bulk.front() == 27);

  const CouplingMatrix m = build_kagome(5, -0.0125, 0.25);
  // coordination: corners 2, boundary 3 (truncated inter-cell triangle), bulk 4
  for (int j = 0; j < 45; ++j) {
    int deg = 0;
    for (int k = 0; k < 45; ++k) deg += m(j, k) != 0.0;
    CHECK(deg == (j < 3 ? 2 : j < 27 ? 3 : 4));
  }
  const auto dec = eigendecompose(m);
  CHECK(count_zero_modes(dec, 1e-6 * 0.25) == 3);
  for (int idx : dec.zero_mode_indices) {
    const Eigen::VectorXd v = dec.eigenvectors.col(idx);
    CHECK(v.head(3).squaredNorm() > 0.8);
  }
}

TEST_CASE("Kagome corner energies at lambda1 = -0.1 lambda2") {
  const auto dec = eigendecompose(build_kagome(5, -0.025, 0.25));
  std::vector<double> e;
  for (int k = 0; k < dec.eigenvalues.size(); ++k)
    if (std::abs(dec.eigenvalues(k)) < 1e-4) e.push_back(std::abs(dec.eigenvalues(k)));
  std::sort(e.begin(), e.end());
  REQUIRE(e.size() == 3);
  CHECK(e[0] == doctest::Approx(2.72e-6).epsilon(0.01));
  CHECK(e[1] == doctest::Approx(2.72e-6).epsilon(0.01));
  CHECK(e[2] == doctest::Approx(5.45e-6).epsilon(0.01));
  CHECK(count_zero_modes(dec, 1e-3 * 0.25) == 3);
}

TEST_CASE("Kagome trivial phase has no zero modes") {
  for (double ratio : {-1.2, -1.3, -1.5})
    CHECK(count_zero_modes(eigendecompose(build_kagome(5, ratio * 0.25, 0.25)), 1e-3 * 0.25) == 0);
}

TEST_CASE("disorder is reproducible, bounded and bond-preserving") {
  const CouplingMatrix base = build_ssh(20, 0.25, 0.8);
  const auto a = apply_disorder(base, {0.1, 9});
  const auto b = apply_disorder(base, {0.1, 9});
  const auto c = apply_disorder(base, {0.1, 10});
  CHECK((a.entries() - b.entries()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.entries() - c.entries()).cwiseAbs().maxCoeff() > 0.0);
  CHECK((a.entries() - base.entries()).cwiseAbs().maxCoeff() <= 0.1);
  for (int j = 0; j < 20; ++j)
    for (int k = 0; k < 20; ++k)
      if (base(j, k) == 0.0) CHECK(a(j, k) == 0.0);
  CHECK((apply_disorder(base, {0.0, 9}).entries() - base.entries()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("invalid lattice specs are rejected") {
  CHECK_THROWS_AS(build_ssh(21, 0.25, 0.1), InvalidSpec);
  CHECK_THROWS_AS(build_kagome(5, 0.1, 0.25), InvalidSpec);
  CHECK_THROWS_AS(build_custom(2, {{0, 0, 0.1}}), Error);
  CHECK_THROWS_AS(build_custom(2, {{0, 2, 0.1}}), Error);
  CHECK_THROWS_AS(apply_disorder(build_ssh(4, 0.25, 0.1), {-0.1, 1}), InvalidSpec);
}

TEST_CASE("coupling CSV has a label header and one row per site") {
  std::ostringstream out;
  build_ssh(4, 0.25, 0.2).write_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "1,2,3,4");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}
