#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "topsync/errors.hpp"
#include "topsync/measures.hpp"

using namespace topsync;
using cplx = std::complex<double>;

namespace {

// Trajectory with prescribed alpha_j(t) = a_j exp(-i w_j t + i phi_j) on [t0, t0 + span].
Trajectory synthetic(const std::vector<double>& amp, const std::vector<double>& freq,
                     const std::vector<double>& phase, double t0, double span, double dt) {
  const auto n = static_cast<Eigen::Index>(amp.size());
  const auto k = static_cast<Eigen::Index>(std::llround(span / dt)) + 1;
  Eigen::MatrixXcd s(n, k);
  for (Eigen::Index c = 0; c < k; ++c)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double t = t0 + static_cast<double>(c) * dt;
      s(j, c) = std::polar(amp[static_cast<std::size_t>(j)], -freq[static_cast<std::size_t>(j)] * t + phase[static_cast<std::size_t>(j)]);
    }
  return Trajectory(t0, dt, s, MeanFieldParams{}, std::make_shared<const CouplingMatrix>(build_custom(static_cast<int>(n), {})));
}

}  // namespace

TEST_CASE("S_c of independent vacua is 1/2") {
  const Eigen::MatrixXd c = 0.5 * Eigen::MatrixXd::Identity(4, 4);
  CHECK(s_c_instantaneous(c, 0, 1) == doctest::Approx(0.5));
}

TEST_CASE("S_c uses quadrature-difference variances") {
  // Var(x1 - x2) = c11 + c22 - 2 c12 etc.
  Eigen::MatrixXd c = 0.5 * Eigen::MatrixXd::Identity(4, 4);
  c(0, 2) = c(2, 0) = 0.2;   // <x1 x2>
  c(1, 3) = c(3, 1) = 0.1;   // <p1 p2>
  CHECK(s_c_instantaneous(c, 0, 1) == doctest::Approx(1.0 / ((1.0 - 0.4) + (1.0 - 0.2))));
  CHECK(s_c_instantaneous(c, 1, 0) == doctest::Approx(s_c_instantaneous(c, 0, 1)));
  CHECK_THROWS_AS(s_c_instantaneous(c, 1, 1), InvalidInput);
  Eigen::MatrixXd bad = c;
  bad(0, 2) = bad(2, 0) = 0.5;
  bad(1, 3) = bad(3, 1) = 0.5;
  CHECK_THROWS_AS(s_c_instantaneous(bad, 0, 1), PhysicalityError);
}

TEST_CASE("time average is a trapezoid over the window") {
  // Var(x1 - x2) = 1 + t/2, Var(p1 - p2) = 1  =>  S_c(t) = 1/(2 + t/2);
  // mean over [2, 8] = (1/3) ln 2
  std::vector<CovarianceSnapshot> snaps;
  for (int k = 0; k <= 200; ++k) {
    const double t = 0.05 * k;
    Eigen::MatrixXd c = 0.5 * Eigen::MatrixXd::Identity(4, 4);
    c(0, 0) = 0.5 + 0.5 * t;
    snaps.push_back({t, c});
  }
  CHECK(s_c_time_average(snaps, 0, 1, {2.0, 8.0}) == doctest::Approx(std::log(2.0) / 3.0).epsilon(1e-5));
  CHECK_THROWS_AS(s_c_time_average(snaps, 0, 1, {2.0, 11.0}), WindowError);
  CHECK_THROWS_AS(s_c_time_average(snaps, 0, 1, {-1.0, 5.0}), WindowError);

  const SyncMatrix batch = sync_matrix(snaps, {2.0, 8.0});
  SyncAccumulator acc(2, {2.0, 8.0}, 0.05);
  for (const auto& s : snaps) acc.add(s.t, s.c);
  const SyncMatrix stream = acc.result();
  CHECK(stream(0, 1) == doctest::Approx(batch(0, 1)).epsilon(1e-12));
  CHECK(std::isnan(stream(0, 0)));
  CHECK(stream(1, 0) == stream(0, 1));
}

TEST_CASE("accumulator needs the whole window") {
  SyncAccumulator acc(2, {0.0, 1.0}, 0.1);
  for (int k = 0; k <= 5; ++k) acc.add(0.1 * k, 0.5 * Eigen::MatrixXd::Identity(4, 4));
  CHECK_THROWS_AS(acc.result(), WindowError);
}

TEST_CASE("summary: bulk median, target ratios and the argmax") {
  SyncMatrix m;
  m.n = 5;
  m.values = Eigen::MatrixXd::Constant(5, 5, 0.2);
  m.values.diagonal().setConstant(std::numeric_limits<double>::quiet_NaN());
  m.values(0, 4) = m.values(4, 0) = 0.4;
  m.values(1, 2) = m.values(2, 1) = 0.1;
  const auto s = summarize(m, {1, 2, 3}, {{0, 4}});
  CHECK(s.argmax == std::pair<int, int>{0, 4});
  CHECK(s.max_value == doctest::Approx(0.4));
  CHECK(s.bulk_median == doctest::Approx(0.2));  // {0.1, 0.2, 0.2}
  CHECK(s.target_ratios.at(0) == doctest::Approx(2.0));
  CHECK(s.min_target_ratio == doctest::Approx(2.0));
  CHECK(s.max_ratio == doctest::Approx(2.0));
  CHECK(median({3.0, 1.0, 2.0, 10.0}) == doctest::Approx(2.5));
}

TEST_CASE("phase locking: equal frequencies lock, detuned ones drift") {
  const auto locked = synthetic({0.5, 0.3}, {1.0, 1.0}, {0.0, 0.7}, 0.0, 400.0, 0.1);
  const auto r = phase_lock_rate(locked, 0, 1, {0.0, 400.0});
  CHECK(r.locked);
  CHECK(std::abs(r.drift) < 1e-12);
  CHECK(r.offset == doctest::Approx(-0.7));

  const auto drifting = synthetic({0.5, 0.5}, {1.0, 1.002}, {0.0, 0.0}, 0.0, 400.0, 0.1);
  const auto d = phase_lock_rate(drifting, 0, 1, {0.0, 400.0});
  CHECK_FALSE(d.locked);
  CHECK(d.drift == doctest::Approx(0.002).epsilon(1e-6));  // phi_1 - phi_2 grows at w2 - w1

  const auto dead = synthetic({0.5, 0.0}, {1.0, 1.0}, {0.0, 0.0}, 0.0, 10.0, 0.1);
  CHECK_THROWS_AS(phase_lock_rate(dead, 0, 1, {0.0, 10.0}), PhaseUndefined);
}

TEST_CASE("sync matrix CSV leaves the diagonal empty") {
  SyncMatrix m;
  m.n = 2;
  m.values = Eigen::MatrixXd::Constant(2, 2, 0.3);
  m.values.diagonal().setConstant(std::numeric_limits<double>::quiet_NaN());
  std::ostringstream out;
  m.write_csv(out);
  CHECK(out.str().find("nan") == std::string::npos);
  CHECK(out.str().rfind("1,2\n", 0) == 0);
}
