#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "topsync/errors.hpp"
#include "topsync/spectral.hpp"

using namespace topsync;
using cplx = std::complex<double>;

namespace {

Eigen::VectorXcd tones(const std::vector<std::pair<double, cplx>>& parts, std::size_t m, double dt) {
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k)
    for (const auto& [w, a] : parts) x(static_cast<Eigen::Index>(k)) += a * std::exp(cplx(0.0, -w * dt * static_cast<double>(k)));
  return x;
}

}  // namespace

TEST_CASE("resolution and sign convention") {
  const double dt = 0.1;
  const std::size_t m = 40000;
  const double dw = 2.0 * std::numbers::pi / (m * dt);
  const double w = 1.0 + 0.3 * dw;
  const auto s = dft_signal(tones({{w, 1.0}}, m, dt), dt);
  CHECK(s.resolution == doctest::Approx(dw));
  CHECK(s.resolution == doctest::Approx(1.5708e-3).epsilon(1e-4));
  CHECK(dominant_frequency(s) == doctest::Approx(w).epsilon(0.25 * dw));
  CHECK(s.omega.minCoeff() >= 0.0);
  CHECK(s.omega.maxCoeff() <= 2.0);
}

TEST_CASE("bin-centred unit tone has unit amplitude") {
  const double dt = 0.1;
  const std::size_t m = 4096;
  const double dw = 2.0 * std::numbers::pi / (m * dt);
  for (bool hann : {true, false}) {
    SpectrumOptions o;
    o.hann = hann;
    const auto s = dft_signal(tones({{60 * dw, cplx(0.0, 0.7)}}, m, dt), dt, o);
    CHECK(s.amplitude.maxCoeff() == doctest::Approx(0.7).epsilon(1e-9));
  }
}

TEST_CASE("Parseval: rectangular window over the full band") {
  const double dt = 0.1;
  const std::size_t m = 2048;
  Eigen::VectorXcd x(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) x(static_cast<Eigen::Index>(k)) = cplx(std::sin(0.37 * k) + 0.1 * k / m, std::cos(0.11 * k * k / m));
  SpectrumOptions o;
  o.hann = false;
  o.band_lo = 0.0;
  o.band_hi = 0.0;  // keep every bin
  const auto s = dft_signal(x, dt, o);
  CHECK(s.omega.size() == static_cast<Eigen::Index>(m));
  // amplitude = |X_k| / M  =>  sum amplitude^2 = sum |x|^2 / M
  CHECK(s.amplitude.squaredNorm() == doctest::Approx(x.squaredNorm() / m).epsilon(1e-10));
}

TEST_CASE("beat of two tones resolves into two peaks") {
  // |a e^{-i w1 t} + b e^{-i w2 t}|^2 beats at w2 - w1; the spectrum holds both lines
  const double dt = 0.1;
  const std::size_t m = 40000;
  const double dw = 2.0 * std::numbers::pi / (m * dt);
  const double w1 = 600 * dw, w2 = 640 * dw;
  const auto s = dft_signal(tones({{w1, 0.3}, {w2, 0.5}}, m, dt), dt);
  const auto peaks = find_peaks(s);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[0].frequency == doctest::Approx(w1).epsilon(0.5 * s.resolution));
  CHECK(peaks[1].frequency == doctest::Approx(w2).epsilon(0.5 * s.resolution));
  CHECK(peaks[1].amplitude / peaks[0].amplitude == doctest::Approx(5.0 / 3.0).epsilon(0.05));

  const auto hit = detect_peak(s, w2);
  CHECK(hit.detected);
  CHECK(std::abs(hit.bin_offset) <= 1.0);
  CHECK_FALSE(detect_peak(s, 1.3).detected);
}

TEST_CASE("trajectory spectra average site magnitudes over the window") {
  const MeanFieldParams p;
  auto m = std::make_shared<const CouplingMatrix>(build_custom(2, {}));
  const auto tr = integrate({0.0, Eigen::VectorXcd::Constant(2, 0.5)}, p, m, 1000.0, 0.1);
  const auto s = dft_spectrum(tr, {}, {200.0, 1000.0});
  CHECK(s.window_samples == 8001);
  CHECK(dominant_frequency(s) == doctest::Approx(1.0).epsilon(0.5 * s.resolution));
  CHECK(s.amplitude.maxCoeff() == doctest::Approx(0.5).epsilon(0.2));
  CHECK_THROWS_AS(dft_spectrum(tr, {}, {200.0, 1200.0}), WindowError);
  CHECK_THROWS_AS(dft_spectrum(tr, {5}, {200.0, 1000.0}), InvalidInput);
}

TEST_CASE("single-cell ensemble equals the direct spectral call") {
  const MeanFieldParams p;
  EnsembleOptions o;
  o.t_rel = 200.0;
  o.window = {200.0, 600.0};
  o.master_seed = 99;
  o.peak_targets = {1.0};
  const auto family = [](double d) { return build_ssh(8, 0.25, d); };
  const auto res = reconstruct_spectrum_sweep("dimerization", {0.6}, family, p, 1, o);
  REQUIRE(res.failures.empty());
  auto m = std::make_shared<const CouplingMatrix>(family(0.6));
  SolverOptions so;
  so.record_from = 200.0;
  const auto tr = integrate(random_initial(8, res.ic_seeds[0][0]), p, m, 600.0, 0.1, so);
  const auto direct = dft_spectrum(tr, {}, o.window);
  CHECK((res.map.row(0).amplitude - direct.amplitude).cwiseAbs().maxCoeff() == 0.0);
  CHECK(res.peaks[0][0].size() == 1);
}

TEST_CASE("ensembles are reproducible across thread counts and seed streams are disjoint") {
  const MeanFieldParams p;
  EnsembleOptions o;
  o.t_rel = 100.0;
  o.window = {100.0, 300.0};
  o.master_seed = 5;
  const CouplingMatrix base = build_ssh(8, 0.25, 0.8);
  o.jobs = 1;
  const auto a = disorder_sweep(base, p, {0.0, 0.1}, 3, o);
  o.jobs = 3;
  const auto b = disorder_sweep(base, p, {0.0, 0.1}, 3, o);
  CHECK((a.map.amplitude - b.map.amplitude).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.ic_seeds == b.ic_seeds);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t r = 0; r < 3; ++r) CHECK(a.ic_seeds[c][r] != a.disorder_seeds[c][r]);
  // more realizations leave the existing draws unchanged
  const auto more = disorder_sweep(base, p, {0.0, 0.1}, 4, o);
  CHECK(more.ic_seeds[1][2] == a.ic_seeds[1][2]);
  CHECK(more.disorder_seeds[1][2] == a.disorder_seeds[1][2]);
  CHECK_THROWS_AS(disorder_sweep(base, p, {-0.1}, 1, o), InvalidSpec);
}

TEST_CASE("spectrum map CSV is long format") {
  SpectrumMap map;
  map.control_name = "r";
  map.control = {0.0, 0.1};
  map.omega = Eigen::VectorXd::LinSpaced(3, 0.9, 1.1);
  map.amplitude = Eigen::MatrixXd::Ones(2, 3);
  map.realizations = {1, 1};
  std::ostringstream out;
  map.write_csv(out);
  const std::string s = out.str();
  CHECK(s.rfind("r,omega,amplitude\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 7);
}
