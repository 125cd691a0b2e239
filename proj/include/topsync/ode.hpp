#pragma once

// Dormand–Prince 5(4) with the order-4 continuous extension, sampled onto a
// uniform output grid. Shared by the mean-field, covariance and Lindblad
// integrations; the state is any dense Eigen object.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "topsync/errors.hpp"

namespace topsync {

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_initial = 0.0;  // 0 selects the step automatically
  double h_max = 0.0;      // 0 means unbounded
  std::size_t max_steps = 500'000'000;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
};

namespace detail {

template <class State>
double error_norm(const State& err, const State& y0, const State& y1, double rtol,
                  double atol) {
  double sum = 0.0;
  const auto n = err.size();
  const auto* e = err.data();
  const auto* a = y0.data();
  const auto* b = y1.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double scale = atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
    const double r = std::abs(e[i]) / scale;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(std::max<Eigen::Index>(n, 1)));
}

struct NoPostStep {
  template <class State>
  bool operator()(double, State&) const {
    return false;
  }
};

}  // namespace detail

/// Integrates y' = rhs(t, y) from t0 to t_end. The observer is called as
/// observer(k, t_k, y(t_k)) for every grid point t_k = t0 + k*dt_out with
/// k_first <= k and t_k <= t_end (+ a rounding slack). post_step(t, y) may
/// project the accepted state and must return true when it modified y.
template <class State, class Rhs, class Observer, class PostStep = detail::NoPostStep>
OdeStats integrate_dense(Rhs&& rhs, State y, double t0, double t_end, double dt_out,
                         Observer&& observer, const OdeOptions& opts = {},
                         std::size_t k_first = 0, PostStep&& post_step = {}) {
  // Dormand–Prince coefficients.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                   d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                   d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

  if (!(dt_out > 0.0)) throw InvalidInput("integrate_dense: dt_out must be positive");
  if (t_end < t0) throw InvalidInput("integrate_dense: t_end < t0");

  OdeStats stats;
  const double slack = 1e-9 * dt_out;
  const auto k_last = static_cast<std::size_t>(std::floor((t_end - t0) / dt_out + 1e-9));
  std::size_t k_next = k_first;
  auto grid_time = [&](std::size_t k) { return t0 + static_cast<double>(k) * dt_out; };

  if (!y.allFinite()) throw IntegrationFailure("non-finite initial state", t0);
  post_step(t0, y);
  if (k_next == 0 && k_next <= k_last) {
    observer(std::size_t{0}, t0, static_cast<const State&>(y));
    ++k_next;
  }
  if (k_next > k_last || t_end == t0) return stats;

  State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y;
  State ytmp = y, ynew = y, err = y, r2 = y, r3 = y, r4 = y, r5 = y, ydense = y;

  double t = t0;
  rhs(t, y, k1);
  ++stats.rhs_evaluations;

  double h = opts.h_initial;
  if (h <= 0.0) {
    // Hairer's starting-step heuristic.
    const double d0 = detail::error_norm(y, y, y, opts.rtol, opts.atol);
    const double dd1 = detail::error_norm(k1, y, y, opts.rtol, opts.atol);
    double h0 = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
    h0 = std::min(h0, t_end - t0);
    ytmp = y + h0 * k1;
    rhs(t + h0, ytmp, k2);
    ++stats.rhs_evaluations;
    err = k2 - k1;
    const double d2 = detail::error_norm(err, y, y, opts.rtol, opts.atol) / h0;
    const double h1 = (std::max(dd1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                     : std::pow(0.01 / std::max(dd1, d2), 0.2);
    h = std::min(100 * h0, h1);
  }
  if (opts.h_max > 0.0) h = std::min(h, opts.h_max);

  double err_prev = 1e-4;
  while (t < t_end) {
    if (stats.accepted + stats.rejected >= opts.max_steps) {
      throw IntegrationFailure("maximum number of steps exceeded", t);
    }
    if (t + h > t_end) h = t_end - t;
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      std::ostringstream msg;
      msg << "step size underflow at t=" << t;
      throw IntegrationFailure(msg.str(), t);
    }

    ytmp = y + h * (a21 * k1);
    rhs(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, ytmp, k6);
    ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    rhs(t + h, ynew, k7);
    stats.rhs_evaluations += 6;

    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = detail::error_norm(err, y, ynew, opts.rtol, opts.atol);

    if (!std::isfinite(en)) {
      ++stats.rejected;
      h *= 0.2;
      continue;
    }
    if (en <= 1.0) {
      if (!ynew.allFinite()) throw IntegrationFailure("non-finite state", t);
      const double t_new = t + h;
      // Dense output over (t, t_new].
      if (k_next <= k_last && grid_time(k_next) <= t_new + slack) {
        r2 = ynew - y;
        r3 = h * k1 - r2;
        r4 = r2 - h * k7 - r3;
        r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        while (k_next <= k_last && grid_time(k_next) <= t_new + slack) {
          const double tk = grid_time(k_next);
          const double th = std::clamp((tk - t) / h, 0.0, 1.0);
          const double th1 = 1.0 - th;
          ydense = y + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
          observer(k_next, tk, static_cast<const State&>(ydense));
          ++k_next;
        }
      }
      y = ynew;
      t = t_new;
      ++stats.accepted;
      if (post_step(t, y)) {
        rhs(t, y, k1);
        ++stats.rhs_evaluations;
      } else {
        k1 = k7;
      }
      // PI step-size controller (Hairer & Wanner, beta = 0.04).
      const double en_safe = std::max(en, 1e-10);
      double fac = 0.9 * std::pow(en_safe, -0.7 / 5.0) * std::pow(err_prev, 0.04);
      fac = std::clamp(fac, 0.2, 10.0);
      err_prev = std::max(en, 1e-4);
      h *= fac;
      if (opts.h_max > 0.0) h = std::min(h, opts.h_max);
    } else {
      ++stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
    }
  }
  // Flush grid points that coincide with t_end within rounding.
  while (k_next <= k_last) {
    observer(k_next, grid_time(k_next), static_cast<const State&>(y));
    ++k_next;
  }
  return stats;
}

}  // namespace topsync
