#include "topsync/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "topsync/errors.hpp"

namespace topsync {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_pair(const Eigen::MatrixXd& c, int j, int k) {
  if (j == k) throw InvalidInput("S_c is undefined for j == k");
  const int n = static_cast<int>(c.rows() / 2);
  if (j < 0 || k < 0 || j >= n || k >= n) throw InvalidInput("S_c: site index out of range");
}

double s_c_unchecked(const Eigen::MatrixXd& c, int j, int k) {
  const int xj = x_row(j), pj = p_row(j), xk = x_row(k), pk = p_row(k);
  const double denom = c(xj, xj) + c(xk, xk) - 2.0 * c(xj, xk) + c(pj, pj) + c(pk, pk) -
                       2.0 * c(pj, pk);
  if (!(denom > 0.0)) {
    std::ostringstream msg;
    msg << "S_c denominator " << denom << " is not positive";
    throw PhysicalityError(msg.str());
  }
  return 1.0 / denom;
}

void validate_window(const TimeWindow& w) {
  if (!(w.t_f > w.t_i)) throw WindowError("window needs t_f > t_i");
}

// Trapezoid weight of a sample at t on a uniform grid clipped to the window.
double trapezoid_weight(double t, const TimeWindow& w, double dt) {
  const double eps = 1e-9 * dt;
  if (t < w.t_i - eps || t > w.t_f + eps) return 0.0;
  if (std::abs(t - w.t_i) <= eps || std::abs(t - w.t_f) <= eps) return 0.5 * dt;
  return dt;
}

}  // namespace

double s_c_instantaneous(const Eigen::MatrixXd& c, int j, int k) {
  check_pair(c, j, k);
  return s_c_unchecked(c, j, k);
}

double median(std::vector<double> v) {
  if (v.empty()) throw InvalidInput("median of an empty set");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

SyncAccumulator::SyncAccumulator(int n_sites, TimeWindow window, double dt)
    : n_(n_sites), window_(window), dt_(dt), sum_(Eigen::MatrixXd::Zero(n_sites, n_sites)) {
  validate_window(window);
  if (!(dt > 0.0)) throw InvalidInput("SyncAccumulator: dt must be positive");
}

void SyncAccumulator::add(double t, const Eigen::MatrixXd& c) {
  const double w = trapezoid_weight(t, window_, dt_);
  if (w == 0.0) return;
  if (c.rows() != 2 * n_) throw InvalidInput("SyncAccumulator: covariance size mismatch");
  if (count_ > 0 && std::abs(t - last_t_ - dt_) > 1e-6 * dt_) {
    throw InvalidInput("SyncAccumulator: samples must be uniform and in order");
  }
  if (count_ == 0) first_t_ = t;
  last_t_ = t;
  ++count_;
  for (int j = 0; j < n_; ++j)
    for (int k = j + 1; k < n_; ++k) sum_(j, k) += w * s_c_unchecked(c, j, k);
}

SyncMatrix SyncAccumulator::result() const {
  const double eps = 1e-6 * dt_;
  if (count_ < 2 || std::abs(first_t_ - window_.t_i) > eps || std::abs(last_t_ - window_.t_f) > eps) {
    std::ostringstream msg;
    msg << "samples [" << first_t_ << ", " << last_t_ << "] do not cover window [" << window_.t_i
        << ", " << window_.t_f << "] on the sampling grid";
    throw WindowError(msg.str());
  }
  SyncMatrix m;
  m.n = n_;
  m.window = window_;
  m.values = Eigen::MatrixXd::Constant(n_, n_, kNaN);
  const double span = window_.t_f - window_.t_i;
  for (int j = 0; j < n_; ++j) {
    for (int k = j + 1; k < n_; ++k) {
      m.values(j, k) = sum_(j, k) / span;
      m.values(k, j) = m.values(j, k);
    }
  }
  return m;
}

double s_c_time_average(const std::vector<CovarianceSnapshot>& snapshots, int j, int k,
                        const TimeWindow& window) {
  validate_window(window);
  if (snapshots.size() < 2) throw WindowError("need at least two snapshots");
  check_pair(snapshots.front().c, j, k);
  const double dt = snapshots[1].t - snapshots[0].t;
  const double eps = 1e-6 * dt;
  if (window.t_i < snapshots.front().t - eps || window.t_f > snapshots.back().t + eps) {
    throw WindowError("window outside the covariance sequence");
  }
  double sum = 0.0;
  bool hit_start = false, hit_end = false;
  for (const auto& s : snapshots) {
    const double w = trapezoid_weight(s.t, window, dt);
    if (w == 0.0) continue;
    hit_start = hit_start || std::abs(s.t - window.t_i) <= 1e-9 * dt;
    hit_end = hit_end || std::abs(s.t - window.t_f) <= 1e-9 * dt;
    sum += w * s_c_unchecked(s.c, j, k);
  }
  if (!hit_start || !hit_end) throw WindowError("window edges must fall on snapshot times");
  return sum / (window.t_f - window.t_i);
}

SyncMatrix sync_matrix(const std::vector<CovarianceSnapshot>& snapshots, const TimeWindow& window) {
  if (snapshots.size() < 2) throw WindowError("need at least two snapshots");
  const int n = static_cast<int>(snapshots.front().c.rows() / 2);
  SyncAccumulator acc(n, window, snapshots[1].t - snapshots[0].t);
  for (const auto& s : snapshots) acc.add(s.t, s.c);
  return acc.result();
}

void SyncMatrix::write_csv(std::ostream& out) const {
  for (int j = 0; j < n; ++j) out << (j ? "," : "") << (j + 1);
  out << '\n';
  const auto old = out.precision(17);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (k) out << ',';
      if (j != k) out << values(j, k);
    }
    out << '\n';
  }
  out.precision(old);
}

SyncSummary summarize(const SyncMatrix& m, const std::vector<int>& bulk_sites,
                      const std::vector<std::pair<int, int>>& target_pairs) {
  SyncSummary s;
  std::vector<bool> is_bulk(static_cast<std::size_t>(m.n), false);
  for (int b : bulk_sites) {
    if (b < 0 || b >= m.n) throw InvalidInput("bulk site out of range");
    is_bulk[static_cast<std::size_t>(b)] = true;
  }
  std::vector<double> bulk;
  for (int j = 0; j < m.n; ++j) {
    for (int k = j + 1; k < m.n; ++k) {
      const double v = m.values(j, k);
      if (v > s.max_value || s.argmax.first < 0) {
        s.max_value = v;
        s.argmax = {j, k};
      }
      if (is_bulk[static_cast<std::size_t>(j)] && is_bulk[static_cast<std::size_t>(k)]) bulk.push_back(v);
    }
  }
  s.bulk_median = median(bulk);
  for (int j = 0; j < m.n; ++j)
    for (int k = j + 1; k < m.n; ++k)
      if (!(is_bulk[static_cast<std::size_t>(j)] && is_bulk[static_cast<std::size_t>(k)]))
        s.max_ratio = std::max(s.max_ratio, m.values(j, k) / s.bulk_median);
  s.target_pairs = target_pairs;
  s.min_target_ratio = std::numeric_limits<double>::infinity();
  for (auto [j, k] : target_pairs) {
    if (j == k || j < 0 || k < 0 || j >= m.n || k >= m.n) throw InvalidInput("bad target pair");
    s.target_values.push_back(m.values(j, k));
    s.target_ratios.push_back(m.values(j, k) / s.bulk_median);
    s.min_target_ratio = std::min(s.min_target_ratio, s.target_ratios.back());
  }
  if (target_pairs.empty()) s.min_target_ratio = 0.0;
  return s;
}

PhaseLockReport phase_lock_rate(const Trajectory& trajectory, int j, int k,
                                const TimeWindow& window, double tol, double amplitude_floor) {
  if (j < 0 || k < 0 || j >= trajectory.sites() || k >= trajectory.sites()) {
    throw InvalidInput("phase_lock_rate: site index out of range");
  }
  validate_window(window);
  const auto [first, last] = trajectory.window_indices(window.t_i, window.t_f);
  if (last <= first) throw WindowError("window holds fewer than two samples");
  if (amplitude_floor < 0.0) amplitude_floor = 1e-3 * trajectory.params().limit_cycle_radius();

  const std::size_t m = last - first + 1;
  std::vector<double> phase(m);
  double prev = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const cplx aj = trajectory.alpha(first + i, j);
    const cplx ak = trajectory.alpha(first + i, k);
    if (std::abs(aj) < amplitude_floor || std::abs(ak) < amplitude_floor) {
      std::ostringstream msg;
      msg << "amplitude below " << amplitude_floor << " at t=" << trajectory.time(first + i)
          << "; phase undefined";
      throw PhaseUndefined(msg.str());
    }
    double d = std::arg(aj * std::conj(ak));
    if (i > 0) d = prev + std::remainder(d - prev, 2.0 * std::numbers::pi);
    phase[i] = d;
    prev = d;
  }
  // Least squares on centred times.
  double tm = 0.0, pm = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    tm += trajectory.time(first + i);
    pm += phase[i];
  }
  tm /= static_cast<double>(m);
  pm /= static_cast<double>(m);
  double stt = 0.0, stp = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dt = trajectory.time(first + i) - tm;
    stt += dt * dt;
    stp += dt * (phase[i] - pm);
  }
  PhaseLockReport r;
  r.j = j;
  r.k = k;
  r.drift = stp / stt;
  double ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = phase[i] - pm - r.drift * (trajectory.time(first + i) - tm);
    ss += e * e;
  }
  r.residual_rms = std::sqrt(ss / static_cast<double>(m));
  r.offset = std::remainder(pm, 2.0 * std::numbers::pi);
  r.locked = std::abs(r.drift) < tol;
  return r;
}

}  // namespace topsync
