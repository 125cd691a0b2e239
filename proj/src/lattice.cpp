#include "topsync/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <utility>

#include <Eigen/Eigenvalues>

#include "topsync/errors.hpp"
#include "topsync/random.hpp"

namespace topsync {

namespace {

std::vector<std::string> numeric_labels(int n) {
  std::vector<std::string> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = std::to_string(i + 1);
  return labels;
}

struct Point {
  double x;
  double y;
};

// Kagome flake geometry: upward triangles sit on lattice points
// R(i, j) = i*(2, 0) + j*(1, sqrt3) with i, j >= 0 and i + j <= T - 1.
// Each triangle has sites R, R + (1, 0) and R + (1/2, sqrt3/2), unit bonds.
struct KagomeGeometry {
  std::vector<Point> points;        // raw site positions, triangle-major
  std::vector<int> triangle_of;     // upward triangle id per raw site
  std::vector<int> order;           // order[new_index] = raw index
  int n_corner = 3;
  int n_edge_each = 0;
};

KagomeGeometry kagome_geometry(int T) {
  const double s3 = std::sqrt(3.0);
  KagomeGeometry g;
  int tri = 0;
  for (int j = 0; j < T; ++j) {
    for (int i = 0; i + j <= T - 1; ++i) {
      const double x = 2.0 * i + j;
      const double y = s3 * j;
      g.points.push_back({x, y});
      g.points.push_back({x + 1.0, y});
      g.points.push_back({x + 0.5, y + 0.5 * s3});
      g.triangle_of.insert(g.triangle_of.end(), {tri, tri, tri});
      ++tri;
    }
  }
  constexpr double eps = 1e-9;
  const Point top{T - 0.5, s3 * (T - 0.5)};
  const Point left{0.0, 0.0};
  const Point right{2.0 * T - 1.0, 0.0};
  auto same = [&](const Point& a, const Point& b) {
    return std::abs(a.x - b.x) < eps && std::abs(a.y - b.y) < eps;
  };
  int i_top = -1, i_left = -1, i_right = -1;
  std::vector<int> left_edge, right_edge, bottom_edge, bulk;
  for (int k = 0; k < static_cast<int>(g.points.size()); ++k) {
    const Point& p = g.points[static_cast<std::size_t>(k)];
    if (same(p, top)) {
      i_top = k;
    } else if (same(p, left)) {
      i_left = k;
    } else if (same(p, right)) {
      i_right = k;
    } else if (std::abs(p.y - s3 * p.x) < eps) {
      left_edge.push_back(k);
    } else if (std::abs(p.y - s3 * (2.0 * T - 1.0 - p.x)) < eps) {
      right_edge.push_back(k);
    } else if (std::abs(p.y) < eps) {
      bottom_edge.push_back(k);
    } else {
      bulk.push_back(k);
    }
  }
  auto by_y_desc = [&](int a, int b) {
    return g.points[static_cast<std::size_t>(a)].y > g.points[static_cast<std::size_t>(b)].y;
  };
  auto by_x_asc = [&](int a, int b) {
    return g.points[static_cast<std::size_t>(a)].x < g.points[static_cast<std::size_t>(b)].x;
  };
  auto row_major = [&](int a, int b) {
    const Point& pa = g.points[static_cast<std::size_t>(a)];
    const Point& pb = g.points[static_cast<std::size_t>(b)];
    if (std::abs(pa.y - pb.y) > eps) return pa.y > pb.y;
    return pa.x < pb.x;
  };
  std::sort(left_edge.begin(), left_edge.end(), by_y_desc);
  std::sort(right_edge.begin(), right_edge.end(), by_y_desc);
  std::sort(bottom_edge.begin(), bottom_edge.end(), by_x_asc);
  std::sort(bulk.begin(), bulk.end(), row_major);

  g.order = {i_top, i_left, i_right};
  g.order.insert(g.order.end(), left_edge.begin(), left_edge.end());
  g.order.insert(g.order.end(), right_edge.begin(), right_edge.end());
  g.order.insert(g.order.end(), bottom_edge.begin(), bottom_edge.end());
  g.order.insert(g.order.end(), bulk.begin(), bulk.end());
  g.n_edge_each = static_cast<int>(left_edge.size());
  return g;
}

}  // namespace

CouplingMatrix::CouplingMatrix(Eigen::MatrixXd entries, std::vector<std::string> labels)
    : entries_(std::move(entries)), labels_(std::move(labels)) {
  if (entries_.rows() != entries_.cols()) throw InvalidInput("coupling matrix must be square");
  if (labels_.empty()) labels_ = numeric_labels(static_cast<int>(entries_.rows()));
  if (static_cast<Eigen::Index>(labels_.size()) != entries_.rows()) {
    throw InvalidInput("coupling matrix: one label per site required");
  }
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    if (entries_(i, i) != 0.0) throw InvalidInput("coupling matrix must have zero diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (entries_(i, j) != entries_(j, i)) throw InvalidInput("coupling matrix must be symmetric");
    }
  }
  if (!entries_.allFinite()) throw InvalidInput("coupling matrix has non-finite entries");
  sparse_ = entries_.sparseView(0.0, 0.0);
  sparse_.makeCompressed();
}

std::vector<Bond> CouplingMatrix::bonds() const {
  std::vector<Bond> out;
  for (int i = 0; i < size(); ++i) {
    for (int j = i + 1; j < size(); ++j) {
      if (entries_(i, j) != 0.0) out.push_back({i, j, entries_(i, j)});
    }
  }
  return out;
}

void CouplingMatrix::write_csv(std::ostream& out) const {
  for (std::size_t k = 0; k < labels_.size(); ++k) out << (k ? "," : "") << labels_[k];
  out << '\n';
  const auto old = out.precision(17);
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    for (Eigen::Index j = 0; j < entries_.cols(); ++j) out << (j ? "," : "") << entries_(i, j);
    out << '\n';
  }
  out.precision(old);
}

CouplingMatrix build_ssh(int n_sites, double lambda0, double dimerization) {
  if (n_sites < 2 || n_sites % 2 != 0) {
    throw InvalidSpec("SSH chain needs an even number of sites >= 2, got " +
                      std::to_string(n_sites));
  }
  if (!std::isfinite(lambda0) || !std::isfinite(dimerization)) {
    throw InvalidSpec("SSH couplings must be finite");
  }
  const double delta = dimerization * lambda0;
  const double intra = lambda0 - delta;  // bonds starting on odd (1-based) sites
  const double inter = lambda0 + delta;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_sites, n_sites);
  for (int k = 0; k + 1 < n_sites; ++k) {
    const double v = (k % 2 == 0) ? intra : inter;
    m(k, k + 1) = v;
    m(k + 1, k) = v;
  }
  return CouplingMatrix(std::move(m), numeric_labels(n_sites));
}

int kagome_site_count(int triangles_per_edge) {
  return 3 * triangles_per_edge * (triangles_per_edge + 1) / 2;
}

KagomeRegions kagome_regions(int triangles_per_edge) {
  const int n = kagome_site_count(triangles_per_edge);
  const int per_edge = 2 * triangles_per_edge - 2;
  KagomeRegions r;
  r.corners = {0, 1, 2};
  for (int k = 3; k < 3 + 3 * per_edge; ++k) r.edges.push_back(k);
  for (int k = 3 + 3 * per_edge; k < n; ++k) r.bulk.push_back(k);
  return r;
}

CouplingMatrix build_kagome(int triangles_per_edge, double lambda_up, double lambda_down) {
  if (triangles_per_edge < 2) throw InvalidSpec("Kagome flake needs triangles_per_edge >= 2");
  if (!(lambda_down > 0.0)) throw InvalidSpec("Kagome downward coupling must be > 0");
  if (!(lambda_up <= 0.0)) throw InvalidSpec("Kagome upward coupling must be <= 0");
  const KagomeGeometry g = kagome_geometry(triangles_per_edge);
  const int n = static_cast<int>(g.points.size());
  std::vector<int> new_index(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) new_index[static_cast<std::size_t>(g.order[static_cast<std::size_t>(k)])] = k;

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const Point& pa = g.points[static_cast<std::size_t>(a)];
      const Point& pb = g.points[static_cast<std::size_t>(b)];
      const double d = std::hypot(pa.x - pb.x, pa.y - pb.y);
      if (std::abs(d - 1.0) > 1e-9) continue;
      const bool up = g.triangle_of[static_cast<std::size_t>(a)] ==
                      g.triangle_of[static_cast<std::size_t>(b)];
      const int i = new_index[static_cast<std::size_t>(a)];
      const int j = new_index[static_cast<std::size_t>(b)];
      m(i, j) = m(j, i) = up ? lambda_up : lambda_down;
    }
  }
  return CouplingMatrix(std::move(m), numeric_labels(n));
}

CouplingMatrix build_custom(int n_sites, const std::vector<Bond>& bonds) {
  if (n_sites < 1) throw InvalidSpec("custom lattice needs at least one site");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_sites, n_sites);
  std::set<std::pair<int, int>> seen;
  for (const Bond& b : bonds) {
    if (b.i < 0 || b.j < 0 || b.i >= n_sites || b.j >= n_sites) {
      throw InvalidSpec("custom bond references a site outside the lattice");
    }
    if (b.i == b.j) throw InvalidSpec("custom bond list contains a self-bond");
    if (!std::isfinite(b.strength)) throw InvalidSpec("custom bond strength must be finite");
    const auto key = std::minmax(b.i, b.j);
    if (!seen.insert({key.first, key.second}).second) {
      throw InvalidSpec("custom bond list contains a duplicate pair");
    }
    m(b.i, b.j) = m(b.j, b.i) = b.strength;
  }
  return CouplingMatrix(std::move(m), numeric_labels(n_sites));
}

void validate(const LatticeSpec& spec) {
  switch (spec.kind) {
    case LatticeKind::SSH:
      if (spec.n_sites < 2 || spec.n_sites % 2 != 0) {
        throw InvalidSpec("SSH n_sites must be even and >= 2");
      }
      if (!std::isfinite(spec.lambda0) || !std::isfinite(spec.dimerization)) {
        throw InvalidSpec("SSH couplings must be finite");
      }
      break;
    case LatticeKind::Kagome:
      if (spec.triangles_per_edge < 2) throw InvalidSpec("Kagome triangles_per_edge must be >= 2");
      if (!(spec.lambda_down > 0.0)) throw InvalidSpec("Kagome lambda_down must be > 0");
      if (!(spec.lambda_up <= 0.0)) throw InvalidSpec("Kagome lambda_up must be <= 0");
      break;
    case LatticeKind::Custom:
      build_custom(spec.custom_sites, spec.bonds);
      break;
  }
}

CouplingMatrix build_lattice(const LatticeSpec& spec) {
  validate(spec);
  switch (spec.kind) {
    case LatticeKind::SSH:
      return build_ssh(spec.n_sites, spec.lambda0, spec.dimerization);
    case LatticeKind::Kagome:
      return build_kagome(spec.triangles_per_edge, spec.lambda_up, spec.lambda_down);
    case LatticeKind::Custom:
      return build_custom(spec.custom_sites, spec.bonds);
  }
  throw InvalidSpec("unknown lattice kind");
}

CouplingMatrix apply_disorder(const CouplingMatrix& matrix, const DisorderSpec& disorder) {
  if (!(disorder.strength >= 0.0)) throw InvalidSpec("disorder strength must be >= 0");
  if (disorder.strength == 0.0) return matrix;
  Engine engine(disorder.seed);
  Eigen::MatrixXd m = matrix.entries();
  for (const Bond& b : matrix.bonds()) {
    const double v = b.strength + uniform(engine, -disorder.strength, disorder.strength);
    m(b.i, b.j) = m(b.j, b.i) = v;
  }
  return CouplingMatrix(std::move(m), matrix.site_labels());
}

EigenDecomposition eigendecompose(const CouplingMatrix& matrix, double zero_tol) {
  return eigendecompose(matrix.entries(), zero_tol);
}

EigenDecomposition eigendecompose(const Eigen::MatrixXd& h, double zero_tol) {
  if (h.rows() != h.cols()) throw InvalidInput("eigendecompose: matrix must be square");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidInput("eigendecompose: matrix is not symmetric");
  }
  const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw InvalidInput("eigendecompose: solver failed");

  EigenDecomposition out;
  out.eigenvalues = solver.eigenvalues();
  out.eigenvectors = solver.eigenvectors();
  const Eigen::Index n = h.rows();

  // Degenerate clusters get a canonical basis: repeatedly take the
  // projector column of the site with the largest remaining weight. This is
  // independent of the rotation the solver happened to return.
  const double degen_tol = 1e-11 * scale;
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index stop = start + 1;
    while (stop < n && out.eigenvalues(stop) - out.eigenvalues(stop - 1) <= degen_tol) ++stop;
    const Eigen::Index k = stop - start;
    if (k > 1) {
      const Eigen::MatrixXd v = out.eigenvectors.middleCols(start, k);
      Eigen::MatrixXd basis(n, k);
      Eigen::MatrixXd projector = v * v.transpose();
      for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::Index site = 0;
        projector.diagonal().maxCoeff(&site);
        Eigen::VectorXd col = projector.col(site);
        col /= std::sqrt(projector(site, site));
        basis.col(c) = col;
        projector -= col * col.transpose();
      }
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
      std::iota(idx.begin(), idx.end(), 0);
      std::vector<Eigen::Index> lead(static_cast<std::size_t>(k));
      for (Eigen::Index c = 0; c < k; ++c) basis.col(c).cwiseAbs().maxCoeff(&lead[static_cast<std::size_t>(c)]);
      std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        return lead[static_cast<std::size_t>(a)] < lead[static_cast<std::size_t>(b)];
      });
      for (Eigen::Index c = 0; c < k; ++c) {
        out.eigenvectors.col(start + c) = basis.col(idx[static_cast<std::size_t>(c)]);
      }
    }
    start = stop;
  }
  // Sign convention: the largest-magnitude entry of each eigenvector is positive.
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index site = 0;
    out.eigenvectors.col(c).cwiseAbs().maxCoeff(&site);
    if (out.eigenvectors(site, c) < 0.0) out.eigenvectors.col(c) *= -1.0;
  }
  const double tol = zero_tol > 0.0 ? zero_tol : 1e-3 * std::max(h.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index l = 0; l < n; ++l) {
    if (std::abs(out.eigenvalues(l)) < tol) out.zero_mode_indices.push_back(static_cast<int>(l));
  }
  return out;
}

int count_zero_modes(const EigenDecomposition& decomposition, double tol) {
  if (!(tol > 0.0)) throw InvalidInput("count_zero_modes: tol must be positive");
  return static_cast<int>((decomposition.eigenvalues.array().abs() < tol).count());
}

}  // namespace topsync
