#pragma once

// Tight-binding coupling matrices for oscillator lattices: SSH chains,
// breathing Kagome flakes and user-supplied bond lists, plus bond disorder
// and eigendecomposition with zero-mode bookkeeping.
//
// Site indices are 0-based in the C++ API. Site labels (CSV headers, JSON
// configs) are 1-based, so label "1" is index 0.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace topsync {

enum class LatticeKind { SSH, Kagome, Custom };

struct Bond {
  int i = 0;
  int j = 0;
  double strength = 0.0;
};

/// Lattice description. Only the fields of the selected kind are read.
struct LatticeSpec {
  LatticeKind kind = LatticeKind::SSH;
  // SSH
  int n_sites = 20;
  double lambda0 = 0.25;
  double dimerization = 0.0;  // delta-lambda, in units of lambda0
  // Kagome
  int triangles_per_edge = 5;
  double lambda_up = -0.025;   // upward triangles, <= 0
  double lambda_down = 0.25;   // downward triangles, > 0
  // Custom
  int custom_sites = 0;
  std::vector<Bond> bonds;
};

struct DisorderSpec {
  double strength = 0.0;  // r, absolute units of omega0
  std::uint64_t seed = 0;
};

/// Symmetric hopping matrix with zero diagonal (units of omega0).
class CouplingMatrix {
 public:
  CouplingMatrix() = default;
  CouplingMatrix(Eigen::MatrixXd entries, std::vector<std::string> labels);

  int size() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  const std::vector<std::string>& site_labels() const { return labels_; }
  /// Same matrix in compressed form, for the integrators' inner loops.
  const Eigen::SparseMatrix<double>& sparse() const { return sparse_; }
  /// Unordered nonzero bonds (i < j), row-major order.
  std::vector<Bond> bonds() const;
  double operator()(int i, int j) const { return entries_(i, j); }
  double max_abs() const { return entries_.cwiseAbs().maxCoeff(); }

  /// Dense CSV: header row of site labels, then one row per site.
  void write_csv(std::ostream& out) const;

 private:
  Eigen::MatrixXd entries_;
  std::vector<std::string> labels_;
  Eigen::SparseMatrix<double> sparse_;
};

struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns
  std::vector<int> zero_mode_indices;
};

/// Open SSH chain. Bond (2k-1, 2k) (1-based) carries lambda0 - delta,
/// bond (2k, 2k+1) carries lambda0 + delta, with delta = dimerization*lambda0.
CouplingMatrix build_ssh(int n_sites, double lambda0, double dimerization);

/// Triangular breathing-Kagome flake with `triangles_per_edge` upward
/// triangles along each edge. Ordering: three corners (top, left, right),
/// left edge top-to-bottom, right edge top-to-bottom, bottom edge
/// left-to-right, then bulk row-major from the top.
CouplingMatrix build_kagome(int triangles_per_edge, double lambda_up, double lambda_down);

CouplingMatrix build_custom(int n_sites, const std::vector<Bond>& bonds);

CouplingMatrix build_lattice(const LatticeSpec& spec);

/// Validates the kind-specific invariants; throws InvalidSpec.
void validate(const LatticeSpec& spec);

/// Perturbs every nonzero unordered bond by an independent U(-r, r) draw.
CouplingMatrix apply_disorder(const CouplingMatrix& matrix, const DisorderSpec& disorder);

/// Default zero-mode tolerance of 1e-3 * scale is appropriate for finite SSH
/// chains, whose edge modes split by an exponentially small amount.
EigenDecomposition eigendecompose(const CouplingMatrix& matrix, double zero_tol = -1.0);
EigenDecomposition eigendecompose(const Eigen::MatrixXd& matrix, double zero_tol = -1.0);

int count_zero_modes(const EigenDecomposition& decomposition, double tol);

/// Site groups of a Kagome flake (0-based indices).
struct KagomeRegions {
  std::vector<int> corners;
  std::vector<int> edges;
  std::vector<int> bulk;
};
KagomeRegions kagome_regions(int triangles_per_edge);
int kagome_site_count(int triangles_per_edge);

}  // namespace topsync
