#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace hessbound {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr Index kDefaultPMax = 5000;

/// Cosine of the angle between a and b, clamped to [-1, 1].
/// Throws Errc::ZeroVector when either norm is below 1e-12.
double cosine_similarity(const Vector& a, const Vector& b);

/// Square matrix validated against |M(i,j) - M(j,i)| <= 1e-9 * (1 + max|M|).
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;

  /// Validates symmetry; throws Errc::NotSymmetric or Errc::DimMismatch.
  explicit SymmetricMatrix(Matrix entries);
  /// Same check with a caller-chosen relative tolerance, for matrices such as
  /// unsymmetrized finite-difference Hessians that are symmetric only up to
  /// truncation error. The entries are stored unchanged.
  SymmetricMatrix(Matrix entries, double relative_tolerance);

  Index dim() const { return entries_.rows(); }
  const Matrix& matrix() const { return entries_; }
  double operator()(Index i, Index j) const { return entries_(i, j); }
  double trace() const { return entries_.trace(); }

 private:
  Matrix entries_;
};

/// Largest |M(i,j) - M(j,i)| over the matrix.
double max_asymmetry(const Matrix& m);

struct SpectralDecomposition {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column i pairs with eigenvalues[i]
  double residual = 0;  // max_i ||M v_i - lambda_i v_i||_2

  Index dim() const { return eigenvalues.size(); }
  auto eigenvector(Index i) const { return eigenvectors.col(i); }
};

/// Full eigendecomposition of a symmetric matrix. Eigenvalues are sorted
/// descending; each eigenvector is flipped so that its entry of largest
/// magnitude (first one on ties) is non-negative.
SpectralDecomposition eigh_symmetric(const SymmetricMatrix& m, Index p_max = kDefaultPMax);

/// beta_i = |cos(v_i^A, v_i^B)| for the leading k index-matched eigenvectors.
std::vector<double> subspace_overlap(const SpectralDecomposition& a,
                                     const SpectralDecomposition& b, Index k);

/// Shortest round-trip decimal representation used for every text export.
std::string format_real(double value);

// Row-major CSV, '.' decimal separator, '\n' row terminator.
void write_csv(std::ostream& os, const Matrix& m);
void write_csv(std::ostream& os, const Vector& v);
Matrix read_csv_matrix(std::istream& is);

}  // namespace hessbound
