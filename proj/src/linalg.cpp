#include "hessbound/linalg.hpp"

#include "hessbound/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace hessbound {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::TooLarge: return "TooLarge";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::InvalidLabel: return "InvalidLabel";
    case Errc::UnsupportedArchitecture: return "UnsupportedArchitecture";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::UnknownKind: return "UnknownKind";
    case Errc::ParseError: return "ParseError";
    case Errc::WrongColumnCount: return "WrongColumnCount";
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::NotEnoughSamples: return "NotEnoughSamples";
    case Errc::WrongDim: return "WrongDim";
    case Errc::ClassTooSmall: return "ClassTooSmall";
    case Errc::Diverged: return "Diverged";
    case Errc::AuxTrainingFailed: return "AuxTrainingFailed";
    case Errc::NoProgress: return "NoProgress";
    case Errc::Io: return "Io";
    case Errc::Config: return "Config";
  }
  return "Unknown";
}

double cosine_similarity(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::DimMismatch, "cosine_similarity of vectors with lengths " +
                                       std::to_string(a.size()) + " and " +
                                       std::to_string(b.size()));
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na < 1e-12 || nb < 1e-12) throw Error(Errc::ZeroVector, "cosine_similarity of a zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double max_asymmetry(const Matrix& m) {
  double worst = 0;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = j + 1; i < m.rows(); ++i) worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
  return worst;
}

SymmetricMatrix::SymmetricMatrix(Matrix entries) : SymmetricMatrix(std::move(entries), 1e-9) {}

SymmetricMatrix::SymmetricMatrix(Matrix entries, double relative_tolerance) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw Error(Errc::DimMismatch, "symmetric matrix must be square, got " +
                                       std::to_string(entries_.rows()) + "x" +
                                       std::to_string(entries_.cols()));
  }
  if (!entries_.allFinite()) throw Error(Errc::NotSymmetric, "matrix has non-finite entries");
  const double scale = entries_.size() ? entries_.cwiseAbs().maxCoeff() : 0.0;
  const double asym = max_asymmetry(entries_);
  if (asym > relative_tolerance * (1.0 + scale)) {
    throw Error(Errc::NotSymmetric, "max asymmetry " + format_real(asym) + " exceeds tolerance");
  }
}

SpectralDecomposition eigh_symmetric(const SymmetricMatrix& m, Index p_max) {
  const Index n = m.dim();
  if (n > p_max) {
    throw Error(Errc::TooLarge, "dimension " + std::to_string(n) + " exceeds p_max " +
                                    std::to_string(p_max));
  }
  SpectralDecomposition out;
  if (n == 0) return out;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw Error(Errc::NotSymmetric, "eigensolver did not converge");

  // Eigen returns ascending order; reverse to descending.
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();

  for (Index c = 0; c < n; ++c) {
    auto col = out.eigenvectors.col(c);
    Index arg = 0;
    double best = -1;
    for (Index r = 0; r < n; ++r) {
      if (std::abs(col(r)) > best) {
        best = std::abs(col(r));
        arg = r;
      }
    }
    if (col(arg) < 0) col = -col;
  }

  double residual = 0;
  for (Index c = 0; c < n; ++c) {
    const Vector r = m.matrix() * out.eigenvectors.col(c) - out.eigenvalues(c) * out.eigenvectors.col(c);
    residual = std::max(residual, r.norm());
  }
  out.residual = residual;
  return out;
}

std::vector<double> subspace_overlap(const SpectralDecomposition& a,
                                     const SpectralDecomposition& b, Index k) {
  if (a.dim() != b.dim()) {
    throw Error(Errc::DimMismatch, "decompositions of dimension " + std::to_string(a.dim()) +
                                       " and " + std::to_string(b.dim()));
  }
  if (k > a.dim() || k < 0) throw Error(Errc::DimMismatch, "k exceeds the decomposition dimension");
  std::vector<double> beta(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) {
    beta[static_cast<std::size_t>(i)] =
        std::abs(cosine_similarity(a.eigenvectors.col(i), b.eigenvectors.col(i)));
  }
  return beta;
}

std::string format_real(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

void write_csv(std::ostream& os, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_real(m(i, j));
    }
    os << '\n';
  }
}

void write_csv(std::ostream& os, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) os << format_real(v(i)) << '\n';
}

Matrix read_csv_matrix(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = std::min(line.find(',', pos), line.size());
      double value = 0;
      auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + comma, value);
      if (ec != std::errc{} || ptr != line.data() + comma) {
        throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": bad number");
      }
      row.push_back(value);
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(Errc::WrongColumnCount, "line " + std::to_string(lineno));
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

}  // namespace hessbound
