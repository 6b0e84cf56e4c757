#include "hessbound/alignment.hpp"

#include "hessbound/error.hpp"
#include "hessbound/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace hessbound {

namespace {

constexpr double kZeroGradient = 1e-12;

void require_2d(const NetworkSpec& spec) {
  if (spec.input_dim() != 2) {
    throw Error(Errc::WrongDim, "grid scans need 2-D inputs, network has " + std::to_string(spec.input_dim()));
  }
}

Matrix grid_nodes(const GridSpec& grid) {
  const Index r = grid.resolution;
  Matrix X(r * r, 2);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < r; ++i) {
      X(j * r + i, 0) = grid.x_at(i);
      X(j * r + i, 1) = grid.y_at(j);
    }
  return X;
}

}  // namespace

AlignmentValue alignment(const NetworkSpec& spec, const Vector& theta, const Vector& x, const Vector& v,
                         LossKind kind) {
  if (v.size() != spec.param_count()) throw Error(Errc::DimMismatch, "direction length does not match parameters");
  const Vector g = reinforcing_gradient(spec, theta, x, kind);
  if (g.norm() < kZeroGradient) return {0.0, true};
  return {cosine_similarity(g, v), false};
}

Matrix alignments_of(const Matrix& gradients, const Matrix& directions, Index k, std::vector<bool>* zero_gradient) {
  if (gradients.rows() != directions.rows()) throw Error(Errc::DimMismatch, "gradient and direction lengths differ");
  if (k < 0 || k > directions.cols()) throw Error(Errc::DimMismatch, "k exceeds the number of directions");
  const Index n = gradients.cols();
  const auto top = directions.leftCols(k);
  Matrix out = gradients.transpose() * top;  // n x k inner products
  const Vector dir_norms = top.colwise().norm().transpose();
  if (zero_gradient) zero_gradient->assign(static_cast<std::size_t>(n), false);
  for (Index s = 0; s < n; ++s) {
    const double gn = gradients.col(s).norm();
    if (gn < kZeroGradient) {
      out.row(s).setZero();
      if (zero_gradient) (*zero_gradient)[static_cast<std::size_t>(s)] = true;
      continue;
    }
    for (Index i = 0; i < k; ++i) out(s, i) = std::clamp(out(s, i) / (gn * dir_norms(i)), -1.0, 1.0);
  }
  return out;
}

AlignmentMatrix alignment_matrix(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                                 const SpectralDecomposition& decomp, Index k, LossKind kind) {
  if (k > decomp.dim() || k < 1) throw Error(Errc::DimMismatch, "k must lie in [1, p]");
  if (decomp.dim() != spec.param_count()) throw Error(Errc::DimMismatch, "decomposition does not match parameters");
  AlignmentMatrix am;
  am.values = alignments_of(reinforcing_gradients(spec, theta, d.X, kind), decomp.eigenvectors, k, &am.zero_gradient);
  for (Index i = 0; i < k; ++i) am.eigen_indices.push_back(i);
  for (Index s = 0; s < d.size(); ++s) am.sample_ids.push_back(s);
  am.labels = d.y;
  return am;
}

GridField grid_alignment_field(const NetworkSpec& spec, const Vector& theta, const SpectralDecomposition& decomp,
                               Index k, const GridSpec& grid, LossKind kind) {
  require_2d(spec);
  grid.validate();
  if (k > decomp.dim() || k < 1) throw Error(Errc::DimMismatch, "k must lie in [1, p]");
  const Index r = grid.resolution;
  const Matrix nodes = grid_nodes(grid);
  const Matrix values = alignments_of(reinforcing_gradients(spec, theta, nodes, kind), decomp.eigenvectors, k);
  const std::vector<int> pred = predict_batch(spec, theta, nodes);

  GridField field;
  field.grid = grid;
  field.predictions.resize(r, r);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < r; ++i) field.predictions(j, i) = pred[static_cast<std::size_t>(j * r + i)];
  for (Index e = 0; e < k; ++e) {
    Matrix m(r, r);
    for (Index j = 0; j < r; ++j)
      for (Index i = 0; i < r; ++i) m(j, i) = values(j * r + i, e);
    field.values.push_back(std::move(m));
  }
  return field;
}

EpsilonAggregation parse_epsilon_aggregation(std::string_view name) {
  if (name == "mean_of_max") return EpsilonAggregation::mean_of_max;
  if (name == "max_of_mean") return EpsilonAggregation::max_of_mean;
  throw Error(Errc::Config, "unknown epsilon aggregation '" + std::string(name) + "' (valid: mean_of_max, max_of_mean)");
}

std::string_view to_string(EpsilonAggregation a) {
  return a == EpsilonAggregation::mean_of_max ? "mean_of_max" : "max_of_mean";
}

double random_direction_epsilon(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                                Index repeats, std::uint64_t seed, EpsilonAggregation aggregation,
                                LossKind kind) {
  if (repeats < 1) throw Error(Errc::Config, "epsilon needs at least one random direction");
  const Index p = spec.param_count();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix directions(p, repeats);
  for (Index j = 0; j < repeats; ++j) {
    for (Index i = 0; i < p; ++i) directions(i, j) = normal(rng);
    directions.col(j).normalize();
  }
  const Matrix cos = alignments_of(reinforcing_gradients(spec, theta, d.X, kind), directions, repeats).cwiseAbs();
  if (aggregation == EpsilonAggregation::mean_of_max) return cos.colwise().maxCoeff().mean();
  return cos.colwise().mean().maxCoeff();
}

double BoundaryScan::nearest_distance(const Vector& q) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Vector& p : points) best = std::min(best, (p - q).norm());
  return best;
}

BoundaryScan boundary_scan_2d(const NetworkSpec& spec, const Vector& theta, const GridSpec& grid) {
  require_2d(spec);
  grid.validate();
  const Index r = grid.resolution;
  const std::vector<int> pred = predict_batch(spec, theta, grid_nodes(grid));
  BoundaryScan scan;
  scan.grid = grid;
  scan.predictions.resize(r, r);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < r; ++i) scan.predictions(j, i) = pred[static_cast<std::size_t>(j * r + i)];

  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < r; ++i) {
      if (i + 1 < r && scan.predictions(j, i) != scan.predictions(j, i + 1)) {
        scan.points.push_back(Vector{{0.5 * (grid.x_at(i) + grid.x_at(i + 1)), grid.y_at(j)}});
      }
      if (j + 1 < r && scan.predictions(j, i) != scan.predictions(j + 1, i)) {
        scan.points.push_back(Vector{{grid.x_at(i), 0.5 * (grid.y_at(j) + grid.y_at(j + 1))}});
      }
    }
  }
  scan.cell_count = static_cast<Index>(scan.points.size());
  return scan;
}

}  // namespace hessbound
