#pragma once

#include "hessbound/data.hpp"
#include "hessbound/linalg.hpp"
#include "hessbound/loss_config.hpp"
#include "hessbound/network.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace hessbound {

struct AlignmentValue {
  double value = 0;
  bool zero_gradient = false;  // gradient norm below 1e-12, value forced to 0
};

/// Cosine between the reinforcing gradient of x and v.
AlignmentValue alignment(const NetworkSpec& spec, const Vector& theta, const Vector& x, const Vector& v,
                         LossKind kind = LossKind::cross_entropy);

/// Alignments of a set of gradients (one per column) with the leading k
/// columns of `directions`. Zero-gradient columns produce all-zero rows.
Matrix alignments_of(const Matrix& gradients, const Matrix& directions, Index k,
                     std::vector<bool>* zero_gradient = nullptr);

struct AlignmentMatrix {
  Matrix values;                     // n x k
  std::vector<Index> eigen_indices;  // 0-based eigenvector index per column
  std::vector<Index> sample_ids;
  std::vector<int> labels;
  std::vector<bool> zero_gradient;

  Index samples() const { return values.rows(); }
  Index columns() const { return values.cols(); }
};

AlignmentMatrix alignment_matrix(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                                 const SpectralDecomposition& decomp, Index k,
                                 LossKind kind = LossKind::cross_entropy);

struct GridField {
  GridSpec grid;
  std::vector<Matrix> values;  // one resolution x resolution grid per eigenvector, (row = y index, col = x index)
  Eigen::MatrixXi predictions;
};

/// Predictions and top-k alignments at every node of a 2-D grid.
GridField grid_alignment_field(const NetworkSpec& spec, const Vector& theta, const SpectralDecomposition& decomp,
                               Index k, const GridSpec& grid, LossKind kind = LossKind::cross_entropy);

enum class EpsilonAggregation { mean_of_max, max_of_mean };

EpsilonAggregation parse_epsilon_aggregation(std::string_view name);
std::string_view to_string(EpsilonAggregation a);

/// Baseline alignment level: R random Gaussian directions in parameter space,
/// for each the largest |cos| with any training reinforcing gradient, averaged
/// over directions (or the transposed aggregation when requested).
double random_direction_epsilon(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                                Index repeats, std::uint64_t seed,
                                EpsilonAggregation aggregation = EpsilonAggregation::mean_of_max,
                                LossKind kind = LossKind::cross_entropy);

struct BoundaryScan {
  GridSpec grid;
  std::vector<Vector> points;  // midpoints of grid edges whose endpoints disagree
  Index cell_count = 0;
  Eigen::MatrixXi predictions;

  /// L2 distance from q to the closest boundary point (infinity if none).
  double nearest_distance(const Vector& q) const;
};

BoundaryScan boundary_scan_2d(const NetworkSpec& spec, const Vector& theta, const GridSpec& grid);

}  // namespace hessbound
