#pragma once

#include "hessbound/alignment.hpp"
#include "hessbound/data.hpp"
#include "hessbound/linalg.hpp"
#include "hessbound/network.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hessbound {

struct GeneralizationMeasure {
  Vector m;        // mean |A_i| over samples, one entry per eigenvector
  Index above = 0; // number of m_i strictly above epsilon
  double G = 0;    // above / p
};

/// m_i = mean_s |A_i(x_s)|, G = #{m_i > epsilon} / p. The alignment matrix
/// must cover every eigenvector (k = p).
GeneralizationMeasure generalization_measure(const AlignmentMatrix& am, double epsilon);

struct ClassicalMeasures {
  double trace = 0;
  double lambda_max = 0;
  double param_norm = 0;
};

ClassicalMeasures classical_measures(const SpectralDecomposition& decomp, const Vector& theta);

struct ExtremeSamples {
  Index min_index = 0;  // smallest signed alignment
  Index max_index = 0;  // largest signed alignment
};

/// Ties resolve to the smallest sample index.
ExtremeSamples select_extreme_samples(const Vector& top_alignment_column);

struct BoundarySearchOptions {
  double fd_step = 1e-4;
  double step_size = 0.05;
  Index max_iter = 500;
  double target = 0.999;
};

struct BoundarySearch {
  Vector x;
  double start_alignment = 0;
  double achieved_alignment = 0;
  Index iterations = 0;
  bool no_progress = false;           // |A_1| never rose above its start value
  std::vector<double> accepted_path;  // |A_1| after every accepted step
};

/// Projected ascent on |A_1(x)| over the inputs inside [lower, upper], with
/// a central-difference input gradient and a normalized step that halves on
/// every rejected move.
BoundarySearch find_boundary_point(const NetworkSpec& spec, const Vector& theta, const Vector& v1,
                                   const Vector& x_start, const Vector& lower, const Vector& upper,
                                   const BoundarySearchOptions& options = {});

struct MarginEstimate {
  Vector x_b;
  Vector x_t_min;
  Vector x_t_max;
  Index t_min_index = 0;
  Index t_max_index = 0;
  double d_min = 0;
  double d_max = 0;
  double margin = 0;
  double achieved_alignment = 0;
  Index iterations = 0;
  bool no_progress = false;
  bool low_confidence = false;  // achieved_alignment < 0.99

  /// Training extreme that realised the margin.
  const Vector& nearest_extreme() const { return d_min <= d_max ? x_t_min : x_t_max; }
};

inline constexpr double kLowConfidenceAlignment = 0.99;

/// Margin from the two training samples with extreme signed alignment to v_1
/// and a boundary point found by ascent from their midpoint.
MarginEstimate estimate_margin(const NetworkSpec& spec, const Vector& theta, const SpectralDecomposition& decomp,
                               const LabeledDataset& d, const Vector& lower, const Vector& upper,
                               const BoundarySearchOptions& options = {});

/// Same, searching the data bounding box widened by 10% per side.
MarginEstimate estimate_margin(const NetworkSpec& spec, const Vector& theta, const SpectralDecomposition& decomp,
                               const LabeledDataset& d, const BoundarySearchOptions& options = {});

struct GeneralizationReport {
  double G = 0;
  double epsilon = 0;
  Vector m;
  double trace = 0;
  double lambda_max = 0;
  double param_norm = 0;
  Index outlier_count = 0;
  Index param_count = 0;
  // provenance of epsilon
  Index epsilon_repeats = 0;
  std::uint64_t epsilon_seed = 0;
  EpsilonAggregation epsilon_aggregation = EpsilonAggregation::mean_of_max;
};

struct ReportOptions {
  Index epsilon_repeats = 5;
  std::uint64_t epsilon_seed = 0;
  EpsilonAggregation epsilon_aggregation = EpsilonAggregation::mean_of_max;
  LossKind loss_kind = LossKind::cross_entropy;
};

/// Assembles every measure for one minimum from its Hessian decomposition.
GeneralizationReport generalization_report(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                                           const SpectralDecomposition& decomp, const ReportOptions& options = {});

}  // namespace hessbound
