#include "hessbound/analysis.hpp"

#include "hessbound/curvature.hpp"
#include "hessbound/error.hpp"

#include <cmath>

namespace hessbound {

GeneralizationMeasure generalization_measure(const AlignmentMatrix& am, double epsilon) {
  GeneralizationMeasure out;
  const Index p = am.columns();
  if (p == 0 || am.samples() == 0) throw Error(Errc::DimMismatch, "empty alignment matrix");
  out.m = am.values.cwiseAbs().colwise().mean().transpose();
  for (Index i = 0; i < p; ++i) out.above += out.m(i) > epsilon;
  out.G = static_cast<double>(out.above) / static_cast<double>(p);
  return out;
}

ClassicalMeasures classical_measures(const SpectralDecomposition& decomp, const Vector& theta) {
  ClassicalMeasures out;
  out.trace = decomp.eigenvalues.sum();
  out.lambda_max = decomp.dim() ? decomp.eigenvalues(0) : 0.0;
  out.param_norm = theta.norm();
  return out;
}

ExtremeSamples select_extreme_samples(const Vector& column) {
  if (column.size() < 1) throw Error(Errc::DimMismatch, "no samples to select from");
  ExtremeSamples out;
  for (Index s = 1; s < column.size(); ++s) {
    if (column(s) < column(out.min_index)) out.min_index = s;
    if (column(s) > column(out.max_index)) out.max_index = s;
  }
  return out;
}

BoundarySearch find_boundary_point(const NetworkSpec& spec, const Vector& theta, const Vector& v1,
                                   const Vector& x_start, const Vector& lower, const Vector& upper,
                                   const BoundarySearchOptions& options) {
  const Index d = spec.input_dim();
  if (x_start.size() != d || lower.size() != d || upper.size() != d) {
    throw Error(Errc::ShapeMismatch, "search point and bounds must match the input dimension");
  }
  auto project = [&](const Vector& x) { return x.cwiseMax(lower).cwiseMin(upper).eval(); };
  auto objective = [&](const Vector& x) { return std::abs(alignment(spec, theta, x, v1).value); };

  BoundarySearch out;
  out.x = project(x_start);
  double best = objective(out.x);
  out.start_alignment = best;
  out.achieved_alignment = best;
  if (best >= options.target) return out;

  double eta = options.step_size;
  Vector grad(d);
  Vector probe;
  for (Index it = 0; it < options.max_iter && best < options.target; ++it) {
    out.iterations = it + 1;
    for (Index j = 0; j < d; ++j) {
      probe = out.x;
      probe(j) += options.fd_step;
      const double up = objective(probe);
      probe(j) = out.x(j) - options.fd_step;
      const double down = objective(probe);
      grad(j) = (up - down) / (2.0 * options.fd_step);
    }
    const double gn = grad.norm();
    if (!(gn > 0) || eta < 1e-12) break;
    const Vector candidate = project(out.x + eta * grad / gn);
    const double value = objective(candidate);
    if (value > best) {
      out.x = candidate;
      best = value;
      out.accepted_path.push_back(best);
    } else {
      eta *= 0.5;
    }
  }
  out.achieved_alignment = best;
  out.no_progress = !(best > out.start_alignment);
  return out;
}

MarginEstimate estimate_margin(const NetworkSpec& spec, const Vector& theta, const SpectralDecomposition& decomp,
                               const LabeledDataset& d, const Vector& lower, const Vector& upper,
                               const BoundarySearchOptions& options) {
  if (decomp.dim() < 1) throw Error(Errc::DimMismatch, "no eigenvectors available");
  const AlignmentMatrix am = alignment_matrix(spec, theta, d, decomp, 1);
  const ExtremeSamples ex = select_extreme_samples(am.values.col(0));

  MarginEstimate est;
  est.t_min_index = ex.min_index;
  est.t_max_index = ex.max_index;
  est.x_t_min = d.sample(ex.min_index);
  est.x_t_max = d.sample(ex.max_index);
  const Vector start = 0.5 * (est.x_t_min + est.x_t_max);
  const Vector v1 = decomp.eigenvectors.col(0);
  const BoundarySearch search = find_boundary_point(spec, theta, v1, start, lower, upper, options);

  est.x_b = search.x;
  est.achieved_alignment = search.achieved_alignment;
  est.iterations = search.iterations;
  est.no_progress = search.no_progress;
  est.d_min = (est.x_b - est.x_t_min).norm();
  est.d_max = (est.x_b - est.x_t_max).norm();
  est.margin = std::min(est.d_min, est.d_max);
  est.low_confidence = est.achieved_alignment < kLowConfidenceAlignment;
  return est;
}

MarginEstimate estimate_margin(const NetworkSpec& spec, const Vector& theta, const SpectralDecomposition& decomp,
                               const LabeledDataset& d, const BoundarySearchOptions& options) {
  const auto [lower, upper] = bounding_box(d, 0.1);
  return estimate_margin(spec, theta, decomp, d, lower, upper, options);
}

GeneralizationReport generalization_report(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                                           const SpectralDecomposition& decomp, const ReportOptions& options) {
  GeneralizationReport r;
  const AlignmentMatrix am = alignment_matrix(spec, theta, d, decomp, decomp.dim(), options.loss_kind);
  r.epsilon = random_direction_epsilon(spec, theta, d, options.epsilon_repeats, options.epsilon_seed,
                                       options.epsilon_aggregation, options.loss_kind);
  const GeneralizationMeasure gm = generalization_measure(am, r.epsilon);
  r.G = gm.G;
  r.m = gm.m;
  const ClassicalMeasures cm = classical_measures(decomp, theta);
  r.trace = cm.trace;
  r.lambda_max = cm.lambda_max;
  r.param_norm = cm.param_norm;
  r.outlier_count = spectrum_outliers(decomp.eigenvalues, d.num_classes);
  r.param_count = decomp.dim();
  r.epsilon_repeats = options.epsilon_repeats;
  r.epsilon_seed = options.epsilon_seed;
  r.epsilon_aggregation = options.epsilon_aggregation;
  return r;
}

}  // namespace hessbound
