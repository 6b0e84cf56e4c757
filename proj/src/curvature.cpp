#include "hessbound/curvature.hpp"

#include "hessbound/error.hpp"
#include "hessbound/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace hessbound {

Objective training_objective(const NetworkSpec& spec, const LabeledDataset& d, const LossConfig& lc) {
  auto data = std::make_shared<const LabeledDataset>(d);
  return Objective{
      [spec, data, lc](const Vector& theta) { return batch_loss(spec, theta, *data, lc); },
      [spec, data, lc](const Vector& theta) { return grad_loss(spec, theta, *data, lc); },
  };
}

double fd_step(const Vector& theta, const Vector& v) {
  const double vn = v.norm();
  if (vn == 0) throw Error(Errc::ZeroVector, "finite-difference direction is zero");
  return std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + theta.norm()) / vn;
}

Vector hvp(const Objective& f, const Vector& theta, const Vector& v) {
  if (v.size() != theta.size()) throw Error(Errc::DimMismatch, "direction length does not match parameters");
  const double h = fd_step(theta, v);
  const Vector plus = f.gradient(theta + h * v);
  const Vector minus = f.gradient(theta - h * v);
  return (plus - minus) / (2.0 * h);
}

Vector hvp(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d, const Vector& v,
           const LossConfig& lc) {
  return hvp(training_objective(spec, d, lc), theta, v);
}

HessianAssembly dense_hessian(const Objective& f, const Vector& theta, const CurvatureConfig& cfg) {
  const Index p = theta.size();
  if (p > cfg.p_max) {
    throw Error(Errc::TooLarge, std::to_string(p) + " parameters exceed p_max " + std::to_string(cfg.p_max));
  }
  Matrix m(p, p);
  Vector e = Vector::Zero(p);
  for (Index j = 0; j < p; ++j) {
    e(j) = 1.0;
    m.col(j) = hvp(f, theta, e);
    e(j) = 0.0;
  }
  HessianAssembly out;
  out.raw_asymmetry = max_asymmetry(m);
  out.max_abs = p ? m.cwiseAbs().maxCoeff() : 0.0;
  if (cfg.symmetrize) {
    Matrix sym = 0.5 * (m + m.transpose());
    out.hessian = SymmetricMatrix(std::move(sym));
  } else {
    // Kept as assembled; the eigensolver reads the lower triangle.
    out.hessian = SymmetricMatrix(std::move(m), 1e-5);
  }
  return out;
}

HessianAssembly dense_hessian(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                              const LossConfig& lc, const CurvatureConfig& cfg) {
  if (spec.param_count() > cfg.p_max) {
    throw Error(Errc::TooLarge, std::to_string(spec.param_count()) + " parameters exceed p_max " +
                                    std::to_string(cfg.p_max));
  }
  return dense_hessian(training_objective(spec, d, lc), theta, cfg);
}

SymmetricMatrix gradient_covariance(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                                    LossKind kind) {
  const Index p = spec.param_count();
  Matrix G(p, d.size());
  for (Index i = 0; i < d.size(); ++i)
    G.col(i) = sample_gradient(spec, theta, d.sample(i), d.y[static_cast<std::size_t>(i)], {kind, Reduction::sum});
  Matrix sigma = (G * G.transpose()) / static_cast<double>(d.size());
  // The product is symmetric up to summation order; make it exact.
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return SymmetricMatrix(std::move(sigma));
}

double second_order_term(const SpectralDecomposition& decomp, const Vector& direction) {
  const double n = direction.norm();
  if (n == 0) throw Error(Errc::ZeroVector, "second-order term along a zero direction");
  const Vector coeffs = decomp.eigenvectors.transpose() * (direction / n);
  return 0.5 * (decomp.eigenvalues.array() * coeffs.array().square()).sum();
}

double taylor_residual(const Objective& f, const Vector& theta, const Vector& direction,
                       const SpectralDecomposition& decomp) {
  const double n = direction.norm();
  if (n < 1e-12) throw Error(Errc::ZeroVector, "Taylor residual along a zero gradient");
  if (decomp.dim() != theta.size()) throw Error(Errc::DimMismatch, "decomposition does not match parameters");
  const Vector step = direction / n;
  const double base = f.value(theta);
  const double moved = f.value(theta + step);
  const double first = f.gradient(theta).dot(step);
  return std::abs(moved - base - first - second_order_term(decomp, step));
}

double taylor_residual(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                       const Vector& x, const SpectralDecomposition& decomp, const LossConfig& lc) {
  return taylor_residual(training_objective(spec, d, lc), theta, reinforcing_gradient(spec, theta, x, lc.kind),
                         decomp);
}

Index spectrum_outliers(const Vector& eigenvalues, int num_classes) {
  const Index p = eigenvalues.size();
  if (p < 2) throw Error(Errc::DimMismatch, "outlier counting needs at least two eigenvalues");
  const Index cap = std::min<Index>(3 * static_cast<Index>(num_classes), p - 1);
  Index best = 1;
  double best_gap = -std::numeric_limits<double>::infinity();
  for (Index k = 1; k <= cap; ++k) {
    const double gap = eigenvalues(k - 1) - eigenvalues(k);
    if (gap > best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  return best;
}

SpectrumHistogram spectrum_histogram(const Vector& eigenvalues, int num_classes, Index bins) {
  SpectrumHistogram h;
  h.outlier_count = spectrum_outliers(eigenvalues, num_classes);
  const double lo = eigenvalues.minCoeff();
  double hi = eigenvalues.maxCoeff();
  if (hi <= lo) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  for (Index b = 0; b <= bins; ++b) h.bin_edges.push_back(lo + width * static_cast<double>(b));
  h.bin_edges.back() = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (Index i = 0; i < eigenvalues.size(); ++i) {
    auto b = static_cast<Index>((eigenvalues(i) - lo) / width);
    b = std::clamp<Index>(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

}  // namespace hessbound
