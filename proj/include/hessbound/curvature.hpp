#pragma once

#include "hessbound/data.hpp"
#include "hessbound/linalg.hpp"
#include "hessbound/loss_config.hpp"
#include "hessbound/network.hpp"

#include <functional>
#include <vector>

namespace hessbound {

/// A scalar objective over a flat parameter vector together with its exact
/// gradient. The curvature routines only ever see this pair, so the same code
/// serves the training loss and synthetic test objectives.
struct Objective {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

Objective training_objective(const NetworkSpec& spec, const LabeledDataset& d, const LossConfig& lc = {});

struct CurvatureConfig {
  Index p_max = kDefaultPMax;
  bool symmetrize = true;
};

/// Central-difference step sqrt(eps_machine) * (1 + ||theta||) / ||v||.
double fd_step(const Vector& theta, const Vector& v);

/// H v as (grad(theta + h v) - grad(theta - h v)) / 2h. Throws Errc::ZeroVector
/// for v = 0.
Vector hvp(const Objective& f, const Vector& theta, const Vector& v);
Vector hvp(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d, const Vector& v,
           const LossConfig& lc = {});

struct HessianAssembly {
  SymmetricMatrix hessian;
  double raw_asymmetry = 0;  // max |M - M^T| before symmetrization
  double max_abs = 0;        // max |M| before symmetrization

  bool asymmetry_within_tolerance() const { return raw_asymmetry <= 1e-5 * (1.0 + max_abs); }
};

/// Column-by-column assembly from p Hessian-vector products with the unit
/// basis vectors, then (M + M^T) / 2 when cfg.symmetrize is set.
HessianAssembly dense_hessian(const Objective& f, const Vector& theta, const CurvatureConfig& cfg = {});
HessianAssembly dense_hessian(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                              const LossConfig& lc = {}, const CurvatureConfig& cfg = {});

/// (1/n) sum_i g_i g_i^T with g_i the gradient of the single-sample loss at the
/// true label.
SymmetricMatrix gradient_covariance(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                                    LossKind kind = LossKind::cross_entropy);

/// 1/2 sum_i lambda_i <u, v_i>^2 for the unit vector u = direction / ||direction||.
double second_order_term(const SpectralDecomposition& decomp, const Vector& direction);

/// |L(theta + u) - L(theta) - <grad L, u> - 1/2 sum_i lambda_i A_i^2| for the
/// unit step u along `direction`. Throws Errc::ZeroVector for a zero direction.
double taylor_residual(const Objective& f, const Vector& theta, const Vector& direction,
                       const SpectralDecomposition& decomp);

/// The same check with the step taken along the reinforcing gradient of x.
double taylor_residual(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                       const Vector& x, const SpectralDecomposition& decomp, const LossConfig& lc = {});

/// Outlier count: the index k in [1, min(3C, p-1)] with the largest gap
/// lambda_k - lambda_{k+1} (first such k on ties).
Index spectrum_outliers(const Vector& eigenvalues_descending, int num_classes);

struct SpectrumHistogram {
  std::vector<double> bin_edges;
  std::vector<Index> counts;
  Index outlier_count = 0;
};

SpectrumHistogram spectrum_histogram(const Vector& eigenvalues_descending, int num_classes, Index bins = 50);

}  // namespace hessbound
