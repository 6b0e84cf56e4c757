#include "hessbound/loss.hpp"

#include "hessbound/error.hpp"

#include <string>

namespace hessbound {

LossKind parse_loss_kind(std::string_view name) {
  if (name == "cross_entropy") return LossKind::cross_entropy;
  if (name == "nll") return LossKind::nll;
  throw Error(Errc::Config, "unknown loss '" + std::string(name) + "' (valid: cross_entropy, nll)");
}

Reduction parse_reduction(std::string_view name) {
  if (name == "mean") return Reduction::mean;
  if (name == "sum") return Reduction::sum;
  throw Error(Errc::Config, "unknown reduction '" + std::string(name) + "' (valid: mean, sum)");
}

std::string_view to_string(LossKind kind) { return kind == LossKind::cross_entropy ? "cross_entropy" : "nll"; }
std::string_view to_string(Reduction reduction) { return reduction == Reduction::mean ? "mean" : "sum"; }

double batch_loss(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                  const LossConfig& lc) {
  return loss_and_gradient(spec, theta, d.X, d.y, lc, nullptr);
}

LabeledDataset class_restriction(const LabeledDataset& d, int c) {
  const std::vector<Index> rows = d.indices_of_class(c);
  if (rows.empty()) throw Error(Errc::EmptyClass, "class " + std::to_string(c) + " has no samples");
  LabeledDataset out = d.subset(rows);
  out.name = d.name + "_class" + std::to_string(c);
  return out;
}

double per_class_loss(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d, int c,
                      const LossConfig& lc) {
  return batch_loss(spec, theta, class_restriction(d, c), lc);
}

Vector reinforcing_gradient(const NetworkSpec& spec, const Vector& theta, const Vector& x,
                            LossKind kind) {
  const int yhat = predict(spec, theta, x);
  return sample_gradient(spec, theta, x, yhat, {kind, Reduction::sum});
}

Matrix reinforcing_gradients(const NetworkSpec& spec, const Vector& theta, const Matrix& X,
                             LossKind kind) {
  Matrix G(spec.param_count(), X.rows());
  for (Index i = 0; i < X.rows(); ++i) G.col(i) = reinforcing_gradient(spec, theta, X.row(i).transpose(), kind);
  return G;
}

}  // namespace hessbound
