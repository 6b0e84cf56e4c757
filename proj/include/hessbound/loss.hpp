#pragma once

#include "hessbound/data.hpp"
#include "hessbound/loss_config.hpp"
#include "hessbound/network.hpp"

namespace hessbound {

/// -log softmax(f(x))[y] over D, reduced per lc.reduction.
double batch_loss(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d,
                  const LossConfig& lc = {});

/// The samples of D with label c. Throws Errc::EmptyClass if there are none.
LabeledDataset class_restriction(const LabeledDataset& d, int c);

double per_class_loss(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d, int c,
                      const LossConfig& lc = {});

/// Gradient of the single-sample loss labelled with the network's own
/// prediction, which strengthens the currently dominating class.
Vector reinforcing_gradient(const NetworkSpec& spec, const Vector& theta, const Vector& x,
                            LossKind kind = LossKind::cross_entropy);

/// Reinforcing gradients for every row of X, one per column of the result.
Matrix reinforcing_gradients(const NetworkSpec& spec, const Vector& theta, const Matrix& X,
                             LossKind kind = LossKind::cross_entropy);

}  // namespace hessbound
