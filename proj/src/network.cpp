#include "hessbound/network.hpp"

#include "hessbound/error.hpp"

#include <cmath>
#include <random>
#include <string>

namespace hessbound {

namespace {

using ConstMatMap = Eigen::Map<const Matrix>;
using MatMap = Eigen::Map<Matrix>;

void check_theta(const NetworkSpec& spec, const Vector& theta) {
  if (theta.size() != spec.param_count()) {
    throw Error(Errc::ShapeMismatch, "parameter vector has length " + std::to_string(theta.size()) +
                                         ", network expects " + std::to_string(spec.param_count()));
  }
}

void activate(Activation a, Matrix& z) {
  if (a == Activation::relu) {
    z = z.cwiseMax(0.0);
  } else {
    z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }
}

// d act / d z evaluated from the pre-activation; ReLU'(0) = 0.
Matrix activation_derivative(Activation a, const Matrix& z) {
  if (a == Activation::relu) return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
  return z.unaryExpr([](double v) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    return s * (1.0 - s);
  });
}

// Column-wise log-softmax of a C x n logit block.
Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    const double lse = mx + std::log((logits.col(j).array() - mx).exp().sum());
    out.col(j) = logits.col(j).array() - lse;
  }
  return out;
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  throw Error(Errc::Config, "unknown activation '" + std::string(name) + "' (valid: relu, sigmoid)");
}

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "sigmoid"; }

void NetworkSpec::validate() const {
  if (layer_widths.size() < 2) {
    throw Error(Errc::ShapeMismatch, "a network needs at least an input and an output width");
  }
  for (Index w : layer_widths)
    if (w < 1) throw Error(Errc::ShapeMismatch, "layer widths must be >= 1");
}

Index NetworkSpec::param_count() const {
  Index p = 0;
  for (std::size_t l = 1; l < layer_widths.size(); ++l)
    p += layer_widths[l - 1] * layer_widths[l] + layer_widths[l];
  return p;
}

ParamLayout::ParamLayout(const NetworkSpec& spec) {
  spec.validate();
  Index offset = 0;
  for (std::size_t l = 1; l < spec.layer_widths.size(); ++l) {
    LayerSlice s;
    s.rows = spec.layer_widths[l];
    s.cols = spec.layer_widths[l - 1];
    s.weight_offset = offset;
    offset += s.rows * s.cols;
    s.bias_offset = offset;
    offset += s.rows;
    layers_.push_back(s);
  }
  size_ = offset;
}

Vector init_params(const NetworkSpec& spec, std::uint64_t seed) {
  const ParamLayout layout(spec);
  std::mt19937_64 rng(seed);
  Vector theta(layout.size());
  for (const LayerSlice& s : layout.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index i = 0; i < s.rows * s.cols; ++i) theta(s.weight_offset + i) = dist(rng);
    for (Index i = 0; i < s.rows; ++i) theta(s.bias_offset + i) = dist(rng);
  }
  return theta;
}

Vector forward(const NetworkSpec& spec, const Vector& theta, const Vector& x, ForwardTrace* trace) {
  check_theta(spec, theta);
  if (x.size() != spec.input_dim()) {
    throw Error(Errc::ShapeMismatch, "input has length " + std::to_string(x.size()) +
                                         ", network expects " + std::to_string(spec.input_dim()));
  }
  const ParamLayout layout(spec);
  if (trace) {
    trace->pre_activations.clear();
    trace->activations.assign(1, x);
  }
  Vector a = x;
  const auto layers = layout.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSlice& s = layers[l];
    ConstMatMap W(theta.data() + s.weight_offset, s.rows, s.cols);
    Vector z = W * a + theta.segment(s.bias_offset, s.rows);
    if (trace) trace->pre_activations.push_back(z);
    if (l + 1 < layers.size()) {
      Matrix zm = z;
      activate(spec.activation, zm);
      a = zm.col(0);
    } else {
      a = z;
    }
    if (trace) trace->activations.push_back(a);
  }
  return a;
}

Matrix forward_batch(const NetworkSpec& spec, const Vector& theta, const Matrix& X) {
  check_theta(spec, theta);
  if (X.cols() != spec.input_dim()) throw Error(Errc::ShapeMismatch, "input width does not match the network");
  const ParamLayout layout(spec);
  Matrix a = X.transpose();
  const auto layers = layout.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSlice& s = layers[l];
    ConstMatMap W(theta.data() + s.weight_offset, s.rows, s.cols);
    Matrix z = W * a;
    z.colwise() += theta.segment(s.bias_offset, s.rows);
    if (l + 1 < layers.size()) activate(spec.activation, z);
    a = std::move(z);
  }
  return a.transpose();
}

int argmax(const Vector& logits) {
  int best = 0;
  for (Index c = 1; c < logits.size(); ++c)
    if (logits(c) > logits(best)) best = static_cast<int>(c);
  return best;
}

int predict(const NetworkSpec& spec, const Vector& theta, const Vector& x) {
  return argmax(forward(spec, theta, x));
}

std::vector<int> predict_batch(const NetworkSpec& spec, const Vector& theta, const Matrix& X) {
  const Matrix logits = forward_batch(spec, theta, X);
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Index i = 0; i < logits.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax(logits.row(i).transpose());
  return out;
}

double accuracy(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d) {
  const std::vector<int> pred = predict_batch(spec, theta, d.X);
  Index correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == d.y[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double loss_and_gradient(const NetworkSpec& spec, const Vector& theta, const Matrix& X,
                         std::span<const int> labels, const LossConfig& lc, Vector* grad) {
  check_theta(spec, theta);
  const Index n = X.rows();
  const Index C = spec.num_classes();
  if (n == 0) throw Error(Errc::ShapeMismatch, "empty batch");
  if (X.cols() != spec.input_dim()) throw Error(Errc::ShapeMismatch, "input width does not match the network");
  if (static_cast<Index>(labels.size()) != n) throw Error(Errc::ShapeMismatch, "label count does not match inputs");
  for (int y : labels)
    if (y < 0 || y >= C) throw Error(Errc::InvalidLabel, "label " + std::to_string(y) + " outside [0, " + std::to_string(C) + ")");

  const ParamLayout layout(spec);
  const auto layers = layout.layers();
  const std::size_t L = layers.size();

  std::vector<Matrix> acts;  // acts[l] is the input to affine layer l
  std::vector<Matrix> pres;
  acts.reserve(L + 1);
  pres.reserve(L);
  acts.push_back(X.transpose());
  for (std::size_t l = 0; l < L; ++l) {
    const LayerSlice& s = layers[l];
    ConstMatMap W(theta.data() + s.weight_offset, s.rows, s.cols);
    Matrix z = W * acts.back();
    z.colwise() += theta.segment(s.bias_offset, s.rows);
    pres.push_back(z);
    if (l + 1 < L) activate(spec.activation, z);
    acts.push_back(std::move(z));
  }
  const Matrix& logits = acts.back();
  const double scale = lc.reduction == Reduction::mean ? 1.0 / static_cast<double>(n) : 1.0;

  double loss = 0;
  Matrix delta(C, n);  // d loss / d logits
  const Matrix logp = log_softmax(logits);
  if (lc.kind == LossKind::cross_entropy) {
    // logsumexp(z) - z_y, gradient softmax - onehot.
    for (Index j = 0; j < n; ++j) {
      const int y = labels[static_cast<std::size_t>(j)];
      loss += -logp(y, j);
      delta.col(j) = logp.col(j).array().exp();
      delta(y, j) -= 1.0;
    }
  } else {
    // The log-softmax output is treated as the model's log-probabilities and
    // the NLL picks -logp[y]; the gradient goes back through the log-softmax
    // Jacobian explicitly.
    for (Index j = 0; j < n; ++j) {
      const int y = labels[static_cast<std::size_t>(j)];
      loss += -logp(y, j);
      Vector g_logp = Vector::Zero(C);
      g_logp(y) = -1.0;
      const Vector p = logp.col(j).array().exp();
      delta.col(j) = g_logp - p * g_logp.sum();
    }
  }
  loss *= scale;
  if (!grad) return loss;

  delta *= scale;
  grad->setZero(layout.size());
  for (std::size_t l = L; l-- > 0;) {
    const LayerSlice& s = layers[l];
    MatMap dW(grad->data() + s.weight_offset, s.rows, s.cols);
    dW.noalias() = delta * acts[l].transpose();
    grad->segment(s.bias_offset, s.rows) = delta.rowwise().sum();
    if (l == 0) break;
    ConstMatMap W(theta.data() + s.weight_offset, s.rows, s.cols);
    Matrix back = W.transpose() * delta;
    delta = back.cwiseProduct(activation_derivative(spec.activation, pres[l - 1]));
  }
  return loss;
}

Vector grad_loss(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& batch,
                 const LossConfig& lc) {
  Vector g;
  loss_and_gradient(spec, theta, batch.X, batch.y, lc, &g);
  return g;
}

Vector sample_gradient(const NetworkSpec& spec, const Vector& theta, const Vector& x, int label,
                       const LossConfig& lc) {
  if (x.size() != spec.input_dim()) throw Error(Errc::ShapeMismatch, "input width does not match the network");
  const Matrix X = x.transpose();
  const int labels[1] = {label};
  Vector g;
  loss_and_gradient(spec, theta, X, labels, lc, &g);
  return g;
}

Vector alpha_scale(const Vector& theta, double alpha, const NetworkSpec& spec) {
  if (spec.num_hidden_layers() != 1 || spec.activation != Activation::relu) {
    throw Error(Errc::UnsupportedArchitecture, "alpha scaling needs exactly one hidden ReLU layer");
  }
  if (!(alpha > 0)) throw Error(Errc::Config, "alpha must be positive");
  check_theta(spec, theta);
  const ParamLayout layout(spec);
  const LayerSlice& first = layout.layers()[0];
  const LayerSlice& second = layout.layers()[1];
  Vector out = theta;
  out.segment(first.weight_offset, first.rows * first.cols) *= alpha;
  out.segment(first.bias_offset, first.rows) *= alpha;
  out.segment(second.weight_offset, second.rows * second.cols) /= alpha;
  return out;
}

}  // namespace hessbound
