#pragma once

#include "hessbound/data.hpp"
#include "hessbound/linalg.hpp"
#include "hessbound/loss_config.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace hessbound {

enum class Activation { relu, sigmoid };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

/// Fully-connected classifier: widths d, h_1, ..., C. The activation applies to
/// every hidden layer; the output layer emits raw logits.
struct NetworkSpec {
  std::vector<Index> layer_widths;
  Activation activation = Activation::relu;

  /// Throws Errc::ShapeMismatch unless there are at least two widths, all >= 1.
  void validate() const;

  Index input_dim() const { return layer_widths.front(); }
  Index num_classes() const { return layer_widths.back(); }
  Index num_affine_layers() const { return static_cast<Index>(layer_widths.size()) - 1; }
  Index num_hidden_layers() const { return num_affine_layers() - 1; }
  Index param_count() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Where one affine layer's weight (rows x cols, column-major) and bias live
/// inside the flat parameter vector.
struct LayerSlice {
  Index weight_offset = 0;
  Index rows = 0;  // fan-out
  Index cols = 0;  // fan-in
  Index bias_offset = 0;
};

class ParamLayout {
 public:
  explicit ParamLayout(const NetworkSpec& spec);

  std::span<const LayerSlice> layers() const { return layers_; }
  Index size() const { return size_; }

 private:
  std::vector<LayerSlice> layers_;
  Index size_ = 0;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
Vector init_params(const NetworkSpec& spec, std::uint64_t seed);

struct ForwardTrace {
  std::vector<Vector> pre_activations;  // one per affine layer
  std::vector<Vector> activations;      // input first, logits last
};

Vector forward(const NetworkSpec& spec, const Vector& theta, const Vector& x,
               ForwardTrace* trace = nullptr);

/// Logits for every row of X, returned as n x C.
Matrix forward_batch(const NetworkSpec& spec, const Vector& theta, const Matrix& X);

/// Index of the largest logit; ties go to the smallest index.
int argmax(const Vector& logits);
int predict(const NetworkSpec& spec, const Vector& theta, const Vector& x);
std::vector<int> predict_batch(const NetworkSpec& spec, const Vector& theta, const Matrix& X);
double accuracy(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& d);

/// Loss of the rows of X against `labels` and, when `grad` is non-null, its
/// exact gradient by reverse accumulation.
double loss_and_gradient(const NetworkSpec& spec, const Vector& theta, const Matrix& X,
                         std::span<const int> labels, const LossConfig& lc, Vector* grad);

Vector grad_loss(const NetworkSpec& spec, const Vector& theta, const LabeledDataset& batch,
                 const LossConfig& lc = {});

/// Gradient of the single-sample loss at (x, label).
Vector sample_gradient(const NetworkSpec& spec, const Vector& theta, const Vector& x, int label,
                       const LossConfig& lc = {});

/// Dinh et al. style rescaling of a one-hidden-layer ReLU net: first layer
/// times alpha, second-layer weights times 1/alpha. Outputs are unchanged.
Vector alpha_scale(const Vector& theta, double alpha, const NetworkSpec& spec);

}  // namespace hessbound
