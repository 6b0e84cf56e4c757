#pragma once

#include "hessbound/data.hpp"
#include "hessbound/loss_config.hpp"
#include "hessbound/network.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace hessbound {

enum class OptimizerKind { sgd, adam, adamw, rmsprop };

OptimizerKind parse_optimizer_kind(std::string_view name);
std::string_view to_string(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.2;
  Index batch_size = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;  // adamw only
  double rms_alpha = 0.99;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

/// Stateful update rule; one instance per training run.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, Index param_count);

  void step(Vector& theta, const Vector& grad);
  long steps_taken() const { return t_; }

 private:
  OptimizerConfig cfg_;
  Vector m_;
  Vector v_;
  long t_ = 0;
};

struct StopCriteria {
  long max_epochs = 5000;
  long loss_window = 20;
  double loss_tol = 1e-5;
  bool require_full_train_accuracy = true;

  void validate() const;
};

struct TrainReport {
  long epochs_run = 0;
  double final_loss = 0;
  double final_train_accuracy = 0;
  bool converged = false;  // stop criteria met before max_epochs ran out
  std::vector<double> loss_history;  // full-batch loss after each epoch
  std::vector<long> checkpoint_epochs;
  std::vector<Vector> checkpoint_params;
};

struct TrainResult {
  Vector theta;
  TrainReport report;
};

/// Mini-batch training with a fresh shuffle every epoch drawn from
/// opt.shuffle_seed. Stops once the (optional) full-accuracy requirement holds
/// and the loss spread over the last loss_window epochs is below loss_tol, or
/// when max_epochs is reached. Checkpoint epoch 0 is the initial point.
/// Throws Errc::Diverged if the loss becomes non-finite.
TrainResult train(const NetworkSpec& spec, const Vector& theta0, const LabeledDataset& d,
                  const OptimizerConfig& opt, const StopCriteria& stop,
                  const std::vector<long>& checkpoint_at = {}, const LossConfig& lc = {});

enum class InitScheme { normal, adversarial, large_norm, wide_margin };

InitScheme parse_init_scheme(std::string_view name);
std::string_view to_string(InitScheme scheme);

struct InitParams {
  double target_norm = 100.0;
  // Random-label fits stall under plain SGD on small nets; Adam reaches 100%.
  OptimizerConfig aux_optimizer{.kind = OptimizerKind::adam, .learning_rate = 0.01};
  // Auxiliary fits stop as soon as they reach 100% training accuracy.
  StopCriteria aux_stop{20000, 1, std::numeric_limits<double>::infinity(), true};
  // wide_margin: the pulled-in pretraining set. When absent it is generated
  // from the same seed and generator constants as the checkerboard data.
  std::optional<LabeledDataset> pretrain_data;
  std::uint64_t pretrain_data_seed = 0;
  SyntheticParams synthetic{};
  LossConfig loss{};
};

/// Label for sample `index` under the random relabelling with `label_seed`.
/// Depends only on (label_seed, index), never on data order.
int random_label(std::uint64_t label_seed, Index index, int num_classes);

LabeledDataset with_random_labels(const LabeledDataset& d, std::uint64_t label_seed);

/// Starting parameters for one training scheme. adversarial and wide_margin
/// run an auxiliary fit and throw Errc::AuxTrainingFailed when it does not
/// reach 100% accuracy within params.aux_stop.max_epochs.
Vector make_init(InitScheme scheme, const NetworkSpec& spec, const LabeledDataset& d, std::uint64_t seed,
                 const InitParams& params = {});

}  // namespace hessbound
