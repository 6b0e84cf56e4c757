#include "hessbound/training.hpp"

#include "hessbound/error.hpp"
#include "hessbound/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace hessbound {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent streams derived from one user seed.
constexpr std::uint64_t kAuxShuffleStream = 0x5eed0001;
constexpr std::uint64_t kLabelStream = 0x5eed0002;

void aux_fit(const NetworkSpec& spec, Vector& theta, const LabeledDataset& d, const InitParams& params,
             std::uint64_t seed, const char* what) {
  OptimizerConfig opt = params.aux_optimizer;
  opt.shuffle_seed = splitmix64(seed ^ kAuxShuffleStream);
  StopCriteria stop = params.aux_stop;
  stop.require_full_train_accuracy = true;
  TrainResult r = train(spec, theta, d, opt, stop, {}, params.loss);
  if (r.report.final_train_accuracy < 1.0) {
    throw Error(Errc::AuxTrainingFailed, std::string(what) + " fit reached accuracy " +
                                             std::to_string(r.report.final_train_accuracy) + " after " +
                                             std::to_string(r.report.epochs_run) + " epochs");
  }
  theta = std::move(r.theta);
}

}  // namespace

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  if (name == "adamw") return OptimizerKind::adamw;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  throw Error(Errc::Config, "unknown optimizer '" + std::string(name) + "' (valid: sgd, adam, adamw, rmsprop)");
}

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::adamw: return "adamw";
    case OptimizerKind::rmsprop: return "rmsprop";
  }
  return "unknown";
}

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) throw Error(Errc::Config, "learning_rate must be >= 0");
  if (batch_size < 1) throw Error(Errc::Config, "batch_size must be >= 1");
}

void StopCriteria::validate() const {
  if (max_epochs < 1) throw Error(Errc::Config, "max_epochs must be >= 1");
  if (loss_window < 1) throw Error(Errc::Config, "loss_window must be >= 1");
}

Optimizer::Optimizer(const OptimizerConfig& cfg, Index param_count) : cfg_(cfg) {
  cfg_.validate();
  m_ = Vector::Zero(param_count);
  v_ = Vector::Zero(param_count);
}

void Optimizer::step(Vector& theta, const Vector& grad) {
  ++t_;
  const double lr = cfg_.learning_rate;
  switch (cfg_.kind) {
    case OptimizerKind::sgd:
      theta -= lr * grad;
      break;
    case OptimizerKind::adamw:
      theta *= 1.0 - lr * cfg_.weight_decay;
      [[fallthrough]];
    case OptimizerKind::adam: {
      m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
      v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
      const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
      theta.array() -= lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + cfg_.eps);
      break;
    }
    case OptimizerKind::rmsprop:
      v_ = cfg_.rms_alpha * v_ + (1.0 - cfg_.rms_alpha) * grad.cwiseAbs2();
      theta.array() -= lr * grad.array() / (v_.array().sqrt() + cfg_.eps);
      break;
  }
}

TrainResult train(const NetworkSpec& spec, const Vector& theta0, const LabeledDataset& d,
                  const OptimizerConfig& opt, const StopCriteria& stop, const std::vector<long>& checkpoint_at,
                  const LossConfig& lc) {
  spec.validate();
  stop.validate();
  d.validate();
  if (theta0.size() != spec.param_count()) throw Error(Errc::ShapeMismatch, "initial parameters do not match the network");

  TrainResult result{theta0, {}};
  TrainReport& rep = result.report;
  Vector& theta = result.theta;
  Optimizer optimizer(opt, theta.size());
  std::mt19937_64 rng(opt.shuffle_seed);

  std::vector<long> wanted = checkpoint_at;
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  auto maybe_checkpoint = [&](long epoch) {
    if (std::binary_search(wanted.begin(), wanted.end(), epoch)) {
      rep.checkpoint_epochs.push_back(epoch);
      rep.checkpoint_params.push_back(theta);
    }
  };
  maybe_checkpoint(0);

  const Index n = d.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Matrix batch_x;
  std::vector<int> batch_y;
  Vector grad;

  for (long epoch = 1; epoch <= stop.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < n; start += opt.batch_size) {
      const Index len = std::min(opt.batch_size, n - start);
      batch_x.resize(len, d.dim());
      batch_y.resize(static_cast<std::size_t>(len));
      for (Index k = 0; k < len; ++k) {
        const Index src = order[static_cast<std::size_t>(start + k)];
        batch_x.row(k) = d.X.row(src);
        batch_y[static_cast<std::size_t>(k)] = d.y[static_cast<std::size_t>(src)];
      }
      loss_and_gradient(spec, theta, batch_x, batch_y, lc, &grad);
      optimizer.step(theta, grad);
    }

    const double loss = batch_loss(spec, theta, d, lc);
    if (!std::isfinite(loss) || !theta.allFinite()) {
      throw Error(Errc::Diverged, "loss became non-finite at epoch " + std::to_string(epoch));
    }
    rep.loss_history.push_back(loss);
    rep.epochs_run = epoch;
    maybe_checkpoint(epoch);

    const double acc = accuracy(spec, theta, d);
    rep.final_loss = loss;
    rep.final_train_accuracy = acc;
    if (stop.require_full_train_accuracy && acc < 1.0) continue;
    if (epoch < stop.loss_window) continue;
    const auto window_begin = rep.loss_history.end() - stop.loss_window;
    const auto [lo, hi] = std::minmax_element(window_begin, rep.loss_history.end());
    if (*hi - *lo < stop.loss_tol) {
      rep.converged = true;
      break;
    }
  }
  return result;
}

InitScheme parse_init_scheme(std::string_view name) {
  if (name == "normal") return InitScheme::normal;
  if (name == "adversarial") return InitScheme::adversarial;
  if (name == "large_norm") return InitScheme::large_norm;
  if (name == "wide_margin") return InitScheme::wide_margin;
  throw Error(Errc::Config, "unknown init scheme '" + std::string(name) +
                                "' (valid: normal, adversarial, large_norm, wide_margin)");
}

std::string_view to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::normal: return "normal";
    case InitScheme::adversarial: return "adversarial";
    case InitScheme::large_norm: return "large_norm";
    case InitScheme::wide_margin: return "wide_margin";
  }
  return "unknown";
}

int random_label(std::uint64_t label_seed, Index index, int num_classes) {
  const std::uint64_t h = splitmix64(label_seed ^ splitmix64(static_cast<std::uint64_t>(index)));
  return static_cast<int>(h % static_cast<std::uint64_t>(num_classes));
}

LabeledDataset with_random_labels(const LabeledDataset& d, std::uint64_t label_seed) {
  LabeledDataset out = d;
  for (std::size_t i = 0; i < out.y.size(); ++i)
    out.y[i] = random_label(label_seed, static_cast<Index>(i), d.num_classes);
  out.name = d.name + "_random_labels";
  return out;
}

Vector make_init(InitScheme scheme, const NetworkSpec& spec, const LabeledDataset& d, std::uint64_t seed,
                 const InitParams& params) {
  Vector theta = init_params(spec, seed);
  switch (scheme) {
    case InitScheme::normal:
      break;
    case InitScheme::large_norm: {
      if (!(params.target_norm > 0)) throw Error(Errc::Config, "target_norm must be positive");
      theta *= params.target_norm / theta.norm();
      break;
    }
    case InitScheme::adversarial: {
      const LabeledDataset shuffled = with_random_labels(d, splitmix64(seed ^ kLabelStream));
      aux_fit(spec, theta, shuffled, params, seed, "random-label");
      break;
    }
    case InitScheme::wide_margin: {
      LabeledDataset pretrain =
          params.pretrain_data ? *params.pretrain_data
                               : gen_synthetic(SyntheticKind::checkerboard_pulled_in,
                                               std::max<Index>(1, d.size() / 2), params.pretrain_data_seed,
                                               params.synthetic);
      if (pretrain.dim() != spec.input_dim() || pretrain.num_classes != spec.num_classes()) {
        throw Error(Errc::ShapeMismatch, "pretraining data does not match the network");
      }
      aux_fit(spec, theta, pretrain, params, seed, "pulled-in pretraining");
      break;
    }
  }
  return theta;
}

}  // namespace hessbound
