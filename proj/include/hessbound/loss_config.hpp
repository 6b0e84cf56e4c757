#pragma once

#include <string_view>

namespace hessbound {

enum class LossKind { cross_entropy, nll };
enum class Reduction { mean, sum };

struct LossConfig {
  LossKind kind = LossKind::cross_entropy;
  Reduction reduction = Reduction::mean;
};

LossKind parse_loss_kind(std::string_view name);
Reduction parse_reduction(std::string_view name);
std::string_view to_string(LossKind kind);
std::string_view to_string(Reduction reduction);

}  // namespace hessbound
