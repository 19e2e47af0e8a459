#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgns/trainer.hpp"

namespace kgns {

struct Preset {
  std::string name;     // e.g. "fb15k237-transe"
  std::string dataset;  // "FB15k-237", "WN18RR" or "YAGO3-10"
  TrainConfig config;
};

/// Every (dataset, model) cell of the reference hyperparameter tables. Loss is SANS
/// with Base subsampling.
const std::vector<Preset>& presets();
std::optional<Preset> find_preset(std::string_view name);

}  // namespace kgns
