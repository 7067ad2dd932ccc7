#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthcl/contrastive_loss.hpp"
#include "synthcl/data.hpp"
#include "synthcl/negative_synthesis.hpp"
#include "synthcl/probe.hpp"

namespace synthcl {

struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t epochs = 50;
  /// When > 0, overrides epochs * steps_per_epoch as the run length.
  std::size_t max_steps = 0;
  std::size_t batch_size = 32;
  double lr = 0.05;
  double weight_decay = 0.0;
  bool cosine_lr = false;
  double momentum = 0.99;
  std::size_t queue_capacity = 1024;
  double temperature = 0.2;
  bool symmetric = true;
  /// Disabling this freezes the queue (used to isolate EMA behaviour).
  bool enqueue = true;
  /// Skip the gradient update until the queue holds at least N keys.
  bool skip_until_fill = false;
  std::vector<std::size_t> encoder_dims{256, 256, 128, 64};
  SynthesisConfig synthesis;
  MixConfig mix;
  AugmentationParams augmentation{1.0, {0.8, 1.2}, 0.1};
  ProbeConfig probe;
  std::string real_path;
  std::string synthetic_path;
  std::string probe_train_path;  // defaults to real_path
  std::string probe_eval_path;   // defaults to the probe training set

  LossConfig loss_config() const { return {temperature, symmetric, true}; }
  /// Throws ConfigError on the first violated invariant.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Strict: unknown keys and wrongly typed values raise ConfigError. Missing
/// keys keep their defaults.
TrainConfig config_from_json(const nlohmann::json& j);
TrainConfig load_config(const std::filesystem::path& path);

/// Apply "a.b.c=value" to a JSON document. The value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const TrainConfig& cfg);

/// L = round(r * K / (1 - r)) for a synthetic ratio r = L / (K + L).
std::size_t synthetic_count_for_ratio(double ratio, std::size_t queue_capacity);

}  // namespace synthcl
