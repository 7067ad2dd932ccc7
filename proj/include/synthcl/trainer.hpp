#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthcl/checkpoint.hpp"
#include "synthcl/config.hpp"

namespace synthcl {

struct MetricsRecord {
  std::uint64_t step = 0;  // 1-based count of completed steps
  double loss = 0.0;
  std::size_t queue_fill = 0;
  /// Mean similarity of queries to their mined hard negatives; absent while
  /// the queue holds fewer than N keys.
  std::optional<double> mean_real_hardness;
  /// Mean similarity of queries to their synthetic negatives; absent when no
  /// synthetic negatives were produced.
  std::optional<double> mean_synth_hardness;
  double lr = 0.0;
  double real_fraction = 1.0;
  std::size_t n_hardest = 0;
  std::size_t n_synthetic = 0;
  double positive_logit_mean = 0.0;
  double negative_logit_mean = 0.0;
  bool updated = true;  // false while skip_until_fill holds the update back

  bool operator==(const MetricsRecord&) const = default;
};

nlohmann::json to_json(const MetricsRecord& m);
MetricsRecord metrics_from_json(const nlohmann::json& j);

/// Fresh state: online encoder from the config seed, target a copy of it,
/// empty queue.
RunState init_state(const TrainConfig& cfg);

/// Learning rate for a 0-based step of a run with `total_steps` steps.
double lr_at(const TrainConfig& cfg, std::uint64_t step, std::uint64_t total_steps);

/// One full training step on a batch of raw samples:
///   1. two views per sample
///   2. online forward (traced) and target forward on both views
///   3. per query: mine N hardest queue keys, synthesize L negatives
///   4. symmetric InfoNCE against queue + that query's synthetic negatives
///   5. backward through the online encoder, SGD step
///   6. EMA update of the target
///   7. enqueue the keys of the second view
/// Random draws, in order: augmentation (row by row, view 1 then view 2),
/// then synthesis for queries of view 1 followed by view 2.
MetricsRecord train_step(RunState& state, const Mat& batch, const TrainConfig& cfg, double lr);

/// Non-owning view of in-memory datasets for a run.
struct DataSources {
  const Dataset* real = nullptr;
  const Dataset* synthetic = nullptr;
};

struct PretrainOptions {
  std::filesystem::path out_dir;  // empty: keep everything in memory
  std::optional<std::filesystem::path> resume_from;
  /// Stop (and checkpoint) once this many steps are complete, as if
  /// interrupted.
  std::optional<std::uint64_t> stop_at_step;
  bool quiet = true;
};

struct PretrainResult {
  RunState state;
  std::vector<MetricsRecord> metrics;  // every step of the run, including resumed history
  std::uint64_t total_steps = 0;
  std::uint64_t steps_per_epoch = 0;
};

/// Files written under out_dir: config.json, metrics.jsonl, checkpoint_last.s2ck
/// (every epoch and on interruption), checkpoint_final.s2ck.
PretrainResult pretrain(const TrainConfig& cfg, const DataSources& data, const PretrainOptions& opts);

/// Loads the datasets named in the config.
PretrainResult pretrain(const TrainConfig& cfg, const PretrainOptions& opts);

/// Mean loss over the last `window` records (all when fewer).
double tail_mean_loss(const std::vector<MetricsRecord>& metrics, std::size_t window = 100);
double head_mean_loss(const std::vector<MetricsRecord>& metrics, std::size_t window = 100);

enum class SweepAxis { Hardness, SyntheticRatio, RealFraction };
std::optional<SweepAxis> parse_sweep_axis(std::string_view name) noexcept;
std::string_view sweep_axis_name(SweepAxis axis) noexcept;

/// The base config with one axis set to `value`.
TrainConfig apply_sweep_value(const TrainConfig& base, SweepAxis axis, double value);

struct SweepRow {
  double axis_value = 0.0;
  ProbeResult probe;
  double final_loss = 0.0;
};

struct ProbeSources {
  const Dataset* train = nullptr;
  const Dataset* eval = nullptr;
};

/// One pretrain + probe per value, in input order. Point i writes to
/// out_dir/point_<i> when out_dir is set.
std::vector<SweepRow> sweep(const TrainConfig& base, SweepAxis axis, const std::vector<double>& values,
                            const DataSources& data, const ProbeSources& probe,
                            const std::filesystem::path& out_dir = {});

/// "axis_value,top1,top5,final_loss" header plus one row per point.
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Shortest decimal that round-trips.
std::string format_double(double x);

}  // namespace synthcl
