#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "synthcl/core_math.hpp"

namespace synthcl {

enum class Origin : std::uint8_t { Real = 0, Synthetic = 1 };

struct Sample {
  Vec features;
  std::optional<std::uint32_t> label;
};

/// Samples stored row-wise. Labels are only consulted by the linear probe.
struct Dataset {
  Mat features;
  std::vector<std::optional<std::uint32_t>> labels;
  Origin origin = Origin::Real;
  std::uint32_t n_classes = 0;

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
  Sample sample(std::size_t i) const;
  bool fully_labeled() const;

  /// Non-empty, finite, one label slot per row, labels < n_classes.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

struct MixConfig {
  double real_fraction = 1.0;  // rho

  void validate() const;
};

struct AugmentationParams {
  double noise_sigma = 0.0;
  std::pair<double, double> scale_range{1.0, 1.0};
  double mask_fraction = 0.0;

  void validate() const;
};

struct ToyGeneratorConfig {
  std::uint32_t n_classes = 10;
  std::size_t per_class = 100;
  std::size_t eval_per_class = 50;
  std::size_t dim = 256;
  double class_sep = 4.0;
  double within_scale = 1.0;
  /// Norm of the per-class offset applied to the synthetic clone's means.
  double distribution_shift = 0.0;
  std::size_t synthetic_per_class = 100;

  void validate() const;
};

/// n_classes x dim class means, each an isotropic Gaussian direction scaled to
/// norm class_sep.
Mat draw_class_means(std::uint32_t n_classes, std::size_t dim, double class_sep, Rng& rng);

/// Each mean plus an offset of norm `shift` in a random direction. shift == 0
/// returns the means unchanged without drawing.
Mat shift_class_means(const Mat& means, double shift, Rng& rng);

/// Class-major samples: per_class rows for class 0, then class 1, and so on.
/// Each row is mean + N(0, within_scale^2 I).
Dataset sample_around_means(const Mat& means, std::size_t per_class, double within_scale,
                            Origin origin, Rng& rng);

/// Means then samples, as above.
Dataset toy_generate(std::uint32_t n_classes, std::size_t per_class, std::size_t dim,
                     double class_sep, double within_scale, Rng& rng, Origin origin = Origin::Real);

struct ToySuite {
  Dataset real;       // pretraining set, also the probe's training set
  Dataset eval;       // held-out real samples for probe evaluation
  Dataset synthetic;  // clone drawn around shifted means
  Mat real_means;
  Mat synthetic_means;
};

/// Draw order: real means, real samples, eval samples, shifted means,
/// synthetic samples.
ToySuite toy_generate_suite(const ToyGeneratorConfig& cfg, Rng& rng);

/// Two independently augmented views of `features`. Per view, in order: one
/// uniform scale (skipped when lo == hi), one gauss per coordinate when sigma
/// > 0, then ceil(mask_fraction * D) coordinates zeroed.
std::pair<Vec, Vec> two_views(std::span<const double> features, const AugmentationParams& params,
                              Rng& rng);

/// two_views applied row by row.
std::pair<Mat, Mat> augment_batch(const Mat& batch, const AugmentationParams& params, Rng& rng);

struct BatchItem {
  Origin source;
  std::size_t index;

  bool operator==(const BatchItem&) const = default;
};

using MixedBatch = std::vector<BatchItem>;

/// Random-access mixed batch schedule.
///
/// Each batch holds ceil(rho * B) real items followed by B - ceil(rho * B)
/// synthetic ones. Within an epoch every source is consumed along a fresh
/// permutation, so no item repeats until the source is exhausted; an exhausted
/// source wraps onto a new permutation. Permutations derive from
/// (seed, source, epoch, pass) alone, so batch(step) needs no sampler state.
class MixedBatchSampler {
 public:
  MixedBatchSampler(const Dataset* real, const Dataset* synthetic, MixConfig mix,
                    std::size_t batch_size, std::uint64_t seed);

  std::size_t batch_size() const noexcept { return batch_size_; }
  std::size_t real_per_batch() const noexcept { return real_per_batch_; }
  std::size_t synthetic_per_batch() const noexcept { return batch_size_ - real_per_batch_; }
  /// floor(|base| / B), at least 1; base is the real set when rho > 0,
  /// otherwise the synthetic set.
  std::size_t steps_per_epoch() const noexcept { return steps_per_epoch_; }
  /// True when a source's per-epoch demand exceeds its size.
  bool wraps(Origin source) const;

  MixedBatch batch(std::uint64_t step) const;

  /// Feature rows for one batch, in batch order.
  Mat gather(const MixedBatch& batch) const;

 private:
  std::vector<std::size_t> permutation(Origin source, std::uint64_t epoch, std::uint64_t pass) const;
  std::size_t source_size(Origin source) const;

  const Dataset* real_;
  const Dataset* synthetic_;
  MixConfig mix_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::size_t real_per_batch_;
  std::size_t steps_per_epoch_;
};

/// Materialized schedule for `epochs` epochs; the sampler seed is one draw.
std::vector<MixedBatch> mixed_batches(const Dataset* real, const Dataset* synthetic, MixConfig mix,
                                      std::size_t batch_size, std::size_t epochs, Rng& rng);

/// Binary dataset file, little-endian:
///   "S2CO" | u32 version=1 | u8 origin | u32 n_classes | u32 n_samples | u32 dim
///   | n*dim f32 features | n u32 labels (0xFFFFFFFF = unlabeled)
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint32_t kUnlabeled = 0xFFFFFFFFu;

std::vector<std::uint8_t> dataset_encode(const Dataset& dataset);
Dataset dataset_decode(std::span<const std::uint8_t> bytes);
void dataset_write(const std::filesystem::path& path, const Dataset& dataset);
Dataset dataset_read(const std::filesystem::path& path);

// Raw file helpers shared with the checkpoint code.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace synthcl
