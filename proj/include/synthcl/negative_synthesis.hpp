#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "synthcl/core_math.hpp"

namespace synthcl {

enum class Strategy { Interpolation, Extrapolation, Mixing, Jittering, Perturbation, Adversarial };

std::string_view strategy_name(Strategy s) noexcept;
std::optional<Strategy> parse_strategy(std::string_view name) noexcept;
inline constexpr Strategy kAllStrategies[] = {Strategy::Interpolation, Strategy::Extrapolation,
                                              Strategy::Mixing,        Strategy::Jittering,
                                              Strategy::Perturbation,  Strategy::Adversarial};

struct SynthesisConfig {
  std::vector<Strategy> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
  std::size_t n_hardest = 64;   // N
  std::size_t n_synthetic = 0;  // L
  std::pair<double, double> alpha_range{0.01, 0.5};
  std::pair<double, double> beta_range{0.01, 0.5};
  double sigma = 0.1;
  double mask_fraction = 0.1;
  double eta = 0.1;

  bool uses(Strategy s) const;
  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

/// The N queue rows most similar to a query.
struct HardNegativeSet {
  std::size_t query_index = 0;
  std::vector<std::size_t> member_indices;  // queue rows, hardest first
  Vec member_sims;
  Mat members;
};

struct SyntheticNegativeBatch {
  Mat rows;                         // L x d, unit rows
  std::vector<Strategy> strategy_tags;
};

struct HardnessStats {
  double mean_real_sim = 0.0;
  double mean_synth_sim = 0.0;
  double max_synth_sim = 0.0;
};

/// Top-n cosine neighbours of q among the snapshot rows. Rows and q are unit
/// vectors, so the similarity is the plain dot product.
HardNegativeSet mine_hardest(std::span<const double> q, const Mat& queue_snapshot, std::size_t n,
                             std::size_t query_index = 0);

/// Same selection from precomputed similarities (one per snapshot row).
HardNegativeSet mine_hardest_from_sims(std::span<const double> sims, const Mat& queue_snapshot,
                                       std::size_t n, std::size_t query_index = 0);

// Individual synthesis rules; each returns a unit vector.
Vec interpolate(std::span<const double> q, std::span<const double> n, double alpha);
Vec extrapolate(std::span<const double> q, std::span<const double> n, double beta);
Vec mix(std::span<const double> n_i, std::span<const double> n_j, double lambda);
Vec jitter(std::span<const double> n, std::span<const double> noise);
/// Zeroes the listed coordinates of n before normalizing.
Vec perturb(std::span<const double> n, std::span<const std::size_t> masked);
Vec adversarial(std::span<const double> q, std::span<const double> n, double eta);

/// L synthetic negatives for one query.
///
/// Row i uses strategy enabled[i % |enabled|]. Draws per row, in order:
///   basis index           below(N)
///   interpolation         uniform(alpha_range)
///   extrapolation         uniform(beta_range)
///   mixing                below(N - 1) for the partner (skipping the basis), uniform(0, 1)
///   jittering             d gauss(0, sigma)
///   perturbation          ceil(p * d) mask indices; one resample if degenerate
///   adversarial           none
SyntheticNegativeBatch synthesize(std::span<const double> q, const HardNegativeSet& hard,
                                  const SynthesisConfig& cfg, Rng& rng);

HardnessStats hardness_stats(std::span<const double> q, const Mat& real_negs, const Mat& synth_negs);

}  // namespace synthcl
