#include "synthcl/negative_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace synthcl {

std::string_view strategy_name(Strategy s) noexcept {
  switch (s) {
    case Strategy::Interpolation: return "interpolation";
    case Strategy::Extrapolation: return "extrapolation";
    case Strategy::Mixing: return "mixing";
    case Strategy::Jittering: return "jittering";
    case Strategy::Perturbation: return "perturbation";
    case Strategy::Adversarial: return "adversarial";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) noexcept {
  for (Strategy s : kAllStrategies) {
    if (strategy_name(s) == name) return s;
  }
  return std::nullopt;
}

bool SynthesisConfig::uses(Strategy s) const {
  return std::find(strategies.begin(), strategies.end(), s) != strategies.end();
}

void SynthesisConfig::validate() const {
  if (strategies.empty()) throw ConfigError("synthesis.strategies must not be empty");
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    for (std::size_t j = i + 1; j < strategies.size(); ++j) {
      if (strategies[i] == strategies[j]) throw ConfigError("synthesis.strategies has duplicates");
    }
  }
  if (uses(Strategy::Mixing) ? n_hardest < 2 : n_hardest < 1) {
    throw ConfigError("synthesis.n_hardest must be >= 1 (>= 2 with mixing)");
  }
  if (!(alpha_range.first > 0.0 && alpha_range.first < alpha_range.second && alpha_range.second <= 0.5)) {
    throw ConfigError("synthesis.alpha_range must satisfy 0 < lo < hi <= 0.5");
  }
  if (!(beta_range.first > 0.0 && beta_range.first < beta_range.second)) {
    throw ConfigError("synthesis.beta_range must satisfy 0 < lo < hi");
  }
  if (!(sigma >= 0.0)) throw ConfigError("synthesis.sigma must be >= 0");
  if (!(mask_fraction >= 0.0 && mask_fraction < 1.0)) {
    throw ConfigError("synthesis.mask_fraction must lie in [0, 1)");
  }
  if (!(eta >= 0.0)) throw ConfigError("synthesis.eta must be >= 0");
}

HardNegativeSet mine_hardest_from_sims(std::span<const double> sims, const Mat& queue_snapshot,
                                       std::size_t n, std::size_t query_index) {
  if (queue_snapshot.empty()) throw Error(Errc::EmptyQueue, "cannot mine an empty queue");
  if (sims.size() != queue_snapshot.rows()) {
    throw Error(Errc::LengthMismatch, "one similarity per queue row required");
  }
  HardNegativeSet hard;
  hard.query_index = query_index;
  hard.member_indices = top_k_indices(sims, n);
  hard.members = Mat(n, queue_snapshot.cols());
  hard.member_sims.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = hard.member_indices[i];
    auto from = queue_snapshot.row(src);
    std::copy(from.begin(), from.end(), hard.members.row(i).begin());
    hard.member_sims.push_back(sims[src]);
  }
  return hard;
}

HardNegativeSet mine_hardest(std::span<const double> q, const Mat& queue_snapshot, std::size_t n,
                             std::size_t query_index) {
  if (queue_snapshot.empty()) throw Error(Errc::EmptyQueue, "cannot mine an empty queue");
  if (q.size() != queue_snapshot.cols()) throw Error(Errc::LengthMismatch, "query dim != queue dim");
  if (n > queue_snapshot.rows()) throw Error(Errc::KTooLarge, "n exceeds queue fill");
  Vec sims(queue_snapshot.rows());
  for (std::size_t r = 0; r < sims.size(); ++r) sims[r] = dot(q, queue_snapshot.row(r));
  return mine_hardest_from_sims(sims, queue_snapshot, n, query_index);
}

namespace {

void require_same_size(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "synthesis operands differ in length");
}

}  // namespace

Vec interpolate(std::span<const double> q, std::span<const double> n, double alpha) {
  require_same_size(q, n);
  Vec s(n.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = n[i] + alpha * (q[i] - n[i]);
  l2_normalize_inplace(s);
  return s;
}

Vec extrapolate(std::span<const double> q, std::span<const double> n, double beta) {
  require_same_size(q, n);
  Vec s(n.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = n[i] + beta * (n[i] - q[i]);
  l2_normalize_inplace(s);
  return s;
}

Vec mix(std::span<const double> n_i, std::span<const double> n_j, double lambda) {
  require_same_size(n_i, n_j);
  Vec s(n_i.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = lambda * n_i[i] + (1.0 - lambda) * n_j[i];
  l2_normalize_inplace(s);
  return s;
}

Vec jitter(std::span<const double> n, std::span<const double> noise) {
  require_same_size(n, noise);
  Vec s(n.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = n[i] + noise[i];
  l2_normalize_inplace(s);
  return s;
}

Vec perturb(std::span<const double> n, std::span<const std::size_t> masked) {
  Vec s(n.begin(), n.end());
  for (std::size_t idx : masked) {
    if (idx >= s.size()) throw Error(Errc::LengthMismatch, "mask index out of range");
    s[idx] = 0.0;
  }
  l2_normalize_inplace(s);
  return s;
}

Vec adversarial(std::span<const double> q, std::span<const double> n, double eta) {
  require_same_size(q, n);
  // Step along the component of q orthogonal to n (the tangent direction on
  // the sphere that raises q^T s).
  const double qn = dot(q, n);
  Vec s(n.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = n[i] + eta * (q[i] - qn * n[i]);
  l2_normalize_inplace(s);
  return s;
}

SyntheticNegativeBatch synthesize(std::span<const double> q, const HardNegativeSet& hard,
                                  const SynthesisConfig& cfg, Rng& rng) {
  const std::size_t n_members = hard.members.rows();
  const std::size_t d = q.size();
  SyntheticNegativeBatch out;
  out.rows = Mat(0, d);
  if (cfg.n_synthetic == 0) return out;
  if (cfg.strategies.empty()) throw ConfigError("no synthesis strategy enabled");
  if (n_members == 0) throw Error(Errc::EmptyInput, "hard negative set is empty");
  if (hard.members.cols() != d) throw Error(Errc::LengthMismatch, "hard negatives dim != query dim");
  if (cfg.uses(Strategy::Mixing) && n_members < 2) {
    throw Error(Errc::KTooLarge, "mixing needs at least two hard negatives");
  }

  out.strategy_tags.reserve(cfg.n_synthetic);
  for (std::size_t i = 0; i < cfg.n_synthetic; ++i) {
    const Strategy strategy = cfg.strategies[i % cfg.strategies.size()];
    const std::size_t basis = rng.below(n_members);
    auto n = hard.members.row(basis);
    Vec s;
    switch (strategy) {
      case Strategy::Interpolation:
        s = interpolate(q, n, rng.uniform(cfg.alpha_range.first, cfg.alpha_range.second));
        break;
      case Strategy::Extrapolation:
        s = extrapolate(q, n, rng.uniform(cfg.beta_range.first, cfg.beta_range.second));
        break;
      case Strategy::Mixing: {
        std::size_t partner = rng.below(n_members - 1);
        if (partner >= basis) ++partner;
        const double lambda = rng.uniform(0.0, 1.0);
        s = mix(n, hard.members.row(partner), lambda);
        break;
      }
      case Strategy::Jittering: {
        Vec noise(d);
        for (double& e : noise) e = rng.gauss(0.0, cfg.sigma);
        s = jitter(n, noise);
        break;
      }
      case Strategy::Perturbation: {
        const std::size_t n_masked = ceil_fraction(cfg.mask_fraction, d);
        auto mask = sample_without_replacement(d, n_masked, rng);
        try {
          s = perturb(n, mask);
        } catch (const Error& e) {
          if (e.code() != Errc::ZeroNorm) throw;
          mask = sample_without_replacement(d, n_masked, rng);
          s = perturb(n, mask);
        }
        break;
      }
      case Strategy::Adversarial:
        s = adversarial(q, n, cfg.eta);
        break;
    }
    out.rows.append_row(s);
    out.strategy_tags.push_back(strategy);
  }
  return out;
}

HardnessStats hardness_stats(std::span<const double> q, const Mat& real_negs, const Mat& synth_negs) {
  if (real_negs.empty() || synth_negs.empty()) throw Error(Errc::EmptyInput, "hardness_stats needs negatives");
  HardnessStats stats;
  double sum = 0.0;
  for (std::size_t r = 0; r < real_negs.rows(); ++r) sum += cosine_sim(q, real_negs.row(r));
  stats.mean_real_sim = sum / static_cast<double>(real_negs.rows());
  sum = 0.0;
  stats.max_synth_sim = -1.0;
  for (std::size_t r = 0; r < synth_negs.rows(); ++r) {
    const double s = cosine_sim(q, synth_negs.row(r));
    sum += s;
    stats.max_synth_sim = std::max(stats.max_synth_sim, s);
  }
  stats.mean_synth_sim = sum / static_cast<double>(synth_negs.rows());
  return stats;
}

}  // namespace synthcl
