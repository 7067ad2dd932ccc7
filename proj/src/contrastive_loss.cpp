#include "synthcl/contrastive_loss.hpp"

#include <cmath>
#include <string>

namespace synthcl {

namespace {

constexpr double kUnitTolerance = 1e-6;

void require_unit_rows(const Mat& m, const char* what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = l2_norm(m.row(r));
    if (!(std::abs(n - 1.0) <= kUnitTolerance)) {
      throw Error(Errc::NotNormalized, std::string(what) + " row " + std::to_string(r) +
                                           " has norm " + std::to_string(n));
    }
  }
}

void require_cols(const Mat& m, std::size_t d, const char* what) {
  if (!m.empty() && m.cols() != d) throw Error(Errc::ShapeMismatch, std::string(what) + " dim mismatch");
}

}  // namespace

void LossConfig::validate() const {
  if (!(temperature > 0.0 && temperature <= 10.0)) {
    throw ConfigError("temperature must lie in (0, 10]");
  }
}

LossOutput info_nce(const Mat& q, const Mat& k, const Mat& negatives, const LossConfig& cfg) {
  return info_nce(q, k, negatives, {}, cfg);
}

LossOutput info_nce(const Mat& q, const Mat& k, const Mat& shared_negatives,
                    std::span<const Mat> per_query, const LossConfig& cfg) {
  // The (0, 10] bound is a config-surface invariant; the loss itself accepts
  // any finite positive temperature so limit cases remain computable.
  if (!(cfg.temperature > 0.0 && std::isfinite(cfg.temperature))) {
    throw ConfigError("temperature must be positive and finite");
  }
  const std::size_t batch = q.rows();
  const std::size_t d = q.cols();
  if (batch == 0) throw Error(Errc::EmptyInput, "info_nce on an empty batch");
  if (k.rows() != batch || k.cols() != d) throw Error(Errc::ShapeMismatch, "q and k must be row-aligned");
  if (!per_query.empty() && per_query.size() != batch) {
    throw Error(Errc::ShapeMismatch, "per-query negatives must match batch size");
  }
  require_cols(shared_negatives, d, "negatives");
  require_unit_rows(q, "query");
  require_unit_rows(k, "key");
  require_unit_rows(shared_negatives, "negative");
  std::size_t total_negatives = shared_negatives.rows() * batch;
  for (const Mat& extra : per_query) {
    require_cols(extra, d, "synthetic negatives");
    require_unit_rows(extra, "synthetic negative");
    total_negatives += extra.rows();
  }
  if (total_negatives == 0 && !cfg.allow_empty_negatives) {
    throw Error(Errc::NoNegatives, "no negatives and empty-negative fallback disabled");
  }

  const double inv_tau = 1.0 / cfg.temperature;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const Mat shared_logits = shared_negatives.empty() ? Mat(batch, 0) : matmul_bt(q, shared_negatives);

  LossOutput out;
  out.grad_q = Mat(batch, d);
  double loss_sum = 0.0;
  double pos_sum = 0.0;
  double neg_sum = 0.0;
  double lse_sum = 0.0;
  Vec logits;
  for (std::size_t i = 0; i < batch; ++i) {
    const Mat* extra = per_query.empty() ? nullptr : &per_query[i];
    const std::size_t n_shared = shared_negatives.rows();
    const std::size_t n_extra = extra ? extra->rows() : 0;
    auto qi = q.row(i);

    // logits[0] is the positive.
    logits.assign(1 + n_shared + n_extra, 0.0);
    logits[0] = dot(qi, k.row(i)) * inv_tau;
    for (std::size_t j = 0; j < n_shared; ++j) logits[1 + j] = shared_logits(i, j) * inv_tau;
    for (std::size_t j = 0; j < n_extra; ++j) logits[1 + n_shared + j] = dot(qi, extra->row(j)) * inv_tau;

    const double lse = log_sum_exp(logits);
    loss_sum += lse - logits[0];
    pos_sum += logits[0];
    lse_sum += lse;
    for (std::size_t j = 1; j < logits.size(); ++j) neg_sum += logits[j];

    // d/dq_i = (1/(B tau)) * (sum_j p_j x_j - k_i), x_0 = k_i.
    auto g = out.grad_q.row(i);
    const double scale = inv_tau * inv_batch;
    const double p_pos = std::exp(logits[0] - lse);
    auto ki = k.row(i);
    for (std::size_t c = 0; c < d; ++c) g[c] = (p_pos - 1.0) * ki[c] * scale;
    for (std::size_t j = 0; j < n_shared; ++j) {
      const double w = std::exp(logits[1 + j] - lse) * scale;
      auto n = shared_negatives.row(j);
      for (std::size_t c = 0; c < d; ++c) g[c] += w * n[c];
    }
    for (std::size_t j = 0; j < n_extra; ++j) {
      const double w = std::exp(logits[1 + n_shared + j] - lse) * scale;
      auto n = extra->row(j);
      for (std::size_t c = 0; c < d; ++c) g[c] += w * n[c];
    }
  }
  out.loss = loss_sum * inv_batch;
  out.diagnostics.positive_logit_mean = pos_sum * inv_batch;
  out.diagnostics.log_denominator_mean = lse_sum * inv_batch;
  out.diagnostics.negative_logit_mean =
      total_negatives > 0 ? neg_sum / static_cast<double>(total_negatives) : 0.0;
  return out;
}

SymmetricLossOutput info_nce_symmetric(const Mat& q1, const Mat& k1, const Mat& q2, const Mat& k2,
                                       const Mat& negatives, const LossConfig& cfg) {
  return info_nce_symmetric(q1, k1, q2, k2, negatives, {}, {}, cfg);
}

SymmetricLossOutput info_nce_symmetric(const Mat& q1, const Mat& k1, const Mat& q2, const Mat& k2,
                                       const Mat& shared_negatives, std::span<const Mat> per_query1,
                                       std::span<const Mat> per_query2, const LossConfig& cfg) {
  LossOutput a = info_nce(q1, k2, shared_negatives, per_query1, cfg);
  LossOutput b = info_nce(q2, k1, shared_negatives, per_query2, cfg);
  SymmetricLossOutput out;
  out.loss = a.loss + b.loss;
  out.grad_q1 = std::move(a.grad_q);
  out.grad_q2 = std::move(b.grad_q);
  out.diagnostics.positive_logit_mean =
      0.5 * (a.diagnostics.positive_logit_mean + b.diagnostics.positive_logit_mean);
  out.diagnostics.negative_logit_mean =
      0.5 * (a.diagnostics.negative_logit_mean + b.diagnostics.negative_logit_mean);
  out.diagnostics.log_denominator_mean =
      0.5 * (a.diagnostics.log_denominator_mean + b.diagnostics.log_denominator_mean);
  return out;
}

}  // namespace synthcl
