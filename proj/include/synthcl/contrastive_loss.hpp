#pragma once

#include <span>

#include "synthcl/core_math.hpp"

namespace synthcl {

struct LossConfig {
  double temperature = 0.2;
  bool symmetric = true;
  /// With no negatives at all the loss degenerates to 0. When false that case
  /// raises NoNegatives instead.
  bool allow_empty_negatives = true;

  void validate() const;
};

struct LossDiagnostics {
  double positive_logit_mean = 0.0;
  double negative_logit_mean = 0.0;  // 0 when there are no negatives
  double log_denominator_mean = 0.0;
};

struct LossOutput {
  double loss = 0.0;
  Mat grad_q;  // d loss / d q, one row per query
  LossDiagnostics diagnostics;
};

struct SymmetricLossOutput {
  double loss = 0.0;
  Mat grad_q1;
  Mat grad_q2;
  LossDiagnostics diagnostics;  // averaged over both directions
};

/// Mean InfoNCE over the batch. Row i of k is the positive for row i of q;
/// every row of `negatives` is a negative for every query. k and negatives are
/// constants for differentiation.
LossOutput info_nce(const Mat& q, const Mat& k, const Mat& negatives, const LossConfig& cfg);

/// As above, with `per_query[i]` appended to the negatives of query i only.
/// `per_query` is either empty or has one matrix per query (possibly empty).
LossOutput info_nce(const Mat& q, const Mat& k, const Mat& shared_negatives,
                    std::span<const Mat> per_query, const LossConfig& cfg);

/// info_nce(q1, k2) + info_nce(q2, k1).
SymmetricLossOutput info_nce_symmetric(const Mat& q1, const Mat& k1, const Mat& q2, const Mat& k2,
                                       const Mat& negatives, const LossConfig& cfg);

SymmetricLossOutput info_nce_symmetric(const Mat& q1, const Mat& k1, const Mat& q2, const Mat& k2,
                                       const Mat& shared_negatives, std::span<const Mat> per_query1,
                                       std::span<const Mat> per_query2, const LossConfig& cfg);

}  // namespace synthcl
