#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "synthcl/data.hpp"
#include "synthcl/encoder.hpp"

namespace synthcl {

struct EmbeddedSet {
  Mat embeddings;  // unit rows
  std::vector<std::uint32_t> labels;
  std::uint32_t n_classes = 0;
};

/// Linear softmax classifier: logits = W x + b.
struct LinearClassifier {
  Mat weights;  // n_classes x d
  Vec bias;     // n_classes

  Mat logits(const Mat& x) const;
};

struct ProbeConfig {
  double lr = 0.5;
  std::size_t steps = 1000;

  void validate() const;
};

struct FitResult {
  LinearClassifier classifier;
  std::vector<double> loss_history;  // loss before each step, plus the final loss
  double final_loss = 0.0;
};

struct ProbeResult {
  double top1 = 0.0;
  double top5 = 0.0;
  std::size_t n_eval = 0;
  double train_loss_final = 0.0;

  bool operator==(const ProbeResult&) const = default;
};

struct CrossEntropy {
  double loss = 0.0;
  LinearClassifier grad;
};

/// Frozen-encoder embeddings of every sample. Throws Unlabeled if any sample
/// lacks a label.
EmbeddedSet embed_dataset(const EncoderParams& params, const Dataset& dataset);

/// Mean softmax cross-entropy and its gradient.
CrossEntropy cross_entropy(const LinearClassifier& clf, const Mat& x, const std::vector<std::uint32_t>& labels);

/// Full-batch gradient descent from zero weights.
FitResult fit_linear(const Mat& train_emb, const std::vector<std::uint32_t>& train_labels,
                     std::uint32_t n_classes, double lr, std::size_t steps);

/// top-1 and top-k (k = min(5, classes)) accuracy from precomputed logits.
/// Ranking is by logit, ties broken toward the smaller class index.
ProbeResult evaluate_logits(const Mat& logits, const std::vector<std::uint32_t>& labels);

ProbeResult evaluate(const LinearClassifier& clf, const Mat& eval_emb, const std::vector<std::uint32_t>& eval_labels);

/// Embed both sets with the frozen encoder, fit on `train`, score on `eval`.
ProbeResult run_probe(const EncoderParams& params, const Dataset& train, const Dataset& eval,
                      const ProbeConfig& cfg);

}  // namespace synthcl
