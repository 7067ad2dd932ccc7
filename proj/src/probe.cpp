#include "synthcl/probe.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace synthcl {

void ProbeConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("probe.lr must be > 0");
}

Mat LinearClassifier::logits(const Mat& x) const {
  if (x.cols() != weights.cols()) throw Error(Errc::ShapeMismatch, "classifier input dim mismatch");
  Mat out = matmul_bt(x, weights);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
  return out;
}

EmbeddedSet embed_dataset(const EncoderParams& params, const Dataset& dataset) {
  EmbeddedSet out;
  out.labels.reserve(dataset.size());
  for (const auto& l : dataset.labels) {
    if (!l) throw Error(Errc::Unlabeled, "probe datasets must be fully labeled");
    out.labels.push_back(*l);
  }
  out.n_classes = dataset.n_classes;
  out.embeddings = encoder_embed(params, dataset.features);
  return out;
}

namespace {

void check_labels(const std::vector<std::uint32_t>& labels, std::size_t rows, std::uint32_t n_classes) {
  if (labels.size() != rows) throw Error(Errc::ShapeMismatch, "one label per row required");
  for (auto l : labels) {
    if (l >= n_classes) throw Error(Errc::BadLabels, "label " + std::to_string(l) + " out of range");
  }
}

}  // namespace

CrossEntropy cross_entropy(const LinearClassifier& clf, const Mat& x, const std::vector<std::uint32_t>& labels) {
  const auto n_classes = static_cast<std::uint32_t>(clf.weights.rows());
  check_labels(labels, x.rows(), n_classes);
  if (x.empty()) throw Error(Errc::EmptyInput, "cross entropy on an empty set");
  const Mat logits = clf.logits(x);
  const double inv_n = 1.0 / static_cast<double>(x.rows());

  // d loss / d logits = (softmax - onehot) / n
  Mat dlogits(x.rows(), n_classes);
  CrossEntropy out;
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const Vec p = stable_softmax(logits.row(r));
    loss += log_sum_exp(logits.row(r)) - logits(r, labels[r]);
    auto d = dlogits.row(r);
    for (std::size_t c = 0; c < n_classes; ++c) d[c] = p[c] * inv_n;
    d[labels[r]] -= inv_n;
  }
  out.loss = loss * inv_n;
  out.grad.weights = matmul_at(dlogits, x);
  out.grad.bias.assign(n_classes, 0.0);
  for (std::size_t r = 0; r < dlogits.rows(); ++r) {
    for (std::size_t c = 0; c < n_classes; ++c) out.grad.bias[c] += dlogits(r, c);
  }
  return out;
}

FitResult fit_linear(const Mat& train_emb, const std::vector<std::uint32_t>& train_labels,
                     std::uint32_t n_classes, double lr, std::size_t steps) {
  if (n_classes == 0) throw Error(Errc::BadLabels, "n_classes must be positive");
  check_labels(train_labels, train_emb.rows(), n_classes);
  if (!(lr > 0.0)) throw Error(Errc::BadRange, "probe learning rate must be positive");
  FitResult fit;
  fit.classifier.weights = Mat(n_classes, train_emb.cols());
  fit.classifier.bias.assign(n_classes, 0.0);
  fit.loss_history.reserve(steps + 1);
  for (std::size_t s = 0; s < steps; ++s) {
    const CrossEntropy ce = cross_entropy(fit.classifier, train_emb, train_labels);
    fit.loss_history.push_back(ce.loss);
    auto w = fit.classifier.weights.values();
    auto gw = ce.grad.weights.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
    for (std::size_t c = 0; c < n_classes; ++c) fit.classifier.bias[c] -= lr * ce.grad.bias[c];
  }
  fit.final_loss = cross_entropy(fit.classifier, train_emb, train_labels).loss;
  fit.loss_history.push_back(fit.final_loss);
  return fit;
}

ProbeResult evaluate_logits(const Mat& logits, const std::vector<std::uint32_t>& labels) {
  if (logits.rows() != labels.size()) throw Error(Errc::ShapeMismatch, "one label per logit row required");
  if (logits.empty()) throw Error(Errc::EmptyInput, "nothing to evaluate");
  check_labels(labels, logits.rows(), static_cast<std::uint32_t>(logits.cols()));
  const std::size_t k = std::min<std::size_t>(5, logits.cols());
  std::size_t hit1 = 0;
  std::size_t hit5 = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto top = top_k_indices(logits.row(r), k);
    if (top.front() == labels[r]) ++hit1;
    if (std::find(top.begin(), top.end(), labels[r]) != top.end()) ++hit5;
  }
  ProbeResult res;
  res.n_eval = logits.rows();
  res.top1 = static_cast<double>(hit1) / static_cast<double>(res.n_eval);
  res.top5 = static_cast<double>(hit5) / static_cast<double>(res.n_eval);
  return res;
}

ProbeResult evaluate(const LinearClassifier& clf, const Mat& eval_emb, const std::vector<std::uint32_t>& eval_labels) {
  if (clf.bias.size() != clf.weights.rows()) throw Error(Errc::ShapeMismatch, "bias length != class count");
  return evaluate_logits(clf.logits(eval_emb), eval_labels);
}

ProbeResult run_probe(const EncoderParams& params, const Dataset& train, const Dataset& eval,
                      const ProbeConfig& cfg) {
  cfg.validate();
  const EmbeddedSet tr = embed_dataset(params, train);
  const EmbeddedSet ev = embed_dataset(params, eval);
  const std::uint32_t n_classes = std::max(train.n_classes, eval.n_classes);
  const FitResult fit = fit_linear(tr.embeddings, tr.labels, n_classes, cfg.lr, cfg.steps);
  ProbeResult res = evaluate(fit.classifier, ev.embeddings, ev.labels);
  res.train_loss_final = fit.final_loss;
  return res;
}

}  // namespace synthcl
