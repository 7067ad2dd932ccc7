#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "synthcl/checkpoint.hpp"
#include "synthcl/probe.hpp"
#include "test_util.hpp"

namespace synthcl {
namespace {

using testing::rel_err;

std::vector<std::uint32_t> labels_of(const Dataset& d) {
  std::vector<std::uint32_t> out;
  for (const auto& l : d.labels) out.push_back(*l);
  return out;
}

TEST(EmbedDataset, PureUnitRowsAndRowCount) {
  Rng rng(1);
  const Dataset d = toy_generate(3, 7, 6, 2.0, 1.0, rng);
  const EncoderParams params = encoder_init({6, 8, 4}, rng);
  const std::uint32_t before = params_checksum(params);
  const EmbeddedSet a = embed_dataset(params, d);
  const EmbeddedSet b = embed_dataset(params, d);
  EXPECT_EQ(a.embeddings, b.embeddings);
  EXPECT_EQ(a.embeddings.rows(), d.size());
  EXPECT_EQ(a.embeddings.cols(), 4u);
  EXPECT_EQ(a.labels, labels_of(d));
  EXPECT_EQ(a.n_classes, 3u);
  for (std::size_t i = 0; i < a.embeddings.rows(); ++i) EXPECT_NEAR(l2_norm(a.embeddings.row(i)), 1.0, 1e-12);
  EXPECT_EQ(params_checksum(params), before);
}

TEST(EmbedDataset, UnlabeledRejected) {
  Rng rng(2);
  Dataset d = toy_generate(2, 3, 4, 2.0, 1.0, rng);
  d.labels[1].reset();
  const EncoderParams params = encoder_init({4, 3}, rng);
  try {
    embed_dataset(params, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Unlabeled);
  }
}

TEST(FitLinear, SeparableLineReachesPerfectAccuracy) {
  Mat x(0, 1);
  std::vector<std::uint32_t> y;
  for (int i = 1; i <= 20; ++i) {
    x.append_row(Vec{-0.05 * i});
    y.push_back(0);
    x.append_row(Vec{0.05 * i});
    y.push_back(1);
  }
  const FitResult fit = fit_linear(x, y, 2, 0.5, 500);
  EXPECT_EQ(evaluate(fit.classifier, x, y).top1, 1.0);
}

TEST(FitLinear, ZeroStepsPredictUniformly) {
  Rng rng(3);
  const Dataset d = toy_generate(10, 20, 5, 2.0, 1.0, rng);
  const EmbeddedSet e = embed_dataset(encoder_init({5, 4}, rng), d);
  const FitResult fit = fit_linear(e.embeddings, e.labels, 10, 0.5, 0);
  const Mat logits = fit.classifier.logits(e.embeddings);
  for (double v : logits.values()) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(fit.final_loss, std::log(10.0), 1e-12);
  // Exact 1/C on balanced data via the smallest-index tie-break.
  EXPECT_DOUBLE_EQ(evaluate(fit.classifier, e.embeddings, e.labels).top1, 0.1);
}

TEST(FitLinear, LossNonIncreasing) {
  Rng rng(4);
  const Dataset d = toy_generate(5, 30, 8, 1.0, 1.0, rng);
  const EmbeddedSet e = embed_dataset(encoder_init({8, 6}, rng), d);
  const FitResult fit = fit_linear(e.embeddings, e.labels, 5, 0.5, 300);
  ASSERT_EQ(fit.loss_history.size(), 301u);
  for (std::size_t t = 50; t < fit.loss_history.size(); ++t)
    EXPECT_LE(fit.loss_history[t], fit.loss_history[t - 50] + 1e-9);
  for (std::size_t t = 1; t < fit.loss_history.size(); ++t)
    EXPECT_LE(fit.loss_history[t], fit.loss_history[t - 1] + 1e-9);
  EXPECT_EQ(fit.final_loss, fit.loss_history.back());
}

TEST(FitLinear, BadLabels) {
  const Mat x(2, 1, {0.0, 1.0});
  try {
    fit_linear(x, {0, 3}, 2, 0.5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadLabels);
  }
  EXPECT_THROW(fit_linear(x, {0}, 2, 0.5, 1), Error);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 3 + rng.below(5), d = 2 + rng.below(4), c = 2 + rng.below(4);
    const Mat x = testing::random_mat(n, d, rng, 1.0);
    std::vector<std::uint32_t> y(n);
    for (auto& v : y) v = static_cast<std::uint32_t>(rng.below(c));
    LinearClassifier clf{testing::random_mat(c, d, rng, 0.5), Vec(c)};
    for (auto& b : clf.bias) b = rng.gauss(0.0, 0.5);
    const CrossEntropy ce = cross_entropy(clf, x, y);
    const double h = 1e-6;
    auto check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = cross_entropy(clf, x, y).loss;
      param = saved - h;
      const double down = cross_entropy(clf, x, y).loss;
      param = saved;
      EXPECT_LE(rel_err(analytic, (up - down) / (2 * h)), 1e-6);
    };
    for (std::size_t i = 0; i < clf.weights.size(); ++i) check(clf.weights.values()[i], ce.grad.weights.values()[i]);
    for (std::size_t i = 0; i < c; ++i) check(clf.bias[i], ce.grad.bias[i]);
  }
}

TEST(Evaluate, OneHotLogitsArePerfect) {
  const std::vector<std::uint32_t> y{0, 3, 1, 6, 2, 5};
  Mat logits(6, 7);
  for (std::size_t i = 0; i < 6; ++i) logits(i, y[i]) = 1.0;
  const ProbeResult r = evaluate_logits(logits, y);
  EXPECT_EQ(r.top1, 1.0);
  EXPECT_EQ(r.top5, 1.0);
  EXPECT_EQ(r.n_eval, 6u);
}

TEST(Evaluate, ZeroLogitsPickClassZero) {
  std::vector<std::uint32_t> y;
  for (std::uint32_t c = 0; c < 10; ++c)
    for (int k = 0; k < 4; ++k) y.push_back(c);
  const ProbeResult r = evaluate_logits(Mat(y.size(), 10), y);
  EXPECT_DOUBLE_EQ(r.top1, 0.1);
  EXPECT_DOUBLE_EQ(r.top5, 0.5);
}

TEST(Evaluate, TopKShrinksWithFewClasses) {
  const std::vector<std::uint32_t> y{0, 1, 2};
  Mat logits(3, 3, {0, 1, 2, 5, 4, 3, 1, 1, 0});
  const ProbeResult r = evaluate_logits(logits, y);
  EXPECT_EQ(r.top5, 1.0);
}

// Per-sample oracle: rank = number of classes beating the label under the
// tie-break rule.
std::pair<double, double> naive_accuracy(const Mat& logits, const std::vector<std::uint32_t>& y) {
  double hit1 = 0, hit5 = 0;
  const std::size_t k = std::min<std::size_t>(5, logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t rank = 0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      if (c == y[i]) continue;
      if (logits(i, c) > logits(i, y[i]) || (logits(i, c) == logits(i, y[i]) && c < y[i])) ++rank;
    }
    hit1 += rank == 0;
    hit5 += rank < k;
  }
  return {hit1 / logits.rows(), hit5 / logits.rows()};
}

TEST(Evaluate, MatchesNaiveOracle) {
  Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(20), c = 2 + rng.below(10);
    Mat logits(n, c);
    // Coarse values so ties are common.
    for (double& v : logits.values()) v = static_cast<double>(rng.below(4));
    std::vector<std::uint32_t> y(n);
    for (auto& v : y) v = static_cast<std::uint32_t>(rng.below(c));
    const ProbeResult r = evaluate_logits(logits, y);
    const auto [top1, top5] = naive_accuracy(logits, y);
    EXPECT_DOUBLE_EQ(r.top1, top1);
    EXPECT_DOUBLE_EQ(r.top5, top5);
    EXPECT_GE(r.top5, r.top1);
  }
}

TEST(Evaluate, PermutationInvariant) {
  Rng rng(7);
  const Mat x = testing::random_mat(30, 4, rng, 1.0);
  std::vector<std::uint32_t> y(30);
  for (auto& v : y) v = static_cast<std::uint32_t>(rng.below(6));
  const LinearClassifier clf{testing::random_mat(6, 4, rng, 1.0), Vec(6, 0.1)};
  const ProbeResult base = evaluate(clf, x, y);
  const auto perm = random_permutation(30, rng);
  Mat xp(0, 4);
  std::vector<std::uint32_t> yp;
  for (std::size_t i : perm) {
    xp.append_row(x.row(i));
    yp.push_back(y[i]);
  }
  EXPECT_EQ(evaluate(clf, xp, yp), base);
}

TEST(Evaluate, ShapeMismatch) {
  const LinearClassifier clf{Mat(3, 4), Vec(3)};
  try {
    evaluate(clf, Mat(2, 5), {0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ShapeMismatch);
  }
  EXPECT_THROW(evaluate_logits(Mat(2, 3), {0}), Error);
}

TEST(RunProbe, SeparableToyDataAndFrozenEncoder) {
  Rng rng(8);
  const Mat means = draw_class_means(4, 8, 6.0, rng);
  const Dataset train = sample_around_means(means, 25, 0.3, Origin::Real, rng);
  const Dataset eval = sample_around_means(means, 10, 0.3, Origin::Real, rng);
  const EncoderParams params = encoder_init({8, 16, 8}, rng);
  const std::uint32_t before = params_checksum(params);
  const ProbeResult r = run_probe(params, train, eval, ProbeConfig{});
  EXPECT_EQ(params_checksum(params), before);
  EXPECT_EQ(r.n_eval, 40u);
  EXPECT_GE(r.top1, 0.9);
  EXPECT_GE(r.top5, r.top1);
  EXPECT_EQ(run_probe(params, train, eval, ProbeConfig{}), r);
}

}  // namespace
}  // namespace synthcl
