#include <gtest/gtest.h>

#include <cmath>

#include "synthcl/encoder.hpp"
#include "test_util.hpp"

namespace synthcl {
namespace {

using testing::random_mat;
using testing::rel_err;

double weighted_sum(const Mat& z, const Mat& c) {
  double s = 0;
  for (std::size_t i = 0; i < z.size(); ++i) s += z.values()[i] * c.values()[i];
  return s;
}

// Central differences of sum(c .* embed(params, x)) for every parameter.
// Returns the worst relative error against the analytic gradient.
double max_fd_error(EncoderParams params, const Mat& x, const Mat& c, double h) {
  const ForwardTrace trace = encoder_forward(params, x);
  const Gradients g = encoder_backward(params, trace, c);
  double worst = 0;
  auto probe = [&](double& theta, double analytic) {
    const double saved = theta;
    theta = saved + h;
    const double up = weighted_sum(encoder_embed(params, x), c);
    theta = saved - h;
    const double down = weighted_sum(encoder_embed(params, x), c);
    theta = saved;
    worst = std::max(worst, rel_err(analytic, (up - down) / (2 * h)));
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto w = params.layers[l].weights.values();
    auto gw = g.layers[l].weights.values();
    for (std::size_t i = 0; i < w.size(); ++i) probe(w[i], gw[i]);
    for (std::size_t i = 0; i < params.layers[l].bias.size(); ++i) probe(params.layers[l].bias[i], g.layers[l].bias[i]);
  }
  return worst;
}

TEST(EncoderInit, GlorotBoundAndZeroBias) {
  Rng rng(1);
  const EncoderParams p = encoder_init({8, 4}, rng);
  const double bound = std::sqrt(6.0 / 12.0);
  ASSERT_EQ(p.layers.size(), 1u);
  for (double w : p.layers[0].weights.values()) EXPECT_LE(std::abs(w), bound);
  for (double b : p.layers[0].bias) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(p.dims(), (std::vector<std::size_t>{8, 4}));
}

TEST(EncoderInit, Deterministic) {
  Rng a(42), b(42);
  EXPECT_EQ(encoder_init({16, 8, 4}, a), encoder_init({16, 8, 4}, b));
}

TEST(EncoderInit, BadShape) {
  Rng rng(0);
  EXPECT_THROW(encoder_init({8}, rng), Error);
  EXPECT_THROW(encoder_init({8, 0, 4}, rng), Error);
}

TEST(EncoderForward, RowsAreUnitNorm) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const EncoderParams p = encoder_init({6, 1 + rng.below(10), 3}, rng);
    const Mat x = random_mat(1 + rng.below(8), 6, rng, rng.uniform(0.1, 10));
    const ForwardTrace tr = encoder_forward(p, x);
    for (std::size_t r = 0; r < x.rows(); ++r) EXPECT_NEAR(l2_norm(tr.embeddings.row(r)), 1.0, 1e-10);
  }
}

TEST(EncoderForward, IdentityLinearEncoderPassesUnitInputThrough) {
  EncoderParams p;
  p.activation = Activation::Linear;
  DenseLayer l{Mat(3, 3), Vec(3, 0.0)};
  for (std::size_t i = 0; i < 3; ++i) l.weights(i, i) = 1.0;
  p.layers.push_back(l);
  Rng rng(3);
  const Mat x = testing::random_unit_rows(4, 3, rng);
  const Mat z = encoder_forward(p, x).embeddings;
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(z.values()[i], x.values()[i], 1e-15);
}

TEST(EncoderForward, BatchEqualsPerRow) {
  Rng rng(4);
  const EncoderParams p = encoder_init({5, 7, 3}, rng);
  const Mat x = random_mat(2, 5, rng);
  const Mat joint = encoder_forward(p, x).embeddings;
  for (std::size_t r = 0; r < 2; ++r) {
    const Mat single = encoder_embed(p, slice_rows(x, r, r + 1));
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(joint(r, c), single(0, c), 1e-12);
  }
}

TEST(EncoderForward, ShapeMismatch) {
  Rng rng(5);
  const EncoderParams p = encoder_init({5, 3}, rng);
  try {
    encoder_forward(p, Mat(2, 4, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ShapeMismatch);
  }
}

TEST(EncoderForward, DegenerateOutputIsZeroNorm) {
  Rng rng(5);
  EncoderParams p = encoder_init({4, 3}, rng);
  for (double& w : p.layers[0].weights.values()) w = 0.0;
  try {
    encoder_forward(p, Mat(1, 4, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroNorm);
  }
}

TEST(EncoderBackward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(6);
  const EncoderParams p = encoder_init({4, 5, 3}, rng);
  const Mat x = random_mat(3, 4, rng);
  const Gradients g = encoder_backward(p, encoder_forward(p, x), Mat(3, 3));
  EXPECT_EQ(g, zeros_like(p));
}

TEST(EncoderBackward, GradientParallelToOutputVanishes) {
  Rng rng(7);
  const EncoderParams p = encoder_init({4, 5, 3}, rng);
  const Mat x = random_mat(2, 4, rng);
  const ForwardTrace tr = encoder_forward(p, x);
  Mat up = tr.embeddings;
  for (double& v : up.values()) v *= 2.5;
  const Gradients g = encoder_backward(p, tr, up);
  for (const auto& l : g.layers) {
    for (double v : l.weights.values()) EXPECT_NEAR(v, 0.0, 1e-13);
    for (double v : l.bias) EXPECT_NEAR(v, 0.0, 1e-13);
  }
}

TEST(EncoderBackward, TwoLayerMatchesFiniteDifferences) {
  Rng rng(8);
  const EncoderParams p = encoder_init({5, 6, 4}, rng);
  const Mat x = random_mat(3, 5, rng);
  const Mat c = random_mat(3, 4, rng);
  EXPECT_LE(max_fd_error(p, x, c, 1e-5), 1e-5);
}

TEST(EncoderBackward, RandomInstancesMatchFiniteDifferences) {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::size_t> dims{1 + rng.below(6)};
    const std::size_t depth = 1 + rng.below(3);
    for (std::size_t i = 0; i < depth; ++i) dims.push_back(2 + rng.below(6));
    const EncoderParams p = encoder_init(dims, rng, t % 4 == 0 ? Activation::Linear : Activation::Tanh);
    const Mat x = random_mat(1 + rng.below(4), dims.front(), rng);
    const Mat c = random_mat(x.rows(), dims.back(), rng);
    EXPECT_LE(max_fd_error(p, x, c, 1e-5), 1e-5) << "instance " << t;
  }
}

TEST(EncoderBackward, ShapeMismatch) {
  Rng rng(10);
  const EncoderParams p = encoder_init({4, 3}, rng);
  const ForwardTrace tr = encoder_forward(p, random_mat(2, 4, rng));
  EXPECT_THROW(encoder_backward(p, tr, Mat(3, 3)), Error);
}

TEST(SgdStep, Arithmetic) {
  auto one_param = [](double theta) {
    EncoderParams p;
    p.layers.push_back({Mat(1, 1, theta), Vec{theta}});
    return p;
  };
  EncoderParams p = one_param(1.0);
  EncoderParams g = one_param(0.5);
  sgd_step(p, g, 0.1, 0.0);
  EXPECT_DOUBLE_EQ(p.layers[0].weights(0, 0), 0.95);
  EXPECT_DOUBLE_EQ(p.layers[0].bias[0], 0.95);

  EncoderParams q = one_param(1.0);
  sgd_step(q, one_param(0.0), 0.1, 0.1);
  EXPECT_DOUBLE_EQ(q.layers[0].weights(0, 0), 0.99);

  EncoderParams r = one_param(1.0);
  sgd_step(r, one_param(0.0), 123.0, 0.0);
  EXPECT_EQ(r, one_param(1.0));
}

TEST(SgdStep, ShapeMismatch) {
  Rng rng(11);
  EncoderParams a = encoder_init({4, 3}, rng);
  const EncoderParams b = encoder_init({4, 2}, rng);
  EXPECT_THROW(sgd_step(a, b, 0.1, 0.0), Error);
}

}  // namespace
}  // namespace synthcl
