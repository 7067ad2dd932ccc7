#include <gtest/gtest.h>

#include <algorithm>
#include <deque>

#include "synthcl/momentum_queue.hpp"
#include "test_util.hpp"

namespace synthcl {
namespace {

using testing::random_unit_rows;

EncoderPair random_pair(double m, Rng& rng) {
  return {encoder_init({4, 5, 3}, rng), encoder_init({4, 5, 3}, rng), m};
}

TEST(EmaUpdate, MomentumOneKeepsTarget) {
  Rng rng(1);
  EncoderPair p = random_pair(1.0, rng);
  const EncoderParams before = p.target;
  ema_update(p);
  EXPECT_EQ(p.target, before);
}

TEST(EmaUpdate, MomentumZeroCopiesOnline) {
  Rng rng(2);
  EncoderPair p = random_pair(0.0, rng);
  ema_update(p);
  EXPECT_EQ(p.target, p.online);
}

TEST(EmaUpdate, Arithmetic) {
  EncoderPair p;
  p.online.layers.push_back({Mat(1, 1, 0.0), Vec{0.0}});
  p.target.layers.push_back({Mat(1, 1, 1.0), Vec{1.0}});
  p.momentum = 0.99;
  ema_update(p);
  EXPECT_DOUBLE_EQ(p.target.layers[0].weights(0, 0), 0.99);
  EXPECT_DOUBLE_EQ(p.target.layers[0].bias[0], 0.99);
}

TEST(EmaUpdate, FixedPointAndConvexity) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const double m = rng.uniform01();
    EncoderPair same{encoder_init({3, 2}, rng), {}, m};
    same.target = same.online;
    const EncoderParams before_same = same.target;
    ema_update(same);
    for (std::size_t i = 0; i < before_same.layers[0].weights.size(); ++i) {
      EXPECT_NEAR(same.target.layers[0].weights.values()[i], before_same.layers[0].weights.values()[i], 1e-15);
    }

    EncoderPair p = random_pair(m, rng);
    const EncoderParams old = p.target;
    ema_update(p);
    for (std::size_t l = 0; l < old.layers.size(); ++l) {
      auto nv = p.target.layers[l].weights.values();
      auto ov = old.layers[l].weights.values();
      auto on = p.online.layers[l].weights.values();
      for (std::size_t i = 0; i < nv.size(); ++i) {
        EXPECT_GE(nv[i], std::min(ov[i], on[i]) - 1e-15);
        EXPECT_LE(nv[i], std::max(ov[i], on[i]) + 1e-15);
      }
    }
  }
}

TEST(EmaUpdate, ShapeMismatch) {
  Rng rng(4);
  EncoderPair p{encoder_init({4, 3}, rng), encoder_init({4, 2}, rng), 0.5};
  EXPECT_THROW(ema_update(p), Error);
}

TEST(NegativeQueue, FifoEviction) {
  Rng rng(5);
  NegativeQueue q(4, 3);
  const Mat a = random_unit_rows(2, 3, rng);
  const Mat b = random_unit_rows(2, 3, rng);
  const Mat c = random_unit_rows(1, 3, rng);
  q.enqueue(a);
  q.enqueue(b);
  q.enqueue(c);
  EXPECT_EQ(q.fill(), 4u);
  const Mat snap = q.snapshot();
  // a[0] evicted; oldest first.
  EXPECT_EQ(snap, vstack(vstack(slice_rows(a, 1, 2), b), c));
}

TEST(NegativeQueue, ExactCapacityBatch) {
  Rng rng(6);
  NegativeQueue q(5, 2);
  const Mat keys = random_unit_rows(5, 2, rng);
  q.enqueue(keys);
  EXPECT_TRUE(q.full());
  EXPECT_EQ(q.snapshot(), keys);
}

TEST(NegativeQueue, SnapshotIsACopy) {
  Rng rng(7);
  NegativeQueue q(8, 3);
  const Mat ab = random_unit_rows(2, 3, rng);
  q.enqueue(ab);
  const Mat snap = q.snapshot();
  EXPECT_EQ(snap, ab);
  q.enqueue(random_unit_rows(7, 3, rng));
  EXPECT_EQ(snap, ab);
  EXPECT_EQ(q.snapshot().rows(), q.fill());
}

TEST(NegativeQueue, Errors) {
  NegativeQueue q(4, 3);
  try {
    q.snapshot();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyQueue);
  }
  try {
    q.enqueue(Mat(1, 2, 0.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimMismatch);
  }
  try {
    q.enqueue(Mat(1, 3, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotNormalized);
  }
  Rng rng(8);
  EXPECT_THROW(q.enqueue(random_unit_rows(5, 3, rng)), Error);
}

// Explicit list that keeps only the newest K keys.
TEST(NegativeQueue, ReplayOracle) {
  Rng rng(9);
  const std::size_t k = 128;
  NegativeQueue q(k, 4);
  std::deque<Vec> oracle;
  for (int i = 0; i < 1000; ++i) {
    const Mat batch = random_unit_rows(1 + rng.below(40), 4, rng);
    q.enqueue(batch);
    for (std::size_t r = 0; r < batch.rows(); ++r) {
      oracle.emplace_back(batch.row(r).begin(), batch.row(r).end());
      if (oracle.size() > k) oracle.pop_front();
    }
    ASSERT_LE(q.fill(), k);
    ASSERT_EQ(q.fill(), oracle.size());
  }
  const Mat snap = q.snapshot();
  for (std::size_t r = 0; r < k; ++r) {
    EXPECT_TRUE(std::equal(oracle[r].begin(), oracle[r].end(), snap.row(r).begin()));
    EXPECT_NEAR(l2_norm(snap.row(r)), 1.0, 1e-10);
  }
}

TEST(NegativeQueue, RestoreFromStorage) {
  Rng rng(10);
  NegativeQueue q(6, 2);
  q.enqueue(random_unit_rows(4, 2, rng));
  q.enqueue(random_unit_rows(4, 2, rng));
  NegativeQueue r(q.capacity(), q.dim(), q.fill(), q.head(), q.storage());
  EXPECT_EQ(r, q);
  EXPECT_EQ(r.snapshot(), q.snapshot());
  EXPECT_THROW(NegativeQueue(6, 2, 3, 1, Mat(6, 2)), Error);
}

}  // namespace
}  // namespace synthcl
