#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "synthcl/error.hpp"

namespace synthcl {

/// Vectors at or below this norm cannot be normalized.
inline constexpr double kZeroNormThreshold = 1e-12;

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. A matrix may have zero rows; each row is
/// one sample, embedding or parameter row depending on context.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  void append_row(std::span<const double> row);

  bool operator==(const Mat&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Stack `a` on top of `b`. Either may be empty (zero rows).
Mat vstack(const Mat& a, const Mat& b);

/// Rows [begin, end) of `m` as a new matrix.
Mat slice_rows(const Mat& m, std::size_t begin, std::size_t end);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Returns v / ||v||. Throws ZeroNorm when ||v|| <= 1e-12.
Vec l2_normalize(std::span<const double> v);
void l2_normalize_inplace(std::span<double> v);

/// Cosine similarity clamped to [-1, 1].
double cosine_sim(std::span<const double> a, std::span<const double> b);

/// Indices of the k largest scores in descending order; ties go to the
/// smaller index.
std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k);

/// Softmax evaluated with the max-shift; exact under adding a constant.
Vec stable_softmax(std::span<const double> logits);

/// log(sum(exp(x))) with the max-shift. Returns -inf for an empty input.
double log_sum_exp(std::span<const double> logits);

/// A * B^T for A (n x k) and B (m x k).
Mat matmul_bt(const Mat& a, const Mat& b);
/// A^T * B for A (n x p) and B (n x q).
Mat matmul_at(const Mat& a, const Mat& b);
/// A * B for A (n x k) and B (k x m).
Mat matmul(const Mat& a, const Mat& b);

bool all_finite(std::span<const double> v);

/// SplitMix64 finalizer. Used to derive independent seeds from one seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Seeded generator. The bit source is std::mt19937_64, whose output sequence
/// is fixed by the C++ standard; the transforms below are implemented here so
/// streams do not depend on the standard library's distributions.
///
/// Draw costs:
///   uniform01 / uniform / below : one 64-bit draw
///   gauss                       : two 64-bit draws (Box-Muller, cosine branch)
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Top 53 bits scaled into [0, 1).
  double uniform01();
  /// Uniform in [lo, hi). Throws BadRange unless lo < hi.
  double uniform(double lo, double hi);
  /// Gaussian with mean mu and standard deviation sigma. sigma == 0 returns
  /// exactly mu (the draws are still consumed). Throws BadRange if sigma < 0.
  double gauss(double mu, double sigma);
  /// Uniform integer in [0, n). Throws BadRange for n == 0.
  std::size_t below(std::size_t n);

  /// Serialized engine state; set_state(state()) restores the exact stream.
  std::string state() const;
  void set_state(const std::string& blob);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// `count` distinct indices from [0, n) via a partial Fisher-Yates shuffle
/// (one `below` draw per chosen index).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng);

/// Full Fisher-Yates permutation of [0, n): n - 1 `below` draws, swapping
/// from the back.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

/// ceil(fraction * n) with a small tolerance so exact products do not round up.
std::size_t ceil_fraction(double fraction, std::size_t n);

}  // namespace synthcl
