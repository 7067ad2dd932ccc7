#include "synthcl/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace synthcl {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ZeroNorm: return "ZeroNorm";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::BadRange: return "BadRange";
    case Errc::BadShape: return "BadShape";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::EmptyQueue: return "EmptyQueue";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NoNegatives: return "NoNegatives";
    case Errc::BadConfig: return "BadConfig";
    case Errc::BadLabels: return "BadLabels";
    case Errc::Unlabeled: return "Unlabeled";
    case Errc::IoError: return "IoError";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
  }
  return "Unknown";
}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw Error(Errc::BadShape, "matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                                    " given " + std::to_string(values_.size()) + " values");
  }
}

void Mat::append_row(std::span<const double> row) {
  if (rows_ == 0 && cols_ == 0) cols_ = row.size();
  if (row.size() != cols_) throw Error(Errc::ShapeMismatch, "append_row: row length differs from cols");
  values_.insert(values_.end(), row.begin(), row.end());
  ++rows_;
}

Mat vstack(const Mat& a, const Mat& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.cols() != b.cols()) throw Error(Errc::ShapeMismatch, "vstack: column counts differ");
  std::vector<double> values;
  values.reserve(a.size() + b.size());
  values.insert(values.end(), a.values().begin(), a.values().end());
  values.insert(values.end(), b.values().begin(), b.values().end());
  return Mat(a.rows() + b.rows(), a.cols(), std::move(values));
}

Mat slice_rows(const Mat& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.rows()) throw Error(Errc::ShapeMismatch, "slice_rows: bad row range");
  auto first = m.values().begin() + static_cast<std::ptrdiff_t>(begin * m.cols());
  auto last = m.values().begin() + static_cast<std::ptrdiff_t>(end * m.cols());
  return Mat(end - begin, m.cols(), std::vector<double>(first, last));
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "dot: lengths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void l2_normalize_inplace(std::span<double> v) {
  const double n = l2_norm(v);
  if (!(n > kZeroNormThreshold)) throw Error(Errc::ZeroNorm, "vector norm below 1e-12");
  for (double& x : v) x /= n;
}

Vec l2_normalize(std::span<const double> v) {
  Vec out(v.begin(), v.end());
  l2_normalize_inplace(out);
  return out;
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "cosine_sim: lengths differ");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na > kZeroNormThreshold) || !(nb > kZeroNormThreshold)) {
    throw Error(Errc::ZeroNorm, "cosine_sim of a zero vector");
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k) {
  if (k > scores.size()) throw Error(Errc::KTooLarge, "top_k: k exceeds number of scores");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

Vec stable_softmax(std::span<const double> logits) {
  Vec out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

double log_sum_exp(std::span<const double> logits) {
  if (logits.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double x : logits) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

Mat matmul_bt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) throw Error(Errc::ShapeMismatch, "matmul_bt: inner dimensions differ");
  Mat out(a.rows(), b.rows());
  const std::size_t k = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ar = a.row(i).data();
    double* orow = out.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* br = b.row(j).data();
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += ar[t] * br[t];
      orow[j] = s;
    }
  }
  return out;
}

Mat matmul_at(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw Error(Errc::ShapeMismatch, "matmul_at: row counts differ");
  Mat out(a.cols(), b.cols());
  for (std::size_t n = 0; n < a.rows(); ++n) {
    const double* ar = a.row(n).data();
    const double* br = b.row(n).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double av = ar[i];
      if (av == 0.0) continue;
      double* orow = out.row(i).data();
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += av * br[j];
    }
  }
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw Error(Errc::ShapeMismatch, "matmul: inner dimensions differ");
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* orow = out.row(i).data();
    const double* ar = a.row(i).data();
    for (std::size_t t = 0; t < a.cols(); ++t) {
      const double av = ar[t];
      if (av == 0.0) continue;
      const double* br = b.row(t).data();
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += av * br[j];
    }
  }
  return out;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(Errc::BadRange, "uniform requires finite lo < hi");
  }
  const double u = uniform01();
  const double x = lo + (hi - lo) * u;
  return x < hi ? x : std::nextafter(hi, lo);
}

double Rng::gauss(double mu, double sigma) {
  if (!(sigma >= 0.0)) throw Error(Errc::BadRange, "gauss requires sigma >= 0");
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  if (sigma == 0.0) return mu;
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mu + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw Error(Errc::BadRange, "below(0)");
  const auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::set_state(const std::string& blob) {
  std::istringstream is(blob);
  std::mt19937_64 engine;
  is >> engine;
  if (is.fail()) throw Error(Errc::BadShape, "malformed rng state blob");
  engine_ = engine;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng) {
  if (count > n) throw Error(Errc::KTooLarge, "cannot sample more indices than available");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

std::size_t ceil_fraction(double fraction, std::size_t n) {
  const double x = fraction * static_cast<double>(n);
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

}  // namespace synthcl
