#include "synthcl/momentum_queue.hpp"

#include <cmath>
#include <string>

namespace synthcl {

void ema_update(EncoderPair& pair) {
  check_congruent(pair.online, pair.target);
  const double m = pair.momentum;
  if (!(m >= 0.0 && m <= 1.0)) throw Error(Errc::BadRange, "momentum must lie in [0, 1]");
  auto blend = [m](std::span<double> target, std::span<const double> online) {
    for (std::size_t i = 0; i < target.size(); ++i) target[i] = m * target[i] + (1.0 - m) * online[i];
  };
  for (std::size_t i = 0; i < pair.online.layers.size(); ++i) {
    blend(pair.target.layers[i].weights.values(), pair.online.layers[i].weights.values());
    blend(pair.target.layers[i].bias, pair.online.layers[i].bias);
  }
}

NegativeQueue::NegativeQueue(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), storage_(capacity, dim) {
  if (capacity == 0 || dim == 0) throw Error(Errc::BadShape, "queue capacity and dim must be positive");
}

NegativeQueue::NegativeQueue(std::size_t capacity, std::size_t dim, std::size_t fill,
                             std::size_t head, Mat storage)
    : capacity_(capacity), dim_(dim), fill_(fill), head_(head), storage_(std::move(storage)) {
  if (capacity == 0 || dim == 0) throw Error(Errc::BadShape, "queue capacity and dim must be positive");
  if (fill > capacity || head >= capacity) throw Error(Errc::BadShape, "queue fill/head out of range");
  if (fill < capacity && head != fill) throw Error(Errc::BadShape, "partial queue must have head == fill");
  if (storage_.rows() != capacity || storage_.cols() != dim) {
    throw Error(Errc::BadShape, "queue storage shape mismatch");
  }
}

void NegativeQueue::enqueue(const Mat& keys) {
  if (keys.empty()) return;
  if (keys.cols() != dim_) {
    throw Error(Errc::DimMismatch, "key dim " + std::to_string(keys.cols()) + " != queue dim " +
                                       std::to_string(dim_));
  }
  if (keys.rows() > capacity_) throw Error(Errc::BadShape, "key batch larger than queue capacity");
  for (std::size_t r = 0; r < keys.rows(); ++r) {
    const double n = l2_norm(keys.row(r));
    if (!(std::abs(n - 1.0) <= kNormTolerance)) {
      throw Error(Errc::NotNormalized, "key row " + std::to_string(r) + " has norm " + std::to_string(n));
    }
  }
  for (std::size_t r = 0; r < keys.rows(); ++r) {
    auto src = keys.row(r);
    auto dst = storage_.row(head_);
    std::copy(src.begin(), src.end(), dst.begin());
    head_ = (head_ + 1) % capacity_;
    if (fill_ < capacity_) ++fill_;
  }
}

Mat NegativeQueue::snapshot() const {
  if (fill_ == 0) throw Error(Errc::EmptyQueue, "snapshot of an empty queue");
  Mat out(fill_, dim_);
  const std::size_t oldest = full() ? head_ : 0;
  for (std::size_t i = 0; i < fill_; ++i) {
    auto src = storage_.row((oldest + i) % capacity_);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

}  // namespace synthcl
