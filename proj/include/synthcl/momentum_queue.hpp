#pragma once

#include <cstddef>

#include "synthcl/encoder.hpp"

namespace synthcl {

/// Online encoder (trained by SGD) and its EMA-tracked target copy.
struct EncoderPair {
  EncoderParams online;
  EncoderParams target;
  double momentum = 0.99;

  bool operator==(const EncoderPair&) const = default;
};

/// target <- m * target + (1 - m) * online, elementwise.
void ema_update(EncoderPair& pair);

/// Fixed-capacity FIFO of unit-norm key embeddings backed by a ring buffer.
class NegativeQueue {
 public:
  /// Keys whose norm deviates from 1 by more than this are rejected.
  static constexpr double kNormTolerance = 1e-6;

  NegativeQueue(std::size_t capacity, std::size_t dim);

  /// Rebuild from serialized storage; `storage` holds capacity rows.
  NegativeQueue(std::size_t capacity, std::size_t dim, std::size_t fill, std::size_t head,
                Mat storage);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t fill() const noexcept { return fill_; }
  /// Slot that the next key is written to.
  std::size_t head() const noexcept { return head_; }
  bool full() const noexcept { return fill_ == capacity_; }

  /// Append rows in order, evicting the oldest entries once full.
  void enqueue(const Mat& keys);

  /// fill x dim copy, oldest entry first. Throws EmptyQueue when fill == 0.
  Mat snapshot() const;

  /// Raw ring buffer (capacity rows, unused rows zero).
  const Mat& storage() const noexcept { return storage_; }

  bool operator==(const NegativeQueue&) const = default;

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::size_t fill_ = 0;
  std::size_t head_ = 0;
  Mat storage_;
};

}  // namespace synthcl
