#pragma once

#include <cstddef>
#include <vector>

#include "synthcl/core_math.hpp"

namespace synthcl {

/// Nonlinearity applied after every hidden layer. The last layer is always
/// affine; its output is L2-normalized row-wise.
enum class Activation { Tanh, Linear };

struct DenseLayer {
  Mat weights;  // out x in
  Vec bias;     // out

  bool operator==(const DenseLayer&) const = default;
};

struct EncoderParams {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::Tanh;

  std::size_t input_dim() const { return layers.front().weights.cols(); }
  std::size_t out_dim() const { return layers.back().weights.rows(); }
  /// [input, hidden..., output]
  std::vector<std::size_t> dims() const;
  std::size_t parameter_count() const;

  bool operator==(const EncoderParams&) const = default;
};

/// Gradient tree with the same layer shapes as the parameters it belongs to.
using Gradients = EncoderParams;

struct ForwardTrace {
  std::vector<Mat> inputs;       // input to layer i, inputs[0] is the batch
  std::vector<Mat> activations;  // post-activation output of layer i (pre-norm for the last)
  Vec out_norms;                 // ||u|| per row before the final normalization
  Mat embeddings;                // normalized output rows
};

/// Glorot-uniform weights, zero biases. Draws weights layer by layer in
/// row-major order.
EncoderParams encoder_init(const std::vector<std::size_t>& layer_dims, Rng& rng,
                           Activation activation = Activation::Tanh);

/// Shape validation shared by forward/backward/sgd.
void check_congruent(const EncoderParams& a, const EncoderParams& b);

ForwardTrace encoder_forward(const EncoderParams& params, const Mat& batch);

/// Forward pass without keeping intermediate activations.
Mat encoder_embed(const EncoderParams& params, const Mat& batch);

/// Exact gradient of sum_ij grad_embeddings(i,j) * embeddings(i,j) w.r.t. every
/// parameter, back through the row normalization.
Gradients encoder_backward(const EncoderParams& params, const ForwardTrace& trace,
                           const Mat& grad_embeddings);

/// theta <- theta - lr * (g + weight_decay * theta), biases included.
void sgd_step(EncoderParams& params, const Gradients& grads, double lr, double weight_decay);

/// Zero-valued tree shaped like `params`.
Gradients zeros_like(const EncoderParams& params);

}  // namespace synthcl
