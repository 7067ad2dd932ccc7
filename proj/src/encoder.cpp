#include "synthcl/encoder.hpp"

#include <cmath>

namespace synthcl {

std::vector<std::size_t> EncoderParams::dims() const {
  std::vector<std::size_t> out;
  if (layers.empty()) return out;
  out.push_back(input_dim());
  for (const auto& l : layers) out.push_back(l.weights.rows());
  return out;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

EncoderParams encoder_init(const std::vector<std::size_t>& layer_dims, Rng& rng,
                           Activation activation) {
  if (layer_dims.size() < 2) throw Error(Errc::BadShape, "encoder needs at least two dims");
  for (auto d : layer_dims) {
    if (d == 0) throw Error(Errc::BadShape, "encoder dims must be positive");
  }
  EncoderParams params;
  params.activation = activation;
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    const std::size_t fan_in = layer_dims[i];
    const std::size_t fan_out = layer_dims[i + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Mat(fan_out, fan_in), Vec(fan_out, 0.0)};
    for (double& w : layer.weights.values()) w = rng.uniform(-bound, bound);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

void check_congruent(const EncoderParams& a, const EncoderParams& b) {
  if (a.layers.size() != b.layers.size()) {
    throw Error(Errc::ShapeMismatch, "parameter trees have different layer counts");
  }
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& la = a.layers[i];
    const auto& lb = b.layers[i];
    if (la.weights.rows() != lb.weights.rows() || la.weights.cols() != lb.weights.cols() ||
        la.bias.size() != lb.bias.size()) {
      throw Error(Errc::ShapeMismatch, "layer " + std::to_string(i) + " shapes differ");
    }
  }
}

namespace {

// out = in * W^T + b
Mat affine(const Mat& in, const DenseLayer& layer) {
  Mat out = matmul_bt(in, layer.weights);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
  }
  return out;
}

void check_input(const EncoderParams& params, const Mat& batch) {
  if (params.layers.empty()) throw Error(Errc::BadShape, "encoder has no layers");
  if (batch.cols() != params.input_dim()) {
    throw Error(Errc::ShapeMismatch, "batch has " + std::to_string(batch.cols()) +
                                         " columns, encoder expects " +
                                         std::to_string(params.input_dim()));
  }
}

}  // namespace

ForwardTrace encoder_forward(const EncoderParams& params, const Mat& batch) {
  check_input(params, batch);
  ForwardTrace trace;
  Mat current = batch;
  const std::size_t n_layers = params.layers.size();
  for (std::size_t i = 0; i < n_layers; ++i) {
    Mat out = affine(current, params.layers[i]);
    if (i + 1 < n_layers && params.activation == Activation::Tanh) {
      for (double& x : out.values()) x = std::tanh(x);
    }
    trace.inputs.push_back(std::move(current));
    current = out;
    trace.activations.push_back(std::move(out));
  }
  trace.out_norms.resize(current.rows());
  for (std::size_t r = 0; r < current.rows(); ++r) {
    auto row = current.row(r);
    trace.out_norms[r] = l2_norm(row);
    l2_normalize_inplace(row);
  }
  trace.embeddings = std::move(current);
  return trace;
}

Mat encoder_embed(const EncoderParams& params, const Mat& batch) {
  check_input(params, batch);
  Mat current = batch;
  const std::size_t n_layers = params.layers.size();
  for (std::size_t i = 0; i < n_layers; ++i) {
    current = affine(current, params.layers[i]);
    if (i + 1 < n_layers && params.activation == Activation::Tanh) {
      for (double& x : current.values()) x = std::tanh(x);
    }
  }
  for (std::size_t r = 0; r < current.rows(); ++r) l2_normalize_inplace(current.row(r));
  return current;
}

Gradients encoder_backward(const EncoderParams& params, const ForwardTrace& trace,
                           const Mat& grad_embeddings) {
  const std::size_t n_layers = params.layers.size();
  if (trace.inputs.size() != n_layers || trace.activations.size() != n_layers) {
    throw Error(Errc::ShapeMismatch, "trace does not match parameter layers");
  }
  const Mat& z = trace.embeddings;
  if (grad_embeddings.rows() != z.rows() || grad_embeddings.cols() != z.cols()) {
    throw Error(Errc::ShapeMismatch, "upstream gradient shape differs from embeddings");
  }

  // Row normalization: du = (I - z z^T) dz / ||u||.
  Mat delta(z.rows(), z.cols());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto g = grad_embeddings.row(r);
    auto zr = z.row(r);
    const double proj = dot(g, zr);
    auto d = delta.row(r);
    for (std::size_t c = 0; c < d.size(); ++c) d[c] = (g[c] - proj * zr[c]) / trace.out_norms[r];
  }

  Gradients grads = zeros_like(params);
  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& layer = params.layers[li];
    auto& g = grads.layers[li];
    g.weights = matmul_at(delta, trace.inputs[li]);
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      auto d = delta.row(r);
      for (std::size_t c = 0; c < d.size(); ++c) g.bias[c] += d[c];
    }
    if (li == 0) break;
    Mat upstream = matmul(delta, layer.weights);
    if (params.activation == Activation::Tanh) {
      const Mat& a = trace.activations[li - 1];
      auto up = upstream.values();
      auto av = a.values();
      for (std::size_t t = 0; t < up.size(); ++t) up[t] *= 1.0 - av[t] * av[t];
    }
    delta = std::move(upstream);
  }
  return grads;
}

void sgd_step(EncoderParams& params, const Gradients& grads, double lr, double weight_decay) {
  check_congruent(params, grads);
  if (!(lr > 0.0)) throw Error(Errc::BadRange, "learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw Error(Errc::BadRange, "weight decay must be non-negative");
  auto update = [&](std::span<double> theta, std::span<const double> g) {
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * (g[i] + weight_decay * theta[i]);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weights.values(), grads.layers[i].weights.values());
    update(params.layers[i].bias, grads.layers[i].bias);
  }
}

Gradients zeros_like(const EncoderParams& params) {
  Gradients g;
  g.activation = params.activation;
  for (const auto& l : params.layers) {
    g.layers.push_back({Mat(l.weights.rows(), l.weights.cols()), Vec(l.bias.size(), 0.0)});
  }
  return g;
}

}  // namespace synthcl
