#pragma once

#include <span>

#include "bdnas/tensor.hpp"

// Differentiable operations. Activations are (batch, channels, height, width)
// in row-major order; every op records its backward closure when any input
// requires a gradient.
namespace bdnas {

/// Dense 2-D convolution. `w` is (out_channels, in_channels, kh, kw).
Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int padding);

/// One k×k filter per channel. `w` is (channels, 1, kh, kw).
Tensor depthwise_conv2d(const Tensor& x, const Tensor& w, int stride, int padding);

/// min(max(x, 0), 6); the subgradient at both kinks is 0.
Tensor relu6(const Tensor& x);

/// y[:, c, ...] = scale[c] * x[:, c, ...] + bias[c] for rank-2 or rank-4 x.
Tensor channel_affine(const Tensor& x, const Tensor& scale, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);

/// (N, C, H, W) -> (N, C).
Tensor global_avg_pool(const Tensor& x);

/// x (N, in) times w (out, in) transposed, plus b (out).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// Row-wise softmax of a rank-2 tensor (a rank-1 tensor is one row).
Tensor softmax(const Tensor& z);

/// Mean negative log-likelihood of the labelled entries of a probability
/// matrix. Throws std::out_of_range on a label outside [0, C).
Tensor cross_entropy(const Tensor& probs, std::span<const int> labels);

/// Fused, numerically stable softmax + cross_entropy on logits.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Σ_i weights[i]·x[i], a scalar. Used to reduce vector outputs in checks.
Tensor weighted_sum(const Tensor& x, std::span<const Real> weights);

/// Output extent of a convolution along one axis.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, int stride, int padding);

}  // namespace bdnas
