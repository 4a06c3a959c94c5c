#pragma once

#include <cstddef>
#include <vector>

#include "gcsep/tensor.hpp"

namespace gcsep {

// Fixed differentiable op set. Binary elementwise ops broadcast a smaller
// operand whose shape equals a trailing suffix of the larger one (leading
// dimensions expand); anything else is a shape error.

Tensor matmul(const Tensor& a, const Tensor& b);  // [m x k] * [k x n]

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, double factor);
Tensor add_scalar(const Tensor& t, double value);
Tensor neg(const Tensor& t);

Tensor sigmoid(const Tensor& t);
Tensor tanh_op(const Tensor& t);
Tensor relu(const Tensor& t);
Tensor log_op(const Tensor& t);  // natural log; domain error on non-positive values

Tensor sum(const Tensor& t);                    // all elements -> scalar
Tensor sum(const Tensor& t, std::size_t axis);  // axis removed
Tensor mean(const Tensor& t);
Tensor mean(const Tensor& t, std::size_t axis);

Tensor reshape(const Tensor& t, const Shape& shape);
Tensor permute(const Tensor& t, const std::vector<std::size_t>& perm);
Tensor transpose(const Tensor& t);  // 2-D convenience
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& t, std::size_t axis, std::size_t start, std::size_t length);
Tensor flip(const Tensor& t, std::size_t axis);

// Valid (no padding) correlation. input [C_in x L], kernels [C_out x C_in x W],
// output [C_out x L'] with L' = (L - W)/stride + 1. Requires L >= W.
Tensor conv1d(const Tensor& input, const Tensor& kernels, std::size_t stride);

// Transposed counterpart. input [C_in x L], kernels [C_in x C_out x W],
// output [C_out x L''] with L'' = (L-1)*stride + W; overlaps are summed.
Tensor conv1d_transpose(const Tensor& input, const Tensor& kernels, std::size_t stride);

// Per-row normalization over the last axis with biased variance:
// y = (x - mean) / sqrt(var + eps) * gain + bias, gain/bias of length d.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

// DPRNN segmentation: [F x L] -> [F x 2T x S] overlapped blocks at hop T,
// zero-padded so every original frame lands in exactly 2 blocks;
// S = ceil(L/T) + 1.
Tensor segment_frames(const Tensor& frames, std::size_t hop);

// Adjoint data movement: [F x 2T x S] blocks summed back at hop T, padding
// discarded; output [F x orig_frames]. overlap_add(segment(H)) == 2*H.
Tensor overlap_add(const Tensor& blocks, std::size_t hop, std::size_t orig_frames);

std::size_t segment_count(std::size_t frames, std::size_t hop);

}  // namespace gcsep
