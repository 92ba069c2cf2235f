#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "layerseg/label_mask.hpp"
#include "layerseg/tensor.hpp"

// Forward compute kernels for the two networks. Everything here is a pure
// function of its inputs; the autograd layer wraps these and adds the
// reverse-mode rules.
namespace layerseg::ops {

// Cross-correlation with square odd kernels, stride 1, zero padding.
// input [C_in,H,W], kernels [C_out,C_in,k,k], bias [C_out] ->
// [C_out, H+2p-k+1, W+2p-k+1].
template <typename S>
Tensor<S> conv2d(const Tensor<S>& input, const Tensor<S>& kernels, const Tensor<S>& bias,
                 int padding);

template <typename S>
struct PoolResult {
    Tensor<S> output;                   // [C, H/2, W/2]
    std::vector<std::uint32_t> argmax;  // flat input index of each window max
};

// 2x2 max pooling; H and W must be even. The argmax indices route gradients.
template <typename S>
PoolResult<S> maxpool2x2(const Tensor<S>& input);

// Nearest-neighbour 2x upsampling.
template <typename S>
Tensor<S> upsample2x2(const Tensor<S>& input);

template <typename S>
Tensor<S> relu(const Tensor<S>& input);

// Channel-stacked concatenation, a first; spatial extents must match.
template <typename S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b);

// Affine map: weights [M,N] * flatten(input)[N] + bias[M] -> [M].
template <typename S>
Tensor<S> dense(const Tensor<S>& input, const Tensor<S>& weights, const Tensor<S>& bias);

// Per-pixel softmax across the leading (class) axis, max-subtracted.
template <typename S>
Tensor<S> softmax_over_classes(const Tensor<S>& input);

template <typename S>
struct LossValue {
    S sum = S(0);
    S mean = S(0);
    std::size_t count = 0;  // pixels (cross-entropy) or elements (mse)
};

// L = -sum_x log p_{l(x)}(x) over all pixels. probs [C,H,W] must be a valid
// per-pixel distribution; labels must be < C.
template <typename S>
LossValue<S> cross_entropy_loss(const Tensor<S>& probs, const LabelMask& labels);

// L = ||target - pred||_2^2 (sum of squares) plus the per-element mean.
template <typename S>
LossValue<S> mse_loss(const Tensor<S>& pred, const Tensor<S>& target);

// --- internal kernels shared with the autograd layer ---

// Unfolds conv input into a [C_in*k*k, H'*W'] matrix (column per output
// pixel). Out-of-range taps are zero.
template <typename S>
void im2col(const Tensor<S>& input, int k, int padding, std::size_t out_h, std::size_t out_w,
            std::vector<S>& cols);

// Transpose of im2col: accumulates a [C_in*k*k, H'*W'] matrix back into image
// layout. `image` must be pre-zeroed.
template <typename S>
void col2im(const std::vector<S>& cols, int k, int padding, std::size_t out_h, std::size_t out_w,
            Tensor<S>& image);

// out[M x N] = a[M x K] * b[K x N] (+= when accumulate), row-major, blocked
// over rows of `out` with a fixed decomposition so results do not depend on
// the worker count.
template <typename S>
void matmul(const S* a, const S* b, S* out, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate);

// out[M x N] = a[M x K] * b[N x K]^T
template <typename S>
void matmul_nt(const S* a, const S* b, S* out, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate);

// out[M x N] = a[K x M]^T * b[K x N]
template <typename S>
void matmul_tn(const S* a, const S* b, S* out, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate);

}  // namespace layerseg::ops
