#include "layerseg/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>

#include "layerseg/threading.hpp"

namespace layerseg::ops {

namespace {

template <typename S>
using MatMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename S>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Fixed row-block size for the deterministic parallel decomposition.
constexpr std::size_t kRowBlock = 16;

}  // namespace

template <typename S>
void matmul(const S* a, const S* b, S* out, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate) {
    const std::size_t blocks = (m + kRowBlock - 1) / kRowBlock;
    parallel_blocks(blocks, [&](std::size_t blk) {
        const std::size_t r0 = blk * kRowBlock;
        const std::size_t rows = std::min(kRowBlock, m - r0);
        ConstMatMap<S> ablk(a + r0 * k, rows, k);
        ConstMatMap<S> bm(b, k, n);
        MatMap<S> oblk(out + r0 * n, rows, n);
        if (accumulate) {
            oblk.noalias() += ablk * bm;
        } else {
            oblk.noalias() = ablk * bm;
        }
    });
}

template <typename S>
void matmul_nt(const S* a, const S* b, S* out, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
    const std::size_t blocks = (m + kRowBlock - 1) / kRowBlock;
    parallel_blocks(blocks, [&](std::size_t blk) {
        const std::size_t r0 = blk * kRowBlock;
        const std::size_t rows = std::min(kRowBlock, m - r0);
        ConstMatMap<S> ablk(a + r0 * k, rows, k);
        ConstMatMap<S> bm(b, n, k);
        MatMap<S> oblk(out + r0 * n, rows, n);
        if (accumulate) {
            oblk.noalias() += ablk * bm.transpose();
        } else {
            oblk.noalias() = ablk * bm.transpose();
        }
    });
}

template <typename S>
void matmul_tn(const S* a, const S* b, S* out, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
    const std::size_t blocks = (m + kRowBlock - 1) / kRowBlock;
    parallel_blocks(blocks, [&](std::size_t blk) {
        const std::size_t r0 = blk * kRowBlock;
        const std::size_t rows = std::min(kRowBlock, m - r0);
        ConstMatMap<S> am(a, k, m);
        ConstMatMap<S> bm(b, k, n);
        MatMap<S> oblk(out + r0 * n, rows, n);
        if (accumulate) {
            oblk.noalias() += am.middleCols(r0, rows).transpose() * bm;
        } else {
            oblk.noalias() = am.middleCols(r0, rows).transpose() * bm;
        }
    });
}

template <typename S>
void im2col(const Tensor<S>& input, int k, int padding, std::size_t out_h, std::size_t out_w,
            std::vector<S>& cols) {
    const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    cols.assign(c_in * k * k * out_h * out_w, S(0));
    const std::size_t plane = out_h * out_w;
    for (std::size_t c = 0; c < c_in; ++c) {
        for (int di = 0; di < k; ++di) {
            for (int dj = 0; dj < k; ++dj) {
                S* dst = cols.data() + ((c * k + di) * k + dj) * plane;
                for (std::size_t y = 0; y < out_h; ++y) {
                    const long sy = static_cast<long>(y) + di - padding;
                    if (sy < 0 || sy >= static_cast<long>(h)) continue;
                    const long sx0 = dj - padding;
                    const long xs = std::max(0L, -sx0);
                    const long xe =
                        std::min(static_cast<long>(out_w), static_cast<long>(w) - sx0);
                    if (xe <= xs) continue;
                    const S* src = &input.at(c, static_cast<std::size_t>(sy),
                                             static_cast<std::size_t>(sx0 + xs));
                    std::memcpy(dst + y * out_w + xs, src, (xe - xs) * sizeof(S));
                }
            }
        }
    }
}

template <typename S>
void col2im(const std::vector<S>& cols, int k, int padding, std::size_t out_h, std::size_t out_w,
            Tensor<S>& image) {
    const std::size_t c_in = image.dim(0), h = image.dim(1), w = image.dim(2);
    const std::size_t plane = out_h * out_w;
    // Disjoint per input channel, so the channel loop may be parallel.
    parallel_blocks(c_in, [&](std::size_t c) {
        for (int di = 0; di < k; ++di) {
            for (int dj = 0; dj < k; ++dj) {
                const S* src = cols.data() + ((c * k + di) * k + dj) * plane;
                for (std::size_t y = 0; y < out_h; ++y) {
                    const long sy = static_cast<long>(y) + di - padding;
                    if (sy < 0 || sy >= static_cast<long>(h)) continue;
                    const long sx0 = dj - padding;
                    const long xs = std::max(0L, -sx0);
                    const long xe =
                        std::min(static_cast<long>(out_w), static_cast<long>(w) - sx0);
                    S* dst = &image.at(c, static_cast<std::size_t>(sy), 0);
                    for (long x = xs; x < xe; ++x) dst[sx0 + x] += src[y * out_w + x];
                }
            }
        }
    });
}

template <typename S>
Tensor<S> conv2d(const Tensor<S>& input, const Tensor<S>& kernels, const Tensor<S>& bias,
                 int padding) {
    if (input.rank() != 3) throw ShapeError("conv2d input must be [C,H,W], got " + shape_str(input.shape()));
    if (kernels.rank() != 4) {
        throw ShapeError("conv2d kernels must be [C_out,C_in,k,k], got " + shape_str(kernels.shape()));
    }
    const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t c_out = kernels.dim(0);
    const int k = static_cast<int>(kernels.dim(2));
    if (kernels.dim(2) != kernels.dim(3)) throw ShapeError("conv2d kernels must be square");
    if (k % 2 == 0) throw ValueError("conv2d kernel extent must be odd, got " + std::to_string(k));
    if (padding < 0) throw ValueError("conv2d padding must be >= 0");
    if (kernels.dim(1) != c_in) {
        throw ShapeError("conv2d channel mismatch: input has " + std::to_string(c_in) +
                         " channels, kernels expect " + std::to_string(kernels.dim(1)) +
                         " (input " + shape_str(input.shape()) + ", kernels " +
                         shape_str(kernels.shape()) + ")");
    }
    if (bias.shape() != Shape{c_out}) {
        throw ShapeError("conv2d bias must be [" + std::to_string(c_out) + "], got " +
                         shape_str(bias.shape()));
    }
    const long oh = static_cast<long>(h) + 2 * padding - k + 1;
    const long ow = static_cast<long>(w) + 2 * padding - k + 1;
    if (oh <= 0 || ow <= 0) {
        throw ShapeError("conv2d output would be empty for input " + shape_str(input.shape()));
    }
    const std::size_t out_h = static_cast<std::size_t>(oh), out_w = static_cast<std::size_t>(ow);

    std::vector<S> cols;
    im2col(input, k, padding, out_h, out_w, cols);

    Tensor<S> out({c_out, out_h, out_w});
    matmul<S>(kernels.raw(), cols.data(), out.raw(), c_out, c_in * k * k, out_h * out_w, false);
    const std::size_t plane = out_h * out_w;
    for (std::size_t o = 0; o < c_out; ++o) {
        S* row = out.raw() + o * plane;
        const S b = bias[o];
        for (std::size_t i = 0; i < plane; ++i) row[i] += b;
    }
    return out;
}

template <typename S>
PoolResult<S> maxpool2x2(const Tensor<S>& input) {
    if (input.rank() != 3) throw ShapeError("maxpool2x2 input must be [C,H,W]");
    const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("maxpool2x2 needs even extents, got " + shape_str(input.shape()));
    }
    PoolResult<S> res{Tensor<S>({c, h / 2, w / 2}), {}};
    res.argmax.resize(res.output.numel());
    std::size_t oi = 0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; y += 2) {
            for (std::size_t x = 0; x < w; x += 2) {
                // Ties resolve to the first element in scan order.
                std::uint32_t best = static_cast<std::uint32_t>((ch * h + y) * w + x);
                S bv = input[best];
                const std::uint32_t cand[3] = {
                    static_cast<std::uint32_t>((ch * h + y) * w + x + 1),
                    static_cast<std::uint32_t>((ch * h + y + 1) * w + x),
                    static_cast<std::uint32_t>((ch * h + y + 1) * w + x + 1)};
                for (std::uint32_t idx : cand) {
                    if (input[idx] > bv) {
                        bv = input[idx];
                        best = idx;
                    }
                }
                res.output[oi] = bv;
                res.argmax[oi] = best;
                ++oi;
            }
        }
    }
    return res;
}

template <typename S>
Tensor<S> upsample2x2(const Tensor<S>& input) {
    if (input.rank() != 3) throw ShapeError("upsample2x2 input must be [C,H,W]");
    const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    Tensor<S> out({c, 2 * h, 2 * w});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; ++y) {
            const S* src = &input.at(ch, y, 0);
            S* d0 = &out.at(ch, 2 * y, 0);
            S* d1 = &out.at(ch, 2 * y + 1, 0);
            for (std::size_t x = 0; x < w; ++x) {
                d0[2 * x] = d0[2 * x + 1] = src[x];
                d1[2 * x] = d1[2 * x + 1] = src[x];
            }
        }
    }
    return out;
}

template <typename S>
Tensor<S> relu(const Tensor<S>& input) {
    Tensor<S> out(input.shape());
    const S* in = input.raw();
    S* o = out.raw();
    for (std::size_t i = 0; i < input.numel(); ++i) o[i] = in[i] > S(0) ? in[i] : S(0);
    return out;
}

template <typename S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.rank() != 3 || b.rank() != 3) throw ShapeError("concat_channels inputs must be [C,H,W]");
    if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
        throw ShapeError("concat_channels spatial mismatch: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
    Tensor<S> out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
    std::memcpy(out.raw(), a.raw(), a.numel() * sizeof(S));
    std::memcpy(out.raw() + a.numel(), b.raw(), b.numel() * sizeof(S));
    return out;
}

template <typename S>
Tensor<S> dense(const Tensor<S>& input, const Tensor<S>& weights, const Tensor<S>& bias) {
    if (weights.rank() != 2) throw ShapeError("dense weights must be [M,N]");
    const std::size_t m = weights.dim(0), n = weights.dim(1);
    if (input.numel() != n) {
        throw ShapeError("dense input length " + std::to_string(input.numel()) +
                         " does not match weights " + shape_str(weights.shape()));
    }
    if (bias.shape() != Shape{m}) {
        throw ShapeError("dense bias must be [" + std::to_string(m) + "], got " +
                         shape_str(bias.shape()));
    }
    Tensor<S> out({m});
    matmul<S>(weights.raw(), input.raw(), out.raw(), m, n, 1, false);
    for (std::size_t i = 0; i < m; ++i) out[i] += bias[i];
    return out;
}

template <typename S>
Tensor<S> softmax_over_classes(const Tensor<S>& input) {
    if (input.rank() != 3) throw ShapeError("softmax_over_classes input must be [C,H,W]");
    const std::size_t c = input.dim(0), plane = input.dim(1) * input.dim(2);
    Tensor<S> out(input.shape());
    for (std::size_t p = 0; p < plane; ++p) {
        S mx = input[p];
        for (std::size_t ch = 1; ch < c; ++ch) mx = std::max(mx, input[ch * plane + p]);
        S denom = S(0);
        for (std::size_t ch = 0; ch < c; ++ch) {
            const S e = std::exp(input[ch * plane + p] - mx);
            out[ch * plane + p] = e;
            denom += e;
        }
        const S inv = S(1) / denom;
        for (std::size_t ch = 0; ch < c; ++ch) out[ch * plane + p] *= inv;
    }
    return out;
}

template <typename S>
LossValue<S> cross_entropy_loss(const Tensor<S>& probs, const LabelMask& labels) {
    if (probs.rank() != 3) throw ShapeError("cross_entropy_loss probs must be [C,H,W]");
    const std::size_t c = probs.dim(0), h = probs.dim(1), w = probs.dim(2);
    if (labels.height != h || labels.width != w) {
        throw ShapeError("cross_entropy_loss label extents " + std::to_string(labels.height) +
                         "x" + std::to_string(labels.width) + " do not match probs " +
                         shape_str(probs.shape()));
    }
    labels.require_labels_below(c);
    const std::size_t plane = h * w;
    S sum = S(0);
    for (std::size_t p = 0; p < plane; ++p) {
        sum -= std::log(probs[labels.classes[p] * plane + p]);
    }
    return {sum, sum / static_cast<S>(plane), plane};
}

template <typename S>
LossValue<S> mse_loss(const Tensor<S>& pred, const Tensor<S>& target) {
    if (!pred.same_shape(target)) {
        throw ShapeError("mse_loss shape mismatch: " + shape_str(pred.shape()) + " vs " +
                         shape_str(target.shape()));
    }
    S sum = S(0);
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const S d = target[i] - pred[i];
        sum += d * d;
    }
    return {sum, sum / static_cast<S>(pred.numel()), pred.numel()};
}

#define LAYERSEG_INSTANTIATE_OPS(S)                                                            \
    template Tensor<S> conv2d<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, int);  \
    template PoolResult<S> maxpool2x2<S>(const Tensor<S>&);                                   \
    template Tensor<S> upsample2x2<S>(const Tensor<S>&);                                      \
    template Tensor<S> relu<S>(const Tensor<S>&);                                             \
    template Tensor<S> concat_channels<S>(const Tensor<S>&, const Tensor<S>&);                \
    template Tensor<S> dense<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);        \
    template Tensor<S> softmax_over_classes<S>(const Tensor<S>&);                             \
    template LossValue<S> cross_entropy_loss<S>(const Tensor<S>&, const LabelMask&);          \
    template LossValue<S> mse_loss<S>(const Tensor<S>&, const Tensor<S>&);                    \
    template void im2col<S>(const Tensor<S>&, int, int, std::size_t, std::size_t,             \
                            std::vector<S>&);                                                 \
    template void col2im<S>(const std::vector<S>&, int, int, std::size_t, std::size_t,        \
                            Tensor<S>&);                                                      \
    template void matmul<S>(const S*, const S*, S*, std::size_t, std::size_t, std::size_t,    \
                            bool);                                                            \
    template void matmul_nt<S>(const S*, const S*, S*, std::size_t, std::size_t, std::size_t, \
                               bool);                                                         \
    template void matmul_tn<S>(const S*, const S*, S*, std::size_t, std::size_t, std::size_t, \
                               bool);

LAYERSEG_INSTANTIATE_OPS(float)
LAYERSEG_INSTANTIATE_OPS(double)

}  // namespace layerseg::ops
