#pragma once

#include <cmath>
#include <vector>

#include "dsdkit/tensor.hpp"

// Neural-network primitives on float32 tensors. Kernels are OpenMP-parallel
// over independent output elements only; every output value is accumulated in
// a fixed sequential order, so results are bit-identical to the serial
// reference kernels in dsdkit::ref at any thread count.
namespace dsdkit::nn {

struct LinearParams {
    Tensor w;  // [d_in, d_out]
    Tensor b;  // [d_out], empty shape = no bias
};

struct LayerNormParams {
    Tensor gamma;  // [d]
    Tensor beta;   // [d]
    float eps = 1e-5f;
};

struct SeParams {
    Tensor fc1;  // [d, d/r]
    Tensor fc2;  // [d/r, d]
    bool sigmoid_gate = true;  // gate = sigmoid(fc2(fc1(gap))) when set
};

struct ConvParams {
    Tensor w;  // conv2d: [kh, kw, c_in, c_out]; depthwise: [kh, kw, c]
    Tensor b;  // [c_out] / [c], empty shape = no bias
};

inline bool has_bias(const Tensor& b) { return !b.shape.empty(); }

inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }
inline float silu(float x) { return x * sigmoid(x); }
inline float gelu(float x) {
    return 0.5f * x * (1.0f + std::erf(x * 0.70710678f));
}
inline float softplus(float x) {
    if (x > 20.0f) return x;  // log1p(exp(x)) overflows past here
    return std::log1p(std::exp(x));
}

// a [m,k] x b [k,n] -> [m,n]; accumulation over k ascending per output.
Tensor matmul(const Tensor& a, const Tensor& b);

// x [n, d_in] -> [n, d_out]
Tensor linear(const Tensor& x, const LinearParams& p);

// Row-wise softmax with max subtraction; throws NumericError on non-finite
// input.
Tensor softmax_rows(const Tensor& m);

// Normalizes a single channel vector.
std::vector<float> layer_norm(const std::vector<float>& x,
                              const LayerNormParams& p);

// Applies layer_norm to every row of [n, d] (or every channel vector of
// [H, W, d]).
Tensor layer_norm_rows(const Tensor& x, const LayerNormParams& p);

Tensor conv2d(const Tensor& x, const ConvParams& p, int stride, int pad);
Tensor depthwise_conv2d(const Tensor& x, const ConvParams& p, int stride,
                        int pad);

// x [H, W, d] -> [d]
std::vector<float> global_avg_pool(const Tensor& x);

// SE(X) = gate(FC2(FC1(GAP(X)))) * X, per-channel scaling.
Tensor se_gate(const Tensor& x, const SeParams& p);

Tensor apply_gelu(Tensor x);

// Elementwise sum, shapes must match.
Tensor add(const Tensor& a, const Tensor& b);

}  // namespace dsdkit::nn

// Serial reference kernels: same math, no threading pragmas. Kept as the
// ground truth the parallel kernels are tested and benchmarked against.
namespace dsdkit::ref {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor conv2d(const Tensor& x, const nn::ConvParams& p, int stride, int pad);
Tensor depthwise_conv2d(const Tensor& x, const nn::ConvParams& p, int stride,
                        int pad);

}  // namespace dsdkit::ref
