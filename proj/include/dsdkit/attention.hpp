#pragma once

#include <vector>

#include "dsdkit/nn.hpp"
#include "dsdkit/tensor.hpp"

// Lightweight self-attention: multi-head attention whose K/V streams are
// spatially downsampled by a stride-k depthwise k x k convolution, with a
// learnable per-head additive bias on the score matrix.
namespace dsdkit::attn {

struct LsaParams {
    int heads = 1;
    int kv_stride = 1;          // k
    nn::LinearParams q_proj;    // [d, d]
    nn::LinearParams k_proj;
    nn::LinearParams v_proj;
    nn::LinearParams out_proj;
    nn::ConvParams dw;          // depthwise [k, k, d], stride k, no padding
    Tensor bias;                // [heads, HW, HW/k^2]
};

// x [H, W, d] -> [(H/k), (W/k), d]; H and W must be divisible by k.
Tensor downsample_kv(const Tensor& x, const nn::ConvParams& dw, int k);

// x [H, W, d] -> [HW, d] (returned flat). When weights_out is non-null it
// receives the post-softmax attention maps, one [HW, HW/k^2] tensor per head.
Tensor lsa(const Tensor& x, const LsaParams& params,
           std::vector<Tensor>* weights_out = nullptr);

}  // namespace dsdkit::attn
