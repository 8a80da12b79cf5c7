#include "dsdkit/attention.hpp"

#include <cmath>

namespace dsdkit::attn {

Tensor downsample_kv(const Tensor& x, const nn::ConvParams& dw, int k) {
    if (x.rank() != 3) throw DimensionError("downsample_kv expects [H,W,d]");
    if (k < 1) throw DimensionError("downsample_kv: k must be >= 1");
    if (x.dim(0) % k != 0 || x.dim(1) % k != 0) {
        throw DimensionError("downsample_kv: " + x.shape_str() +
                             " not divisible by stride " + std::to_string(k));
    }
    if (dw.w.rank() != 3 || dw.w.dim(0) != k || dw.w.dim(1) != k) {
        throw DimensionError("downsample_kv: kernel must be k x k depthwise");
    }
    return nn::depthwise_conv2d(x, dw, /*stride=*/k, /*pad=*/0);
}

Tensor lsa(const Tensor& x, const LsaParams& params,
           std::vector<Tensor>* weights_out) {
    if (x.rank() != 3) throw DimensionError("lsa expects [H,W,d]");
    const int h = x.dim(0), w = x.dim(1), d = x.dim(2);
    const int heads = params.heads, k = params.kv_stride;
    if (heads < 1 || d % heads != 0) {
        throw ConfigError("lsa: heads must divide channel width");
    }
    const int dk = d / heads;
    const int hw = h * w;

    Tensor flat({hw, d}, x.data);
    Tensor q = nn::linear(flat, params.q_proj);

    Tensor down = downsample_kv(x, params.dw, k);
    const int hw_kv = down.dim(0) * down.dim(1);
    Tensor down_flat({hw_kv, d}, std::move(down.data));
    Tensor key = nn::linear(down_flat, params.k_proj);
    Tensor val = nn::linear(down_flat, params.v_proj);

    if (params.bias.rank() != 3 || params.bias.dim(0) != heads ||
        params.bias.dim(1) != hw || params.bias.dim(2) != hw_kv) {
        throw DimensionError("lsa: bias must be [heads, HW, HW/k^2], got " +
                             params.bias.shape_str());
    }

    const float scale = 1.0f / std::sqrt(static_cast<float>(dk));
    Tensor concat({hw, d});
    if (weights_out) weights_out->clear();

    for (int head = 0; head < heads; ++head) {
        const int off = head * dk;
        // scores = Q_h K_h^T / sqrt(d_k) + B_h
        Tensor scores({hw, hw_kv});
#pragma omp parallel for schedule(static)
        for (int i = 0; i < hw; ++i) {
            for (int j = 0; j < hw_kv; ++j) {
                float acc = 0.0f;
                for (int c = 0; c < dk; ++c) {
                    acc += q.at(i, off + c) * key.at(j, off + c);
                }
                scores.at(i, j) = acc * scale + params.bias.at(head, i, j);
            }
        }
        Tensor weights = nn::softmax_rows(scores);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < hw; ++i) {
            for (int c = 0; c < dk; ++c) {
                float acc = 0.0f;
                for (int j = 0; j < hw_kv; ++j) {
                    acc += weights.at(i, j) * val.at(j, off + c);
                }
                concat.at(i, off + c) = acc;
            }
        }
        if (weights_out) weights_out->push_back(std::move(weights));
    }

    return nn::linear(concat, params.out_proj);
}

}  // namespace dsdkit::attn
