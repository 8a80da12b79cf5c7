#include "dsdkit/nn.hpp"

#include <algorithm>
#include <cmath>

namespace dsdkit::nn {

namespace {

void require_rank(const Tensor& t, int rank, const char* what) {
    if (t.rank() != rank) {
        throw DimensionError(std::string(what) + ": expected rank " +
                             std::to_string(rank) + ", got " + t.shape_str());
    }
}

// Shared conv inner loops. Templated on depthwise-ness so both the omp and
// ref entry points funnel through identical arithmetic.
Tensor conv2d_impl(const Tensor& x, const ConvParams& p, int stride, int pad,
                   bool parallel) {
    require_rank(x, 3, "conv2d input");
    require_rank(p.w, 4, "conv2d weight");
    const int h = x.dim(0), w = x.dim(1), cin = x.dim(2);
    const int kh = p.w.dim(0), kw = p.w.dim(1);
    if (p.w.dim(2) != cin) {
        throw DimensionError("conv2d weight c_in " + std::to_string(p.w.dim(2)) +
                             " != input channels " + std::to_string(cin));
    }
    const int cout = p.w.dim(3);
    if (stride < 1 || pad < 0) throw DimensionError("conv2d: bad stride/pad");
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (w + 2 * pad - kw) / stride + 1;
    if (h + 2 * pad < kh || w + 2 * pad < kw || ho < 1 || wo < 1) {
        throw DimensionError("conv2d: kernel does not fit input " +
                             x.shape_str());
    }
    if (has_bias(p.b) && p.b.numel() != cout) {
        throw DimensionError("conv2d bias length != c_out");
    }

    Tensor out({ho, wo, cout});
#pragma omp parallel for schedule(static) if (parallel)
    for (int oh = 0; oh < ho; ++oh) {
        for (int ow = 0; ow < wo; ++ow) {
            for (int oc = 0; oc < cout; ++oc) {
                float acc = has_bias(p.b) ? p.b.at(oc) : 0.0f;
                for (int ki = 0; ki < kh; ++ki) {
                    const int ih = oh * stride + ki - pad;
                    if (ih < 0 || ih >= h) continue;
                    for (int kj = 0; kj < kw; ++kj) {
                        const int iw = ow * stride + kj - pad;
                        if (iw < 0 || iw >= w) continue;
                        for (int ic = 0; ic < cin; ++ic) {
                            acc += x.at(ih, iw, ic) * p.w.at(ki, kj, ic, oc);
                        }
                    }
                }
                out.at(oh, ow, oc) = acc;
            }
        }
    }
    return out;
}

Tensor depthwise_impl(const Tensor& x, const ConvParams& p, int stride, int pad,
                      bool parallel) {
    require_rank(x, 3, "depthwise input");
    require_rank(p.w, 3, "depthwise weight");
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    const int kh = p.w.dim(0), kw = p.w.dim(1);
    if (p.w.dim(2) != c) {
        throw DimensionError("depthwise weight channels != input channels");
    }
    if (stride < 1 || pad < 0) throw DimensionError("depthwise: bad stride/pad");
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (w + 2 * pad - kw) / stride + 1;
    if (h + 2 * pad < kh || w + 2 * pad < kw || ho < 1 || wo < 1) {
        throw DimensionError("depthwise: kernel does not fit input " +
                             x.shape_str());
    }
    if (has_bias(p.b) && p.b.numel() != c) {
        throw DimensionError("depthwise bias length != channels");
    }

    Tensor out({ho, wo, c});
#pragma omp parallel for schedule(static) if (parallel)
    for (int oh = 0; oh < ho; ++oh) {
        for (int ow = 0; ow < wo; ++ow) {
            for (int ch = 0; ch < c; ++ch) {
                float acc = has_bias(p.b) ? p.b.at(ch) : 0.0f;
                for (int ki = 0; ki < kh; ++ki) {
                    const int ih = oh * stride + ki - pad;
                    if (ih < 0 || ih >= h) continue;
                    for (int kj = 0; kj < kw; ++kj) {
                        const int iw = ow * stride + kj - pad;
                        if (iw < 0 || iw >= w) continue;
                        acc += x.at(ih, iw, ch) * p.w.at(ki, kj, ch);
                    }
                }
                out.at(oh, ow, ch) = acc;
            }
        }
    }
    return out;
}

Tensor matmul_impl(const Tensor& a, const Tensor& b, bool parallel) {
    require_rank(a, 2, "matmul lhs");
    require_rank(b, 2, "matmul rhs");
    const int m = a.dim(0), k = a.dim(1);
    if (b.dim(0) != k) {
        throw DimensionError("matmul: inner dims " + std::to_string(k) + " vs " +
                             std::to_string(b.dim(0)));
    }
    const int n = b.dim(1);
    Tensor out({m, n});
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            float acc = 0.0f;
            for (int p = 0; p < k; ++p) {
                acc += a.at(i, p) * b.at(p, j);
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    return matmul_impl(a, b, true);
}

Tensor linear(const Tensor& x, const LinearParams& p) {
    Tensor out = matmul(x, p.w);
    if (has_bias(p.b)) {
        if (p.b.numel() != out.dim(1)) {
            throw DimensionError("linear bias length != d_out");
        }
        const int n = out.dim(0), d = out.dim(1);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) out.at(i, j) += p.b.at(j);
        }
    }
    return out;
}

Tensor softmax_rows(const Tensor& m) {
    require_rank(m, 2, "softmax input");
    const int rows = m.dim(0), cols = m.dim(1);
    // Validate before entering the parallel region; throwing across an omp
    // boundary is not allowed.
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        if (!std::isfinite(m.data[i])) {
            throw NumericError("softmax: non-finite input at row " +
                               std::to_string(i / static_cast<std::size_t>(cols)));
        }
    }
    Tensor out({rows, cols});
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) {
        float mx = m.at(i, 0);
        for (int j = 1; j < cols; ++j) mx = std::max(mx, m.at(i, j));
        float sum = 0.0f;
        for (int j = 0; j < cols; ++j) {
            const float e = std::exp(m.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < cols; ++j) out.at(i, j) /= sum;
    }
    return out;
}

std::vector<float> layer_norm(const std::vector<float>& x,
                              const LayerNormParams& p) {
    const std::size_t d = x.size();
    if (d == 0 || p.gamma.numel() != static_cast<std::int64_t>(d) ||
        p.beta.numel() != static_cast<std::int64_t>(d)) {
        throw DimensionError("layer_norm: gamma/beta length mismatch");
    }
    float mean = 0.0f;
    for (float v : x) mean += v;
    mean /= static_cast<float>(d);
    float var = 0.0f;
    for (float v : x) var += (v - mean) * (v - mean);
    var /= static_cast<float>(d);
    const float inv = 1.0f / std::sqrt(var + p.eps);
    std::vector<float> out(d);
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = (x[i] - mean) * inv * p.gamma.at(static_cast<int>(i)) +
                 p.beta.at(static_cast<int>(i));
    }
    return out;
}

Tensor layer_norm_rows(const Tensor& x, const LayerNormParams& p) {
    const int d = x.shape.back();
    if (p.gamma.numel() != d || p.beta.numel() != d) {
        throw DimensionError("layer_norm: gamma/beta length != channels");
    }
    const std::int64_t rows = x.numel() / d;
    Tensor out(x.shape);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < rows; ++r) {
        const float* in = x.data.data() + r * d;
        float* dst = out.data.data() + r * d;
        float mean = 0.0f;
        for (int i = 0; i < d; ++i) mean += in[i];
        mean /= static_cast<float>(d);
        float var = 0.0f;
        for (int i = 0; i < d; ++i) var += (in[i] - mean) * (in[i] - mean);
        var /= static_cast<float>(d);
        const float inv = 1.0f / std::sqrt(var + p.eps);
        for (int i = 0; i < d; ++i) {
            dst[i] = (in[i] - mean) * inv * p.gamma.at(i) + p.beta.at(i);
        }
    }
    return out;
}

Tensor conv2d(const Tensor& x, const ConvParams& p, int stride, int pad) {
    return conv2d_impl(x, p, stride, pad, true);
}

Tensor depthwise_conv2d(const Tensor& x, const ConvParams& p, int stride,
                        int pad) {
    return depthwise_impl(x, p, stride, pad, true);
}

std::vector<float> global_avg_pool(const Tensor& x) {
    if (x.rank() != 3) throw DimensionError("global_avg_pool expects [H,W,d]");
    const int h = x.dim(0), w = x.dim(1), d = x.dim(2);
    std::vector<float> out(static_cast<std::size_t>(d), 0.0f);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            for (int c = 0; c < d; ++c) out[static_cast<std::size_t>(c)] += x.at(i, j, c);
        }
    }
    const float inv = 1.0f / static_cast<float>(h * w);
    for (float& v : out) v *= inv;
    return out;
}

Tensor se_gate(const Tensor& x, const SeParams& p) {
    if (x.rank() != 3) throw DimensionError("se_gate expects [H,W,d]");
    const int d = x.dim(2);
    if (p.fc1.rank() != 2 || p.fc1.dim(0) != d) {
        throw ConfigError("se_gate: fc1 must map d -> d/r");
    }
    const int dr = p.fc1.dim(1);
    if (dr < 1 || d % dr != 0) {
        throw ConfigError("se_gate: channel count " + std::to_string(d) +
                          " not divisible by reduction width " +
                          std::to_string(dr));
    }
    if (p.fc2.rank() != 2 || p.fc2.dim(0) != dr || p.fc2.dim(1) != d) {
        throw ConfigError("se_gate: fc2 must map d/r -> d");
    }

    const std::vector<float> pooled = global_avg_pool(x);
    Tensor squeezed({1, d}, pooled);
    Tensor mid = matmul(squeezed, p.fc1);
    Tensor logits = matmul(mid, p.fc2);

    std::vector<float> scale(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) {
        scale[static_cast<std::size_t>(c)] =
            p.sigmoid_gate ? sigmoid(logits.at(0, c)) : logits.at(0, c);
    }

    Tensor out(x.shape);
    const int h = x.dim(0), w = x.dim(1);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            for (int c = 0; c < d; ++c) {
                out.at(i, j, c) = x.at(i, j, c) * scale[static_cast<std::size_t>(c)];
            }
        }
    }
    return out;
}

Tensor apply_gelu(Tensor x) {
    for (float& v : x.data) v = gelu(v);
    return x;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("add: shape mismatch " + a.shape_str() + " vs " +
                             b.shape_str());
    }
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        out.data[i] = a.data[i] + b.data[i];
    }
    return out;
}

}  // namespace dsdkit::nn

namespace dsdkit::ref {

// The serial twins call the shared impls with threading disabled.
Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("ref::matmul: shape mismatch");
    }
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            float acc = 0.0f;
            for (int p = 0; p < k; ++p) acc += a.at(i, p) * b.at(p, j);
            out.at(i, j) = acc;
        }
    }
    return out;
}

Tensor conv2d(const Tensor& x, const nn::ConvParams& p, int stride, int pad) {
    const int h = x.dim(0), w = x.dim(1), cin = x.dim(2);
    const int kh = p.w.dim(0), kw = p.w.dim(1), cout = p.w.dim(3);
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (w + 2 * pad - kw) / stride + 1;
    Tensor out({ho, wo, cout});
    for (int oh = 0; oh < ho; ++oh) {
        for (int ow = 0; ow < wo; ++ow) {
            for (int oc = 0; oc < cout; ++oc) {
                float acc = nn::has_bias(p.b) ? p.b.at(oc) : 0.0f;
                for (int ki = 0; ki < kh; ++ki) {
                    const int ih = oh * stride + ki - pad;
                    if (ih < 0 || ih >= h) continue;
                    for (int kj = 0; kj < kw; ++kj) {
                        const int iw = ow * stride + kj - pad;
                        if (iw < 0 || iw >= w) continue;
                        for (int ic = 0; ic < cin; ++ic) {
                            acc += x.at(ih, iw, ic) * p.w.at(ki, kj, ic, oc);
                        }
                    }
                }
                out.at(oh, ow, oc) = acc;
            }
        }
    }
    return out;
}

Tensor depthwise_conv2d(const Tensor& x, const nn::ConvParams& p, int stride,
                        int pad) {
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    const int kh = p.w.dim(0), kw = p.w.dim(1);
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (w + 2 * pad - kw) / stride + 1;
    Tensor out({ho, wo, c});
    for (int oh = 0; oh < ho; ++oh) {
        for (int ow = 0; ow < wo; ++ow) {
            for (int ch = 0; ch < c; ++ch) {
                float acc = nn::has_bias(p.b) ? p.b.at(ch) : 0.0f;
                for (int ki = 0; ki < kh; ++ki) {
                    const int ih = oh * stride + ki - pad;
                    if (ih < 0 || ih >= h) continue;
                    for (int kj = 0; kj < kw; ++kj) {
                        const int iw = ow * stride + kj - pad;
                        if (iw < 0 || iw >= w) continue;
                        acc += x.at(ih, iw, ch) * p.w.at(ki, kj, ch);
                    }
                }
                out.at(oh, ow, ch) = acc;
            }
        }
    }
    return out;
}

}  // namespace dsdkit::ref
