#include "dsdkit/ssm.hpp"

#include <cmath>

namespace dsdkit::ssm {

std::vector<float> SsmParams::a_diag() const {
    std::vector<float> a(static_cast<std::size_t>(log_a.numel()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = -std::exp(log_a.data[i]);
    }
    return a;
}

void discretize_zoh(const std::vector<float>& a_diag,
                    const std::vector<float>& b, float delta,
                    std::vector<float>& a_bar, std::vector<float>& b_bar,
                    bool exact) {
    if (!(delta > 0.0f)) {
        throw std::domain_error("discretize_zoh: delta must be positive, got " +
                                std::to_string(delta));
    }
    if (a_diag.size() != b.size()) {
        throw DimensionError("discretize_zoh: |a| != |b|");
    }
    const std::size_t n = a_diag.size();
    a_bar.resize(n);
    b_bar.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float ad = std::exp(delta * a_diag[i]);
        a_bar[i] = ad;
        if (exact) {
            // (e^{dA} - I) A^{-1} B for diagonal A.
            b_bar[i] = (ad - 1.0f) / a_diag[i] * b[i];
        } else {
            b_bar[i] = delta * b[i];
        }
    }
}

std::vector<float> ssm_recurrence_oracle(const std::vector<float>& x,
                                         const ScanSteps& steps) {
    const int len = steps.len, n = steps.state;
    if (static_cast<int>(x.size()) != len ||
        static_cast<int>(steps.a_bar.size()) != len * n ||
        static_cast<int>(steps.b_bar.size()) != len * n ||
        static_cast<int>(steps.c.size()) != len * n ||
        static_cast<int>(steps.d.size()) != len) {
        throw DimensionError("ssm_recurrence_oracle: inconsistent step arrays");
    }
    std::vector<float> h(static_cast<std::size_t>(n), 0.0f);
    std::vector<float> y(static_cast<std::size_t>(len), 0.0f);
    for (int k = 0; k < len; ++k) {
        const float* ab = steps.a_bar.data() + static_cast<std::size_t>(k) * n;
        const float* bb = steps.b_bar.data() + static_cast<std::size_t>(k) * n;
        const float* c = steps.c.data() + static_cast<std::size_t>(k) * n;
        float acc = 0.0f;
        for (int i = 0; i < n; ++i) {
            h[static_cast<std::size_t>(i)] =
                ab[i] * h[static_cast<std::size_t>(i)] + bb[i] * x[static_cast<std::size_t>(k)];
            acc += c[i] * h[static_cast<std::size_t>(i)];
        }
        y[static_cast<std::size_t>(k)] =
            acc + steps.d[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
    }
    return y;
}

namespace {

// Precomputes the channel-independent per-token pieces: delta, a_bar, b_bar
// and C rows. Throws NumericError on non-finite projections.
struct TokenParams {
    int len = 0;
    int n = 0;
    std::vector<float> a_bar;  // [len * n]
    std::vector<float> b_bar;  // [len * n]
    std::vector<float> c;      // [len * n]
};

TokenParams project_tokens(const Tensor& x, const SsmParams& params) {
    if (x.rank() != 2) throw DimensionError("selective_scan expects [L, d]");
    const int len = x.dim(0), d = x.dim(1);
    const int n = params.state_size();
    if (params.inner_size() != d || params.b_proj.dim(0) != d ||
        params.c_proj.dim(0) != d || params.b_proj.dim(1) != n ||
        params.c_proj.dim(1) != n ||
        static_cast<int>(params.delta_w.numel()) != d ||
        params.delta_b.numel() != 1) {
        throw DimensionError("selective_scan: parameter widths do not match input");
    }

    const std::vector<float> a = params.a_diag();
    TokenParams tp;
    tp.len = len;
    tp.n = n;
    tp.a_bar.resize(static_cast<std::size_t>(len) * n);
    tp.b_bar.resize(static_cast<std::size_t>(len) * n);
    tp.c.resize(static_cast<std::size_t>(len) * n);

    for (int t = 0; t < len; ++t) {
        float dacc = params.delta_b.at(0);
        for (int j = 0; j < d; ++j) dacc += x.at(t, j) * params.delta_w.at(j);
        const float delta = nn::softplus(dacc);

        float* ab = tp.a_bar.data() + static_cast<std::size_t>(t) * n;
        float* bb = tp.b_bar.data() + static_cast<std::size_t>(t) * n;
        float* cc = tp.c.data() + static_cast<std::size_t>(t) * n;
        for (int i = 0; i < n; ++i) {
            float bi = 0.0f, ci = 0.0f;
            for (int j = 0; j < d; ++j) {
                bi += x.at(t, j) * params.b_proj.at(j, i);
                ci += x.at(t, j) * params.c_proj.at(j, i);
            }
            const float abar = std::exp(delta * a[static_cast<std::size_t>(i)]);
            const float bbar = params.exact_bbar
                                   ? (abar - 1.0f) / a[static_cast<std::size_t>(i)] * bi
                                   : delta * bi;
            if (!std::isfinite(delta) || !std::isfinite(bbar) || !std::isfinite(ci)) {
                throw NumericError("selective_scan: non-finite projection at token " +
                                   std::to_string(t));
            }
            ab[i] = abar;
            bb[i] = bbar;
            cc[i] = ci;
        }
    }
    return tp;
}

Tensor scan_channels(const Tensor& x, const SsmParams& params,
                     const TokenParams& tp, bool parallel) {
    const int len = tp.len, n = tp.n, d = x.dim(1);
    Tensor y({len, d});
#pragma omp parallel for schedule(static) if (parallel)
    for (int ch = 0; ch < d; ++ch) {
        std::vector<float> h(static_cast<std::size_t>(n), 0.0f);
        for (int t = 0; t < len; ++t) {
            const float xv = x.at(t, ch);
            const float* ab = tp.a_bar.data() + static_cast<std::size_t>(t) * n;
            const float* bb = tp.b_bar.data() + static_cast<std::size_t>(t) * n;
            const float* cc = tp.c.data() + static_cast<std::size_t>(t) * n;
            float acc = 0.0f;
            for (int i = 0; i < n; ++i) {
                h[static_cast<std::size_t>(i)] =
                    ab[i] * h[static_cast<std::size_t>(i)] + bb[i] * xv;
                acc += cc[i] * h[static_cast<std::size_t>(i)];
            }
            y.at(t, ch) = acc + params.d_skip.at(ch) * xv;
        }
    }
    return y;
}

}  // namespace

Tensor selective_scan(const Tensor& x, const SsmParams& params) {
    const TokenParams tp = project_tokens(x, params);
    return scan_channels(x, params, tp, true);
}

namespace ref {
Tensor selective_scan(const Tensor& x, const SsmParams& params) {
    const TokenParams tp = project_tokens(x, params);
    return scan_channels(x, params, tp, false);
}
}  // namespace ref

DirectionalSequences multi_direction_flatten(int h, int w) {
    if (h < 1 || w < 1) throw DimensionError("multi_direction_flatten: H,W >= 1");
    DirectionalSequences dirs;
    dirs.h = h;
    dirs.w = w;
    const int hw = h * w;
    for (auto& o : dirs.order) o.resize(static_cast<std::size_t>(hw));
    auto& row_fwd = dirs.order[0];
    auto& row_rev = dirs.order[1];
    auto& col_fwd = dirs.order[2];
    auto& col_rev = dirs.order[3];
    int s = 0;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j, ++s) row_fwd[static_cast<std::size_t>(s)] = i * w + j;
    }
    s = 0;
    for (int j = 0; j < w; ++j) {
        for (int i = 0; i < h; ++i, ++s) col_fwd[static_cast<std::size_t>(s)] = i * w + j;
    }
    for (int k = 0; k < hw; ++k) {
        row_rev[static_cast<std::size_t>(k)] = row_fwd[static_cast<std::size_t>(hw - 1 - k)];
        col_rev[static_cast<std::size_t>(k)] = col_fwd[static_cast<std::size_t>(hw - 1 - k)];
    }
    for (int dir = 0; dir < 4; ++dir) {
        auto& inv = dirs.inverse[static_cast<std::size_t>(dir)];
        inv.assign(static_cast<std::size_t>(hw), 0);
        for (int k = 0; k < hw; ++k) {
            inv[static_cast<std::size_t>(dirs.order[static_cast<std::size_t>(dir)][static_cast<std::size_t>(k)])] = k;
        }
    }
    return dirs;
}

Tensor gather_direction(const Tensor& x, const DirectionalSequences& dirs,
                        Direction d) {
    if (x.rank() != 3 || x.dim(0) != dirs.h || x.dim(1) != dirs.w) {
        throw DimensionError("gather_direction: map/geometry mismatch");
    }
    const int hw = dirs.h * dirs.w, c = x.dim(2);
    const auto& order = dirs.order[static_cast<std::size_t>(d)];
    Tensor seq({hw, c});
    for (int s = 0; s < hw; ++s) {
        const int cell = order[static_cast<std::size_t>(s)];
        for (int ch = 0; ch < c; ++ch) {
            seq.at(s, ch) = x.data[static_cast<std::size_t>(cell) * c + ch];
        }
    }
    return seq;
}

Tensor scatter_direction(const Tensor& seq, const DirectionalSequences& dirs,
                         Direction d) {
    const int hw = dirs.h * dirs.w;
    if (seq.rank() != 2 || seq.dim(0) != hw) {
        throw DimensionError("scatter_direction: sequence/geometry mismatch");
    }
    const int c = seq.dim(1);
    const auto& order = dirs.order[static_cast<std::size_t>(d)];
    Tensor out({dirs.h, dirs.w, c});
    for (int s = 0; s < hw; ++s) {
        const int cell = order[static_cast<std::size_t>(s)];
        for (int ch = 0; ch < c; ++ch) {
            out.data[static_cast<std::size_t>(cell) * c + ch] = seq.at(s, ch);
        }
    }
    return out;
}

Tensor vssm(const Tensor& x, const SsmParams& params) {
    if (x.rank() != 3) throw DimensionError("vssm expects [H,W,c]");
    const DirectionalSequences dirs = multi_direction_flatten(x.dim(0), x.dim(1));
    Tensor acc(x.shape, 0.0f);
    // The four directional scans are independent; the scan itself already
    // parallelizes over channels, so they run here in a fixed order.
    for (int d = 0; d < 4; ++d) {
        const auto dir = static_cast<Direction>(d);
        Tensor seq = gather_direction(x, dirs, dir);
        Tensor scanned = selective_scan(seq, params);
        Tensor back = scatter_direction(scanned, dirs, dir);
        for (std::size_t i = 0; i < acc.data.size(); ++i) {
            acc.data[i] += back.data[i];
        }
    }
    for (float& v : acc.data) v *= 0.25f;
    return acc;
}

Tensor mdm(const Tensor& x, const MdmParams& params) {
    if (x.rank() != 3) throw DimensionError("mdm expects [H,W,c]");
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    Tensor flat({h * w, c}, x.data);

    Tensor gate = nn::linear(flat, params.gate);
    if (params.gate_silu) {
        for (float& v : gate.data) v = nn::silu(v);
    }

    Tensor s = nn::linear(flat, params.in_proj);
    Tensor s_spatial({h, w, c}, std::move(s.data));
    const int pad = (params.dw.w.dim(0) - 1) / 2;  // same-geometry for odd kernels
    Tensor dw = nn::depthwise_conv2d(s_spatial, params.dw, /*stride=*/1, pad);
    Tensor v = vssm(dw, params.ssm);
    Tensor v_norm = nn::layer_norm_rows(v, params.ln);

    Tensor out({h, w, c});
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = gate.data[i] * v_norm.data[i];
    }
    return out;
}

}  // namespace dsdkit::ssm
