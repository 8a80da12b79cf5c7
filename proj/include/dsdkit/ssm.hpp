#pragma once

#include <array>
#include <vector>

#include "dsdkit/nn.hpp"
#include "dsdkit/tensor.hpp"

// State-space-model core: ZOH discretization, the step-by-step recurrence that
// serves as the scan oracle, the input-dependent selective scan, the
// four-direction flattening of 2-D feature maps, and the gated
// multi-direction branch built on all of it.
namespace dsdkit::ssm {

// Input-dependent SSM parameters for one branch of width d_inner.
// The continuous diagonal A is stored as log_a and materialized as
// a = -exp(log_a), which keeps every entry strictly negative.
struct SsmParams {
    Tensor log_a;      // [N]
    Tensor b_proj;     // [d_inner, N]: per-token B = x_t . b_proj
    Tensor c_proj;     // [d_inner, N]: per-token C = x_t . c_proj
    Tensor delta_w;    // [d_inner]: per-token delta = softplus(x_t . delta_w + delta_b)
    Tensor delta_b;    // [1]
    Tensor d_skip;     // [d_inner]
    bool exact_bbar = false;  // use the exact ZOH integral for b_bar

    int state_size() const { return static_cast<int>(log_a.numel()); }
    int inner_size() const { return static_cast<int>(d_skip.numel()); }
    std::vector<float> a_diag() const;
};

// a_bar = exp(delta * a); b_bar = delta * b, or the exact integral
// (exp(delta*a) - 1) / a * b when exact is set. delta must be positive.
void discretize_zoh(const std::vector<float>& a_diag,
                    const std::vector<float>& b, float delta,
                    std::vector<float>& a_bar, std::vector<float>& b_bar,
                    bool exact = false);

// Fully materialized per-step parameters for one scalar channel.
struct ScanSteps {
    int len = 0;
    int state = 0;
    std::vector<float> a_bar;  // [len * state]
    std::vector<float> b_bar;  // [len * state]
    std::vector<float> c;      // [len * state]
    std::vector<float> d;      // [len]
};

// h_k = a_bar_k (.) h_{k-1} + b_bar_k x_k;  y_k = c_k . h_k + d_k x_k, h_0 = 0.
// Evaluated literally, one step at a time. This is the correctness oracle the
// selective scan is tested against.
std::vector<float> ssm_recurrence_oracle(const std::vector<float>& x,
                                         const ScanSteps& steps);

// x [L, d_inner] -> y [L, d_inner]. Per-token delta/B/C come from the
// projections in params; each channel runs the discrete recurrence with the
// shared per-token (a_bar, b_bar). Linear in L.
Tensor selective_scan(const Tensor& x, const SsmParams& params);

namespace ref {
// Serial selective scan, no threading pragmas; same arithmetic.
Tensor selective_scan(const Tensor& x, const SsmParams& params);
}  // namespace ref

enum class Direction { kRowFwd = 0, kRowRev = 1, kColFwd = 2, kColRev = 3 };

// Four traversal orders of an H x W grid. order[s] is the flat row-major cell
// visited at sequence position s; inverse[cell] recovers the position.
struct DirectionalSequences {
    int h = 0;
    int w = 0;
    std::array<std::vector<int>, 4> order;
    std::array<std::vector<int>, 4> inverse;
};

DirectionalSequences multi_direction_flatten(int h, int w);

// Gather the [H,W,c] map into an [HW,c] sequence along one direction, and
// scatter back.
Tensor gather_direction(const Tensor& x, const DirectionalSequences& dirs,
                        Direction d);
Tensor scatter_direction(const Tensor& seq, const DirectionalSequences& dirs,
                         Direction d);

// Scan along all four directions with shared params, un-permute each result
// and average. Shape preserved.
Tensor vssm(const Tensor& x, const SsmParams& params);

struct MdmParams {
    nn::LinearParams gate;       // gate branch L(X)
    nn::LinearParams in_proj;    // scan branch L(X)
    nn::ConvParams dw;           // depthwise 3x3, stride 1, same padding
    SsmParams ssm;
    nn::LayerNormParams ln;
    bool gate_silu = false;      // optional activation on the gate branch
};

// MDM(X) = L(X) (.) LN(VSSM(DW(L(X)))), on an [H, W, c] map.
Tensor mdm(const Tensor& x, const MdmParams& params);

}  // namespace dsdkit::ssm
