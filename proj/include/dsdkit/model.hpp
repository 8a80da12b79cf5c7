#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "dsdkit/attention.hpp"
#include "dsdkit/nn.hpp"
#include "dsdkit/ssm.hpp"
#include "dsdkit/tensor.hpp"

// DSDFormer assembly: stem, four stages of blocks, projection head; plus
// weight allocation, deterministic initialization, parameter counting and the
// weights-directory format.
namespace dsdkit::model {

struct StageConfig {
    int depth = 1;       // blocks in the stage
    int width = 16;      // d (must be even; DSDA splits it in half)
    int heads = 2;       // LSA heads on the d/2 spatial branch
    int kv_stride = 1;   // k for K/V downsampling
    int state_size = 8;  // N
};

struct ModelConfig {
    int input_h = 64;
    int input_w = 64;
    int num_classes = 10;
    std::array<StageConfig, 4> stages{};
    int se_ratio = 4;
    int lffn_expansion = 4;
    int stage_downsample = 2;  // stride of each stage-entry conv
    bool se_sigmoid = true;
    bool gate_silu = false;
};

// 64x64 input, widths 16/32/64/128, depths 1/1/2/1, heads 2/4/8/16,
// kv strides 8/4/2/1.
ModelConfig toy_config(int num_classes = 10);

// Throws ConfigError on invalid geometry (odd widths, indivisible strides...).
void validate_config(const ModelConfig& cfg);

// Spatial side length of stage s in 0..3 (after its entry downsample).
int stage_h(const ModelConfig& cfg, int s);
int stage_w(const ModelConfig& cfg, int s);

struct ScemParams {
    nn::ConvParams conv1, dw, conv2;
    nn::SeParams se;
};

struct MbemParams {
    nn::ConvParams dw;
    nn::SeParams se;
};

struct LffnParams {
    nn::ConvParams conv1, dw, conv2;
};

struct DsdaParams {
    ssm::MdmParams mdm;
    attn::LsaParams lsa;
};

struct BlockParams {
    ScemParams scem;
    nn::LayerNormParams ln1;
    DsdaParams dsda;
    MbemParams mbem;
    nn::LayerNormParams ln2;
    LffnParams lffn;
};

struct StemParams {
    nn::ConvParams conv1, conv2, conv3;
};

struct HeadParams {
    nn::LinearParams fc1, fc2;
};

struct StageParams {
    nn::ConvParams entry;
    std::vector<BlockParams> blocks;
};

struct ModelWeights {
    StemParams stem;
    std::array<StageParams, 4> stages;
    HeadParams head;
};

// Walks every tensor in a fixed order with its component path
// ("stage1.block0.scem.conv1.weight", ...).
using TensorVisitor = std::function<void(const std::string&, Tensor&)>;
using ConstTensorVisitor = std::function<void(const std::string&, const Tensor&)>;
void for_each_tensor(ModelWeights& w, const TensorVisitor& fn);
void for_each_tensor(const ModelWeights& w, const ConstTensorVisitor& fn);

// All tensors allocated at their configured shapes, zero-filled.
ModelWeights allocate_weights(const ModelConfig& cfg);

// Seeded uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] fills; LN gamma=1 beta=0;
// attention score bias starts at zero.
ModelWeights init_weights(const ModelConfig& cfg, std::uint64_t seed);

// Closed-form parameter count; equals the enumerated element total.
std::int64_t count_params(const ModelConfig& cfg);
std::int64_t count_linear(int d_in, int d_out, bool bias = true);
std::int64_t count_conv(int kh, int kw, int c_in, int c_out, bool bias = true);

// Throws ConfigError naming the first offending path if any tensor shape
// disagrees with the configuration.
void validate_weights(const ModelConfig& cfg, const ModelWeights& w);

// Forward-pass pieces. Feature maps are [H, W, d] throughout.
Tensor dsda(const Tensor& x, const DsdaParams& p);
Tensor scem(const Tensor& x, const ScemParams& p);
Tensor mbem(const Tensor& x, const MbemParams& p);
Tensor lffn(const Tensor& x, const LffnParams& p);
Tensor dsdformer_block(const Tensor& x, const BlockParams& p);
Tensor stem(const Tensor& image, const StemParams& p);
std::vector<float> projection_head(const Tensor& x, const HeadParams& p);

// stem -> stages (entry downsample then blocks) -> head -> softmax.
std::vector<float> forward(const Tensor& image, const ModelConfig& cfg,
                           const ModelWeights& w);

// Weights directory: one "DSD1" file per tensor plus manifest.json listing
// paths and shapes.
void save_weights(const ModelWeights& w, const std::string& dir);
ModelWeights load_weights(const ModelConfig& cfg, const std::string& dir);

std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& text);

}  // namespace dsdkit::model
