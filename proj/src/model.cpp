#include "dsdkit/model.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dsdkit/rng.hpp"

namespace dsdkit::model {

namespace fs = std::filesystem;
using nlohmann::json;

ModelConfig toy_config(int num_classes) {
    ModelConfig cfg;
    cfg.input_h = 64;
    cfg.input_w = 64;
    cfg.num_classes = num_classes;
    cfg.stages[0] = {1, 16, 2, 8, 8};
    cfg.stages[1] = {1, 32, 4, 4, 8};
    cfg.stages[2] = {2, 64, 8, 2, 8};
    cfg.stages[3] = {1, 128, 16, 1, 8};
    return cfg;
}

int stage_h(const ModelConfig& cfg, int s) {
    int h = cfg.input_h / 2;  // stem
    for (int i = 0; i <= s; ++i) h /= cfg.stage_downsample;
    return h;
}

int stage_w(const ModelConfig& cfg, int s) {
    int w = cfg.input_w / 2;
    for (int i = 0; i <= s; ++i) w /= cfg.stage_downsample;
    return w;
}

void validate_config(const ModelConfig& cfg) {
    if (cfg.num_classes < 2) throw ConfigError("config: num_classes must be >= 2");
    if (cfg.input_h < 1 || cfg.input_w < 1) {
        throw ConfigError("config: input size must be positive");
    }
    if (cfg.input_h % 2 != 0 || cfg.input_w % 2 != 0) {
        throw ConfigError("config: input size must be even for the stem stride");
    }
    if (cfg.se_ratio < 1) throw ConfigError("config: se_ratio must be >= 1");
    if (cfg.lffn_expansion < 1) throw ConfigError("config: lffn_expansion >= 1");
    if (cfg.stage_downsample < 1) throw ConfigError("config: stage_downsample >= 1");

    int h = cfg.input_h / 2, w = cfg.input_w / 2;
    for (int s = 0; s < 4; ++s) {
        const StageConfig& st = cfg.stages[static_cast<std::size_t>(s)];
        const std::string tag = "stage" + std::to_string(s + 1);
        if (st.depth < 1) throw ConfigError("config: " + tag + " depth must be >= 1");
        if (st.width < 2 || st.width % 2 != 0) {
            throw ConfigError("config: " + tag + " width must be even (DSDA splits channels)");
        }
        const int branch = st.width / 2;
        if (st.heads < 1 || branch % st.heads != 0) {
            throw ConfigError("config: " + tag + " heads must divide width/2");
        }
        if (branch % cfg.se_ratio != 0 || st.width % cfg.se_ratio != 0) {
            throw ConfigError("config: " + tag + " width not divisible by se_ratio");
        }
        if (st.state_size < 1) throw ConfigError("config: " + tag + " state_size >= 1");
        if (h % cfg.stage_downsample != 0 || w % cfg.stage_downsample != 0) {
            throw ConfigError("config: " + tag + " entry stride does not divide resolution");
        }
        h /= cfg.stage_downsample;
        w /= cfg.stage_downsample;
        if (st.kv_stride < 1 || h % st.kv_stride != 0 || w % st.kv_stride != 0) {
            throw ConfigError("config: " + tag + " kv stride " +
                              std::to_string(st.kv_stride) +
                              " does not divide resolution " + std::to_string(h) +
                              "x" + std::to_string(w));
        }
        if (h < 1 || w < 1) throw ConfigError("config: " + tag + " resolution vanished");
    }
}

// ---------------------------------------------------------------------------
// Weight tree traversal
// ---------------------------------------------------------------------------

namespace {

// Single templated walker so the const and non-const visitors cannot drift.
template <typename W, typename Fn>
void walk(W& w, const Fn& fn) {
    auto conv = [&](const std::string& p, auto& c) {
        fn(p + ".weight", c.w);
        fn(p + ".bias", c.b);
    };
    auto lin = [&](const std::string& p, auto& l) {
        fn(p + ".weight", l.w);
        fn(p + ".bias", l.b);
    };
    auto ln = [&](const std::string& p, auto& n) {
        fn(p + ".gamma", n.gamma);
        fn(p + ".beta", n.beta);
    };
    auto se = [&](const std::string& p, auto& s) {
        fn(p + ".fc1", s.fc1);
        fn(p + ".fc2", s.fc2);
    };

    conv("stem.conv1", w.stem.conv1);
    conv("stem.conv2", w.stem.conv2);
    conv("stem.conv3", w.stem.conv3);
    for (std::size_t s = 0; s < 4; ++s) {
        const std::string sp = "stage" + std::to_string(s + 1);
        conv(sp + ".entry", w.stages[s].entry);
        for (std::size_t b = 0; b < w.stages[s].blocks.size(); ++b) {
            const std::string bp = sp + ".block" + std::to_string(b);
            auto& blk = w.stages[s].blocks[b];
            conv(bp + ".scem.conv1", blk.scem.conv1);
            conv(bp + ".scem.dw", blk.scem.dw);
            se(bp + ".scem.se", blk.scem.se);
            conv(bp + ".scem.conv2", blk.scem.conv2);
            ln(bp + ".ln1", blk.ln1);
            lin(bp + ".dsda.mdm.gate", blk.dsda.mdm.gate);
            lin(bp + ".dsda.mdm.in_proj", blk.dsda.mdm.in_proj);
            conv(bp + ".dsda.mdm.dw", blk.dsda.mdm.dw);
            fn(bp + ".dsda.mdm.ssm.log_a", blk.dsda.mdm.ssm.log_a);
            fn(bp + ".dsda.mdm.ssm.b_proj", blk.dsda.mdm.ssm.b_proj);
            fn(bp + ".dsda.mdm.ssm.c_proj", blk.dsda.mdm.ssm.c_proj);
            fn(bp + ".dsda.mdm.ssm.delta_w", blk.dsda.mdm.ssm.delta_w);
            fn(bp + ".dsda.mdm.ssm.delta_b", blk.dsda.mdm.ssm.delta_b);
            fn(bp + ".dsda.mdm.ssm.d_skip", blk.dsda.mdm.ssm.d_skip);
            ln(bp + ".dsda.mdm.ln", blk.dsda.mdm.ln);
            lin(bp + ".dsda.lsa.q", blk.dsda.lsa.q_proj);
            lin(bp + ".dsda.lsa.k", blk.dsda.lsa.k_proj);
            lin(bp + ".dsda.lsa.v", blk.dsda.lsa.v_proj);
            lin(bp + ".dsda.lsa.out", blk.dsda.lsa.out_proj);
            conv(bp + ".dsda.lsa.dw", blk.dsda.lsa.dw);
            fn(bp + ".dsda.lsa.score_bias", blk.dsda.lsa.bias);
            conv(bp + ".mbem.dw", blk.mbem.dw);
            se(bp + ".mbem.se", blk.mbem.se);
            ln(bp + ".ln2", blk.ln2);
            conv(bp + ".lffn.conv1", blk.lffn.conv1);
            conv(bp + ".lffn.dw", blk.lffn.dw);
            conv(bp + ".lffn.conv2", blk.lffn.conv2);
        }
    }
    lin("head.fc1", w.head.fc1);
    lin("head.fc2", w.head.fc2);
}

}  // namespace

void for_each_tensor(ModelWeights& w, const TensorVisitor& fn) { walk(w, fn); }
void for_each_tensor(const ModelWeights& w, const ConstTensorVisitor& fn) {
    walk(w, fn);
}

// ---------------------------------------------------------------------------
// Allocation / initialization
// ---------------------------------------------------------------------------

ModelWeights allocate_weights(const ModelConfig& cfg) {
    validate_config(cfg);
    ModelWeights w;

    auto conv = [](nn::ConvParams& c, int kh, int kw, int cin, int cout) {
        c.w = Tensor({kh, kw, cin, cout});
        c.b = Tensor({cout});
    };
    auto dwconv = [](nn::ConvParams& c, int k, int ch) {
        c.w = Tensor({k, k, ch});
        c.b = Tensor({ch});
    };
    auto lin = [](nn::LinearParams& l, int din, int dout) {
        l.w = Tensor({din, dout});
        l.b = Tensor({dout});
    };
    auto lnorm = [](nn::LayerNormParams& n, int d) {
        n.gamma = Tensor({d});
        n.beta = Tensor({d});
    };
    auto se = [&](nn::SeParams& s, int d) {
        s.fc1 = Tensor({d, d / cfg.se_ratio});
        s.fc2 = Tensor({d / cfg.se_ratio, d});
        s.sigmoid_gate = cfg.se_sigmoid;
    };

    const int d1 = cfg.stages[0].width;
    conv(w.stem.conv1, 3, 3, 3, d1);
    conv(w.stem.conv2, 3, 3, d1, d1);
    conv(w.stem.conv3, 3, 3, d1, d1);

    int prev = d1;
    for (int s = 0; s < 4; ++s) {
        const StageConfig& st = cfg.stages[static_cast<std::size_t>(s)];
        StageParams& sp = w.stages[static_cast<std::size_t>(s)];
        const int d = st.width;
        const int branch = d / 2;
        const int hw = stage_h(cfg, s) * stage_w(cfg, s);
        const int hw_kv = hw / (st.kv_stride * st.kv_stride);
        conv(sp.entry, 3, 3, prev, d);
        prev = d;
        sp.blocks.resize(static_cast<std::size_t>(st.depth));
        for (BlockParams& blk : sp.blocks) {
            conv(blk.scem.conv1, 3, 3, d, d);
            dwconv(blk.scem.dw, 3, d);
            se(blk.scem.se, d);
            conv(blk.scem.conv2, 3, 3, d, d);
            lnorm(blk.ln1, d);

            ssm::MdmParams& mdm = blk.dsda.mdm;
            lin(mdm.gate, branch, branch);
            lin(mdm.in_proj, branch, branch);
            dwconv(mdm.dw, 3, branch);
            mdm.ssm.log_a = Tensor({st.state_size});
            mdm.ssm.b_proj = Tensor({branch, st.state_size});
            mdm.ssm.c_proj = Tensor({branch, st.state_size});
            mdm.ssm.delta_w = Tensor({branch});
            mdm.ssm.delta_b = Tensor({1});
            mdm.ssm.d_skip = Tensor({branch});
            lnorm(mdm.ln, branch);
            mdm.gate_silu = cfg.gate_silu;

            attn::LsaParams& lsa = blk.dsda.lsa;
            lsa.heads = st.heads;
            lsa.kv_stride = st.kv_stride;
            lin(lsa.q_proj, branch, branch);
            lin(lsa.k_proj, branch, branch);
            lin(lsa.v_proj, branch, branch);
            lin(lsa.out_proj, branch, branch);
            dwconv(lsa.dw, st.kv_stride, branch);
            lsa.bias = Tensor({st.heads, hw, hw_kv});

            dwconv(blk.mbem.dw, 3, d);
            se(blk.mbem.se, d);
            lnorm(blk.ln2, d);

            const int inner = d * cfg.lffn_expansion;
            conv(blk.lffn.conv1, 3, 3, d, inner);
            dwconv(blk.lffn.dw, 3, inner);
            conv(blk.lffn.conv2, 3, 3, inner, d);
        }
    }

    const int d4 = cfg.stages[3].width;
    lin(w.head.fc1, d4, d4);
    lin(w.head.fc2, d4, cfg.num_classes);
    return w;
}

namespace {

void fill_uniform(Tensor& t, int fan_in, Rng& rng) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
    for (float& v : t.data) v = rng.uniform_f(-bound, bound);
}

}  // namespace

ModelWeights init_weights(const ModelConfig& cfg, std::uint64_t seed) {
    ModelWeights w = allocate_weights(cfg);
    Rng rng(seed);

    auto conv = [&](nn::ConvParams& c) {
        const int fan = c.w.dim(0) * c.w.dim(1) * (c.w.rank() == 4 ? c.w.dim(2) : 1);
        fill_uniform(c.w, fan, rng);
        fill_uniform(c.b, fan, rng);
    };
    auto lin = [&](nn::LinearParams& l) {
        fill_uniform(l.w, l.w.dim(0), rng);
        fill_uniform(l.b, l.w.dim(0), rng);
    };
    auto lnorm = [](nn::LayerNormParams& n) {
        for (float& v : n.gamma.data) v = 1.0f;
        for (float& v : n.beta.data) v = 0.0f;
    };
    auto se = [&](nn::SeParams& s) {
        fill_uniform(s.fc1, s.fc1.dim(0), rng);
        fill_uniform(s.fc2, s.fc2.dim(0), rng);
    };
    auto ssmp = [&](ssm::SsmParams& p) {
        const int d = p.inner_size(), n = p.state_size();
        // log_a in [-1, 0] keeps a = -exp(log_a) in [-1, -1/e].
        for (float& v : p.log_a.data) v = rng.uniform_f(-1.0f, 0.0f);
        fill_uniform(p.b_proj, d, rng);
        fill_uniform(p.c_proj, d, rng);
        fill_uniform(p.delta_w, d, rng);
        fill_uniform(p.delta_b, d, rng);
        fill_uniform(p.d_skip, 1, rng);
        (void)n;
    };

    conv(w.stem.conv1);
    conv(w.stem.conv2);
    conv(w.stem.conv3);
    for (auto& sp : w.stages) {
        conv(sp.entry);
        for (auto& blk : sp.blocks) {
            conv(blk.scem.conv1);
            conv(blk.scem.dw);
            se(blk.scem.se);
            conv(blk.scem.conv2);
            lnorm(blk.ln1);
            lin(blk.dsda.mdm.gate);
            lin(blk.dsda.mdm.in_proj);
            conv(blk.dsda.mdm.dw);
            ssmp(blk.dsda.mdm.ssm);
            lnorm(blk.dsda.mdm.ln);
            lin(blk.dsda.lsa.q_proj);
            lin(blk.dsda.lsa.k_proj);
            lin(blk.dsda.lsa.v_proj);
            lin(blk.dsda.lsa.out_proj);
            conv(blk.dsda.lsa.dw);
            // Score bias starts flat so attention begins content-driven.
            for (float& v : blk.dsda.lsa.bias.data) v = 0.0f;
            conv(blk.mbem.dw);
            se(blk.mbem.se);
            lnorm(blk.ln2);
            conv(blk.lffn.conv1);
            conv(blk.lffn.dw);
            conv(blk.lffn.conv2);
        }
    }
    lin(w.head.fc1);
    lin(w.head.fc2);
    return w;
}

// ---------------------------------------------------------------------------
// Parameter counting
// ---------------------------------------------------------------------------

std::int64_t count_linear(int d_in, int d_out, bool bias) {
    return static_cast<std::int64_t>(d_in) * d_out + (bias ? d_out : 0);
}

std::int64_t count_conv(int kh, int kw, int c_in, int c_out, bool bias) {
    return static_cast<std::int64_t>(kh) * kw * c_in * c_out + (bias ? c_out : 0);
}

std::int64_t count_params(const ModelConfig& cfg) {
    validate_config(cfg);
    const int d1 = cfg.stages[0].width;
    std::int64_t total = 0;
    total += count_conv(3, 3, 3, d1) + 2 * count_conv(3, 3, d1, d1);

    auto count_dw = [](int k, int c) {
        return static_cast<std::int64_t>(k) * k * c + c;
    };
    auto count_se = [&](int d) {
        const int r = d / cfg.se_ratio;
        return static_cast<std::int64_t>(d) * r + static_cast<std::int64_t>(r) * d;
    };

    int prev = d1;
    for (int s = 0; s < 4; ++s) {
        const StageConfig& st = cfg.stages[static_cast<std::size_t>(s)];
        const int d = st.width, branch = d / 2;
        const std::int64_t hw = static_cast<std::int64_t>(stage_h(cfg, s)) * stage_w(cfg, s);
        const std::int64_t hw_kv = hw / (st.kv_stride * st.kv_stride);
        total += count_conv(3, 3, prev, d);
        prev = d;

        std::int64_t block = 0;
        // SCEM
        block += 2 * count_conv(3, 3, d, d) + count_dw(3, d) + count_se(d);
        // LN x2
        block += 4LL * d;
        // MDM
        block += 2 * count_linear(branch, branch) + count_dw(3, branch);
        block += st.state_size                       // log_a
                 + 2LL * branch * st.state_size      // b_proj, c_proj
                 + branch + 1                        // delta_w, delta_b
                 + branch                            // d_skip
                 + 2LL * branch;                     // ln
        // LSA
        block += 4 * count_linear(branch, branch);
        block += count_dw(st.kv_stride, branch);
        block += static_cast<std::int64_t>(st.heads) * hw * hw_kv;
        // MBEM
        block += count_dw(3, d) + count_se(d);
        // LFFN
        const int inner = d * cfg.lffn_expansion;
        block += count_conv(3, 3, d, inner) + count_dw(3, inner) +
                 count_conv(3, 3, inner, d);

        total += block * st.depth;
    }

    const int d4 = cfg.stages[3].width;
    total += count_linear(d4, d4) + count_linear(d4, cfg.num_classes);
    return total;
}

void validate_weights(const ModelConfig& cfg, const ModelWeights& w) {
    const ModelWeights expected = allocate_weights(cfg);
    std::vector<std::pair<std::string, std::vector<int>>> want;
    for_each_tensor(expected, [&](const std::string& p, const Tensor& t) {
        want.emplace_back(p, t.shape);
    });
    std::size_t i = 0;
    std::string error;
    for_each_tensor(w, [&](const std::string& p, const Tensor& t) {
        if (!error.empty()) return;
        if (i >= want.size()) {
            error = "unexpected extra tensor at " + p;
            return;
        }
        if (want[i].first != p) {
            error = "tensor order mismatch at " + p + " (expected " +
                    want[i].first + ")";
            return;
        }
        if (want[i].second != t.shape) {
            Tensor probe(want[i].second, 0.0f);
            error = "shape mismatch at " + p + ": expected " + probe.shape_str() +
                    ", got " + t.shape_str();
            return;
        }
        ++i;
    });
    if (error.empty() && i != want.size()) {
        error = "missing tensors after " + want[i].first;
    }
    if (!error.empty()) throw ConfigError("weights validation: " + error);
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

Tensor dsda(const Tensor& x, const DsdaParams& p) {
    if (x.rank() != 3) throw DimensionError("dsda expects [H,W,d]");
    const int h = x.dim(0), w = x.dim(1), d = x.dim(2);
    if (d % 2 != 0) throw ConfigError("dsda: channel width must be even");
    const int half = d / 2;

    Tensor x1({h, w, half}), x2({h, w, half});
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            for (int c = 0; c < half; ++c) {
                x1.at(i, j, c) = x.at(i, j, c);
                x2.at(i, j, c) = x.at(i, j, half + c);
            }
        }
    }

    Tensor y1 = ssm::mdm(x1, p.mdm);
    Tensor y2 = attn::lsa(x2, p.lsa);  // [HW, half]

    Tensor out({h, w, d});
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const int row = i * w + j;
            for (int c = 0; c < half; ++c) {
                out.at(i, j, c) = y1.at(i, j, c);
                out.at(i, j, half + c) = y2.at(row, c);
            }
        }
    }
    return out;
}

Tensor scem(const Tensor& x, const ScemParams& p) {
    Tensor t = nn::conv2d(x, p.conv1, 1, 1);
    t = nn::depthwise_conv2d(t, p.dw, 1, 1);
    t = nn::se_gate(t, p.se);
    t = nn::conv2d(t, p.conv2, 1, 1);
    return nn::add(t, x);
}

Tensor mbem(const Tensor& x, const MbemParams& p) {
    Tensor dw = nn::depthwise_conv2d(x, p.dw, 1, 1);
    Tensor se = nn::se_gate(x, p.se);
    return nn::add(nn::add(dw, se), x);
}

Tensor lffn(const Tensor& x, const LffnParams& p) {
    Tensor t = nn::conv2d(x, p.conv1, 1, 1);
    Tensor f = nn::add(nn::depthwise_conv2d(t, p.dw, 1, 1), t);
    return nn::conv2d(f, p.conv2, 1, 1);
}

Tensor dsdformer_block(const Tensor& x, const BlockParams& p) {
    Tensor y = scem(x, p.scem);
    Tensor z = nn::add(dsda(nn::layer_norm_rows(y, p.ln1), p.dsda), mbem(y, p.mbem));
    return nn::add(lffn(nn::layer_norm_rows(z, p.ln2), p.lffn), z);
}

Tensor stem(const Tensor& image, const StemParams& p) {
    Tensor t = nn::apply_gelu(nn::conv2d(image, p.conv1, 2, 1));
    t = nn::apply_gelu(nn::conv2d(t, p.conv2, 1, 1));
    return nn::apply_gelu(nn::conv2d(t, p.conv3, 1, 1));
}

std::vector<float> projection_head(const Tensor& x, const HeadParams& p) {
    if (x.rank() != 3) throw DimensionError("projection_head expects [H,W,d]");
    const int h = x.dim(0), w = x.dim(1), d = x.dim(2);
    Tensor flat({h * w, d}, x.data);
    Tensor mid = nn::linear(flat, p.fc1);
    Tensor mid_spatial({h, w, d}, std::move(mid.data));
    std::vector<float> pooled = nn::global_avg_pool(mid_spatial);
    Tensor pooled_row({1, d}, std::move(pooled));
    Tensor logits = nn::linear(pooled_row, p.fc2);
    return logits.data;
}

std::vector<float> forward(const Tensor& image, const ModelConfig& cfg,
                           const ModelWeights& w) {
    validate_weights(cfg, w);
    if (image.rank() != 3 || image.dim(0) != cfg.input_h ||
        image.dim(1) != cfg.input_w || image.dim(2) != 3) {
        throw DimensionError("forward: image must be [" +
                             std::to_string(cfg.input_h) + "," +
                             std::to_string(cfg.input_w) + ",3], got " +
                             image.shape_str());
    }

    Tensor t = stem(image, w.stem);
    for (int s = 0; s < 4; ++s) {
        const StageParams& sp = w.stages[static_cast<std::size_t>(s)];
        t = nn::apply_gelu(nn::conv2d(t, sp.entry, cfg.stage_downsample, 1));
        for (const BlockParams& blk : sp.blocks) {
            t = dsdformer_block(t, blk);
        }
    }
    std::vector<float> logits = projection_head(t, w.head);
    const int m = static_cast<int>(logits.size());
    Tensor row({1, m}, std::move(logits));
    Tensor probs = nn::softmax_rows(row);
    return probs.data;
}

// ---------------------------------------------------------------------------
// Weights directory + config JSON
// ---------------------------------------------------------------------------

void save_weights(const ModelWeights& w, const std::string& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "DSD1";
    manifest["tensors"] = json::array();
    for_each_tensor(w, [&](const std::string& path, const Tensor& t) {
        const std::string file = path + ".dsd";
        save_tensor(t, (fs::path(dir) / file).string());
        manifest["tensors"].push_back({{"path", path},
                                       {"shape", t.shape},
                                       {"file", file}});
    });
    std::ofstream os(fs::path(dir) / "manifest.json");
    os << manifest.dump(2) << "\n";
}

ModelWeights load_weights(const ModelConfig& cfg, const std::string& dir) {
    std::ifstream is(fs::path(dir) / "manifest.json");
    if (!is) throw ParseError("missing manifest.json in " + dir);
    json manifest = json::parse(is, nullptr, /*allow_exceptions=*/true);

    std::map<std::string, std::string> files;
    for (const auto& entry : manifest.at("tensors")) {
        files[entry.at("path").get<std::string>()] =
            entry.at("file").get<std::string>();
    }

    ModelWeights w = allocate_weights(cfg);
    std::string error;
    for_each_tensor(w, [&](const std::string& path, Tensor& t) {
        if (!error.empty()) return;
        auto it = files.find(path);
        if (it == files.end()) {
            error = "manifest missing tensor " + path;
            return;
        }
        Tensor loaded = load_tensor((fs::path(dir) / it->second).string());
        if (loaded.shape != t.shape) {
            error = "shape mismatch at " + path + ": expected " + t.shape_str() +
                    ", got " + loaded.shape_str();
            return;
        }
        t = std::move(loaded);
    });
    if (!error.empty()) throw ConfigError("weights load: " + error);
    validate_weights(cfg, w);
    return w;
}

std::string config_to_json(const ModelConfig& cfg) {
    json j;
    j["input_h"] = cfg.input_h;
    j["input_w"] = cfg.input_w;
    j["num_classes"] = cfg.num_classes;
    j["se_ratio"] = cfg.se_ratio;
    j["lffn_expansion"] = cfg.lffn_expansion;
    j["stage_downsample"] = cfg.stage_downsample;
    j["se_sigmoid"] = cfg.se_sigmoid;
    j["gate_silu"] = cfg.gate_silu;
    j["stages"] = json::array();
    for (const StageConfig& st : cfg.stages) {
        j["stages"].push_back({{"depth", st.depth},
                               {"width", st.width},
                               {"heads", st.heads},
                               {"kv_stride", st.kv_stride},
                               {"state_size", st.state_size}});
    }
    return j.dump(2) + "\n";
}

ModelConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config JSON: ") + e.what());
    }
    try {
        ModelConfig cfg;
        cfg.input_h = j.at("input_h").get<int>();
        cfg.input_w = j.at("input_w").get<int>();
        cfg.num_classes = j.at("num_classes").get<int>();
        cfg.se_ratio = j.value("se_ratio", cfg.se_ratio);
        cfg.lffn_expansion = j.value("lffn_expansion", cfg.lffn_expansion);
        cfg.stage_downsample = j.value("stage_downsample", cfg.stage_downsample);
        cfg.se_sigmoid = j.value("se_sigmoid", cfg.se_sigmoid);
        cfg.gate_silu = j.value("gate_silu", cfg.gate_silu);
        const auto& stages = j.at("stages");
        if (stages.size() != 4) throw ConfigError("config: exactly 4 stages required");
        for (std::size_t s = 0; s < 4; ++s) {
            StageConfig& st = cfg.stages[s];
            st.depth = stages[s].at("depth").get<int>();
            st.width = stages[s].at("width").get<int>();
            st.heads = stages[s].at("heads").get<int>();
            st.kv_stride = stages[s].at("kv_stride").get<int>();
            st.state_size = stages[s].at("state_size").get<int>();
        }
        validate_config(cfg);
        return cfg;
    } catch (const json::exception& e) {
        throw ParseError(std::string("config JSON: ") + e.what());
    }
}

}  // namespace dsdkit::model
