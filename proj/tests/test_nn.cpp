#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "dsdkit/nn.hpp"
#include "dsdkit/rng.hpp"

using namespace dsdkit;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, float lo = -1.0f,
                     float hi = 1.0f) {
    Tensor t(std::move(shape));
    for (float& v : t.data) v = rng.uniform_f(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("matmul identity and zero cases") {
    Tensor eye({2, 2}, {1, 0, 0, 1});
    Tensor m({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(nn::matmul(eye, m).data == m.data);

    Tensor zero({2, 2}, 0.0f);
    Tensor z = nn::matmul(zero, m);
    for (float v : z.data) CHECK(v == 0.0f);
}

TEST_CASE("matmul hand arithmetic") {
    Tensor a({2, 2}, {1, 2, 3, 4});
    Tensor b({2, 2}, {5, 6, 7, 8});
    Tensor c = nn::matmul(a, b);
    CHECK(c.at(0, 0) == 19.0f);
    CHECK(c.at(0, 1) == 22.0f);
    CHECK(c.at(1, 0) == 43.0f);
    CHECK(c.at(1, 1) == 50.0f);
}

TEST_CASE("matmul shape mismatch") {
    Tensor a({2, 3}, 1.0f);
    Tensor b({2, 2}, 1.0f);
    CHECK_THROWS_AS(nn::matmul(a, b), DimensionError);
}

TEST_CASE("parallel matmul matches serial reference bitwise") {
    Rng rng(3);
    Tensor a = random_tensor({17, 23}, rng);
    Tensor b = random_tensor({23, 11}, rng);
    CHECK(nn::matmul(a, b).data == ref::matmul(a, b).data);
}

TEST_CASE("softmax symmetry and closed form") {
    Tensor m({1, 3}, {4.2f, 4.2f, 4.2f});
    Tensor s = nn::softmax_rows(m);
    for (float v : s.data) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-6));

    Tensor r({1, 2}, {0.0f, std::log(3.0f)});
    Tensor sr = nn::softmax_rows(r);
    CHECK(sr.at(0, 0) == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(sr.at(0, 1) == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("softmax shift invariance and row sums") {
    Rng rng(4);
    Tensor m = random_tensor({5, 7}, rng, -3.0f, 3.0f);
    Tensor shifted = m;
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 7; ++j) shifted.at(i, j) += 17.0f;
    }
    Tensor a = nn::softmax_rows(m);
    Tensor b = nn::softmax_rows(shifted);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-6));
    }
    for (int i = 0; i < 5; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 7; ++j) {
            CHECK(a.at(i, j) >= 0.0f);
            sum += a.at(i, j);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
}

TEST_CASE("softmax rejects non-finite input") {
    Tensor m({1, 2}, {1.0f, std::numeric_limits<float>::quiet_NaN()});
    CHECK_THROWS_AS(nn::softmax_rows(m), NumericError);
}

TEST_CASE("layer_norm spec cases") {
    nn::LayerNormParams p;
    p.gamma = Tensor({3}, 1.0f);
    p.beta = Tensor({3}, 0.0f);

    // constant vector -> ~0
    auto out = nn::layer_norm({5.0f, 5.0f, 5.0f}, p);
    for (float v : out) CHECK(std::abs(v) < 1e-3f);

    // zero-mean unit-variance stays put up to the epsilon correction
    nn::LayerNormParams p2;
    p2.gamma = Tensor({2}, 1.0f);
    p2.beta = Tensor({2}, 0.0f);
    auto out2 = nn::layer_norm({1.0f, -1.0f}, p2);
    CHECK(out2[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(out2[1] == doctest::Approx(-1.0).epsilon(1e-4));

    // gamma = 0 pins the output at beta
    nn::LayerNormParams p3;
    p3.gamma = Tensor({2}, 0.0f);
    p3.beta = Tensor({2}, 5.0f);
    auto out3 = nn::layer_norm({3.0f, 9.0f}, p3);
    CHECK(out3[0] == 5.0f);
    CHECK(out3[1] == 5.0f);
}

TEST_CASE("conv2d identity kernel reproduces input exactly") {
    Rng rng(5);
    Tensor x = random_tensor({4, 5, 3}, rng);
    nn::ConvParams p;
    p.w = Tensor({1, 1, 3, 3}, 0.0f);
    for (int c = 0; c < 3; ++c) p.w.at(0, 0, c, c) = 1.0f;
    Tensor y = nn::conv2d(x, p, 1, 0);
    CHECK(y.shape == x.shape);
    CHECK(y.data == x.data);
}

TEST_CASE("conv2d zero kernel gives bias") {
    Rng rng(6);
    Tensor x = random_tensor({3, 3, 2}, rng);
    nn::ConvParams p;
    p.w = Tensor({3, 3, 2, 4}, 0.0f);
    p.b = Tensor({4}, {1.0f, 2.0f, 3.0f, 4.0f});
    Tensor y = nn::conv2d(x, p, 1, 1);
    CHECK(y.shape == std::vector<int>{3, 3, 4});
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (int c = 0; c < 4; ++c) {
                CHECK(y.at(i, j, c) == static_cast<float>(c + 1));
            }
        }
    }
}

TEST_CASE("conv2d uniform kernel hand sum") {
    Tensor x({3, 3, 1}, 1.0f);
    nn::ConvParams p;
    p.w = Tensor({3, 3, 1, 1}, 1.0f);
    Tensor y = nn::conv2d(x, p, 1, 0);
    CHECK(y.shape == std::vector<int>{1, 1, 1});
    CHECK(y.at(0, 0, 0) == 9.0f);
}

TEST_CASE("conv2d invalid geometry") {
    Tensor x({2, 2, 1}, 1.0f);
    nn::ConvParams p;
    p.w = Tensor({3, 3, 1, 1}, 1.0f);
    CHECK_THROWS_AS(nn::conv2d(x, p, 1, 0), DimensionError);
    nn::ConvParams mismatched;
    mismatched.w = Tensor({1, 1, 2, 1}, 1.0f);
    CHECK_THROWS_AS(nn::conv2d(x, mismatched, 1, 0), DimensionError);
}

TEST_CASE("conv2d output geometry formula") {
    Rng rng(7);
    Tensor x = random_tensor({9, 7, 2}, rng);
    nn::ConvParams p;
    p.w = random_tensor({3, 3, 2, 5}, rng);
    Tensor y = nn::conv2d(x, p, 2, 1);
    CHECK(y.shape == std::vector<int>{(9 + 2 - 3) / 2 + 1, (7 + 2 - 3) / 2 + 1, 5});
    CHECK(nn::conv2d(x, p, 2, 1).data == ref::conv2d(x, p, 2, 1).data);
}

TEST_CASE("depthwise identity and zero kernels") {
    Rng rng(8);
    Tensor x = random_tensor({4, 4, 3}, rng);
    nn::ConvParams p;
    p.w = Tensor({1, 1, 3}, 1.0f);
    CHECK(nn::depthwise_conv2d(x, p, 1, 0).data == x.data);

    nn::ConvParams z;
    z.w = Tensor({3, 3, 3}, 0.0f);
    Tensor y = nn::depthwise_conv2d(x, z, 1, 1);
    for (float v : y.data) CHECK(v == 0.0f);
}

TEST_CASE("stride-2 uniform depthwise kernel equals 2x2 average pooling") {
    Rng rng(9);
    Tensor x = random_tensor({4, 6, 2}, rng);
    nn::ConvParams p;
    p.w = Tensor({2, 2, 2}, 0.25f);
    Tensor y = nn::depthwise_conv2d(x, p, 2, 0);
    CHECK(y.shape == std::vector<int>{2, 3, 2});
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (int c = 0; c < 2; ++c) {
                const float mean = (x.at(2 * i, 2 * j, c) + x.at(2 * i, 2 * j + 1, c) +
                                    x.at(2 * i + 1, 2 * j, c) +
                                    x.at(2 * i + 1, 2 * j + 1, c)) /
                                   4.0f;
                CHECK(y.at(i, j, c) == doctest::Approx(mean).epsilon(1e-6));
            }
        }
    }
    CHECK(nn::depthwise_conv2d(x, p, 2, 0).data == ref::depthwise_conv2d(x, p, 2, 0).data);
}

TEST_CASE("global_avg_pool cases") {
    Tensor constant({3, 4, 2}, 0.0f);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 4; ++j) {
            constant.at(i, j, 0) = 2.5f;
            constant.at(i, j, 1) = -1.0f;
        }
    }
    auto pooled = nn::global_avg_pool(constant);
    CHECK(pooled[0] == 2.5f);
    CHECK(pooled[1] == -1.0f);

    Tensor m({2, 2, 1}, {1, 2, 3, 4});
    CHECK(nn::global_avg_pool(m)[0] == doctest::Approx(2.5));

    Tensor single({1, 1, 3}, {7, 8, 9});
    auto sp = nn::global_avg_pool(single);
    CHECK(sp == std::vector<float>{7, 8, 9});
}

TEST_CASE("se_gate zero-logit case scales by one half") {
    Rng rng(10);
    Tensor x = random_tensor({2, 2, 4}, rng);
    nn::SeParams p;
    p.fc1 = Tensor({4, 2}, 0.0f);
    p.fc2 = Tensor({2, 4}, 0.0f);
    Tensor y = nn::se_gate(x, p);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        CHECK(y.data[i] == 0.5f * x.data[i]);
    }
}

TEST_CASE("se_gate zero input stays zero") {
    Tensor x({2, 2, 4}, 0.0f);
    Rng rng(11);
    nn::SeParams p;
    p.fc1 = random_tensor({4, 2}, rng);
    p.fc2 = random_tensor({2, 4}, rng);
    Tensor y = nn::se_gate(x, p);
    for (float v : y.data) CHECK(v == 0.0f);
}

TEST_CASE("se_gate hand-computed d=2 gate on a 1x1 map") {
    Tensor x({1, 1, 2}, {2.0f, -1.0f});
    nn::SeParams p;
    p.fc1 = Tensor({2, 1}, {0.5f, 0.25f});
    p.fc2 = Tensor({1, 2}, {0.2f, -0.4f});
    // gap = [2, -1]; mid = 2*0.5 - 1*0.25 = 0.75
    // logits = [0.15, -0.3]; scale = [sigmoid(0.15), sigmoid(-0.3)]
    Tensor y = nn::se_gate(x, p);
    const double s0 = 1.0 / (1.0 + std::exp(-0.15));
    const double s1 = 1.0 / (1.0 + std::exp(0.3));
    CHECK(y.at(0, 0, 0) == doctest::Approx(2.0 * s0).epsilon(1e-6));
    CHECK(y.at(0, 0, 1) == doctest::Approx(-1.0 * s1).epsilon(1e-6));
}

TEST_CASE("se_gate scale stays inside (0,1) for any input") {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = random_tensor({3, 3, 4}, rng, -5.0f, 5.0f);
        nn::SeParams p;
        p.fc1 = random_tensor({4, 2}, rng, -2.0f, 2.0f);
        p.fc2 = random_tensor({2, 4}, rng, -2.0f, 2.0f);
        Tensor y = nn::se_gate(x, p);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            if (x.data[i] == 0.0f) {
                CHECK(y.data[i] == 0.0f);
            } else {
                const float ratio = y.data[i] / x.data[i];
                CHECK(ratio > 0.0f);
                CHECK(ratio < 1.0f);
            }
        }
    }
}

TEST_CASE("se_gate rejects indivisible reduction") {
    Tensor x({1, 1, 3}, 1.0f);
    nn::SeParams p;
    p.fc1 = Tensor({3, 2}, 0.0f);
    p.fc2 = Tensor({2, 3}, 0.0f);
    CHECK_THROWS_AS(nn::se_gate(x, p), ConfigError);
}

TEST_CASE("se_gate without sigmoid applies raw second projection") {
    Tensor x({1, 1, 2}, {1.0f, 1.0f});
    nn::SeParams p;
    p.fc1 = Tensor({2, 1}, {1.0f, 0.0f});
    p.fc2 = Tensor({1, 2}, {2.0f, 0.5f});
    p.sigmoid_gate = false;
    Tensor y = nn::se_gate(x, p);
    CHECK(y.at(0, 0, 0) == 2.0f);
    CHECK(y.at(0, 0, 1) == 0.5f);
}
