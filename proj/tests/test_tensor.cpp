#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dsdkit/rng.hpp"
#include "dsdkit/tensor.hpp"

using namespace dsdkit;
namespace fs = std::filesystem;

TEST_CASE("shape validation") {
    CHECK_NOTHROW(Tensor({3}));
    CHECK_NOTHROW(Tensor({2, 3, 4, 5}));
    CHECK_THROWS_AS(Tensor(std::vector<int>{}), DimensionError);
    CHECK_THROWS_AS(Tensor({1, 2, 3, 4, 5}), DimensionError);
    CHECK_THROWS_AS(Tensor({3, 0}), DimensionError);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>{1.0f}), DimensionError);
}

TEST_CASE("row-major accessors") {
    Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
    CHECK(t.at(0, 2) == 2.0f);
    CHECK(t.at(1, 0) == 3.0f);
    Tensor u({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(u.at(1, 0, 1) == 5.0f);
    CHECK(u.numel() == 8);
}

TEST_CASE("DSD1 file round trip, ranks 1-4") {
    const fs::path dir = fs::temp_directory_path() / "dsdkit-test-tensor";
    fs::create_directories(dir);
    Rng rng(1);
    for (const auto& shape :
         std::vector<std::vector<int>>{{5}, {4, 3}, {2, 5, 3}, {3, 2, 2, 4}}) {
        Tensor t(shape);
        for (float& v : t.data) v = rng.uniform_f(-10.0f, 10.0f);
        const std::string path = (dir / "t.dsd").string();
        save_tensor(t, path);
        Tensor back = load_tensor(path);
        CHECK(back.shape == t.shape);
        CHECK(back.data == t.data);  // bit-exact
    }
}

TEST_CASE("DSD1 header layout is little-endian with magic") {
    const fs::path dir = fs::temp_directory_path() / "dsdkit-test-tensor";
    fs::create_directories(dir);
    const std::string path = (dir / "hdr.dsd").string();
    save_tensor(Tensor({2, 258}, 0.0f), path);
    std::ifstream is(path, std::ios::binary);
    unsigned char buf[16];
    is.read(reinterpret_cast<char*>(buf), 16);
    CHECK(buf[0] == 'D');
    CHECK(buf[3] == '1');
    CHECK(buf[4] == 2);   // rank, LE
    CHECK(buf[8] == 2);   // dim0
    CHECK(buf[12] == 2);  // dim1 = 258 = 0x102
    CHECK(buf[13] == 1);
}

TEST_CASE("corrupt tensor files are rejected") {
    const fs::path dir = fs::temp_directory_path() / "dsdkit-test-tensor";
    fs::create_directories(dir);
    const std::string path = (dir / "bad.dsd").string();
    {
        std::ofstream os(path, std::ios::binary);
        os << "NOPE";
    }
    CHECK_THROWS_AS(load_tensor(path), ParseError);
    {
        std::ofstream os(path, std::ios::binary);
        os << "DSD1";  // truncated header
    }
    CHECK_THROWS_AS(load_tensor(path), ParseError);
    CHECK_THROWS_AS(load_tensor((dir / "missing.dsd").string()), ParseError);
}
