#include "dsdkit/tensor.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dsdkit {

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

void validate_shape(const std::vector<int>& shape) {
    if (shape.empty() || shape.size() > 4) {
        throw DimensionError("tensor rank must be 1..4, got " +
                             std::to_string(shape.size()));
    }
    for (int d : shape) {
        if (d < 1) {
            throw DimensionError("tensor dims must be >= 1, got " +
                                 std::to_string(d));
        }
    }
}

Tensor::Tensor(std::vector<int> shape_, float fill) : shape(std::move(shape_)) {
    validate_shape(shape);
    data.assign(static_cast<std::size_t>(shape_numel(shape)), fill);
}

Tensor::Tensor(std::vector<int> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    validate_shape(shape);
    if (static_cast<std::int64_t>(data.size()) != shape_numel(shape)) {
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str());
    }
}

std::int64_t Tensor::numel() const { return shape_numel(shape); }

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace {

constexpr char kMagic[4] = {'D', 'S', 'D', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_tensor(const Tensor& t, const std::string& path) {
    validate_shape(t.shape);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open for writing: " + path);
    os.write(kMagic, 4);
    write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape) write_u32(os, static_cast<std::uint32_t>(d));
    // float32 little-endian payload; this targets little-endian hosts, which
    // lets the payload go out as one block.
    static_assert(sizeof(float) == 4);
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * 4));
    if (!os) throw ParseError("short write: " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw ParseError("bad magic in tensor file: " + path);
    }
    std::uint32_t rank = read_u32(is);
    if (!is || rank < 1 || rank > 4) {
        throw ParseError("bad rank in tensor file: " + path);
    }
    std::vector<int> shape;
    for (std::uint32_t i = 0; i < rank; ++i) {
        std::uint32_t d = read_u32(is);
        if (!is || d < 1 || d > (1u << 30)) {
            throw ParseError("bad dim in tensor file: " + path);
        }
        shape.push_back(static_cast<int>(d));
    }
    std::int64_t n = shape_numel(shape);
    std::vector<float> data(static_cast<std::size_t>(n));
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(n * 4));
    if (!is) throw ParseError("truncated tensor payload: " + path);
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace dsdkit
