#pragma once

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "dsdkit/errors.hpp"

namespace dsdkit {

// Dense row-major float32 tensor, rank 1..4. The single numeric carrier for
// feature maps, weights and sequences.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<int> shape_, float fill = 0.0f);
    Tensor(std::vector<int> shape_, std::vector<float> data_);

    int rank() const { return static_cast<int>(shape.size()); }
    std::int64_t numel() const;

    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    // Row-major element access; bounds are the caller's responsibility on the
    // hot paths, so these stay unchecked.
    float& at(int i) { return data[static_cast<std::size_t>(i)]; }
    float at(int i) const { return data[static_cast<std::size_t>(i)]; }
    float& at(int i, int j) {
        return data[static_cast<std::size_t>(i) * shape[1] + j];
    }
    float at(int i, int j) const {
        return data[static_cast<std::size_t>(i) * shape[1] + j];
    }
    float& at(int i, int j, int k) {
        return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    float at(int i, int j, int k) const {
        return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    float& at(int i, int j, int k, int l) {
        return data[((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k) *
                        shape[3] +
                    l];
    }
    float at(int i, int j, int k, int l) const {
        return data[((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k) *
                        shape[3] +
                    l];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;
};

// Throws DimensionError unless the shape is rank 1..4 with positive dims.
void validate_shape(const std::vector<int>& shape);

std::int64_t shape_numel(const std::vector<int>& shape);

// Binary tensor file: magic "DSD1", u32 LE rank, rank x u32 LE dims,
// float32 LE payload row-major.
void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);

}  // namespace dsdkit
