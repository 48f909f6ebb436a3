#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oodkit/errors.hpp"

namespace oodkit {

/// Dense row-major float tensor. Immutable by convention once filled:
/// every operation in the library returns a fresh tensor.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::uint32_t> shape, std::vector<float> data);

    static Tensor zeros(std::vector<std::uint32_t> shape);

    const std::vector<std::uint32_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }
    float operator[](std::size_t i) const { return data_[i]; }
    float& operator[](std::size_t i) { return data_[i]; }

    /// Row i of a rank-2 tensor.
    std::span<const float> row(std::size_t i) const;

    /// Product of all dims except the last (number of "rows" when the last
    /// dim is the class/channel axis).
    std::size_t outer_size() const;

    bool operator==(const Tensor& other) const = default;

private:
    std::vector<std::uint32_t> shape_;
    std::vector<float> data_;
};

/// Binary label tensor: 0 = in-distribution, 1 = anomalous.
class LabelVector {
public:
    LabelVector() = default;
    LabelVector(std::vector<std::uint32_t> shape, std::vector<std::uint8_t> values);

    const std::vector<std::uint32_t>& shape() const { return shape_; }
    std::size_t size() const { return values_.size(); }
    std::span<const std::uint8_t> values() const { return values_; }
    std::uint8_t operator[](std::size_t i) const { return values_[i]; }

    bool operator==(const LabelVector& other) const = default;

private:
    std::vector<std::uint32_t> shape_;
    std::vector<std::uint8_t> values_;
};

std::size_t shape_product(std::span<const std::uint32_t> shape);

}  // namespace oodkit
