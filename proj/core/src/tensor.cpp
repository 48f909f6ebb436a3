#include "oodkit/tensor.hpp"

#include <numeric>
#include <string>

namespace oodkit {

std::size_t shape_product(std::span<const std::uint32_t> shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

static void check_shape(std::span<const std::uint32_t> shape) {
    if (shape.empty())
        throw InvalidInput("tensor shape must have rank >= 1");
    for (auto d : shape)
        if (d == 0)
            throw InvalidInput("tensor dimensions must all be >= 1");
}

Tensor::Tensor(std::vector<std::uint32_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_product(shape_))
        throw InvalidInput("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape product " +
                           std::to_string(shape_product(shape_)));
}

Tensor Tensor::zeros(std::vector<std::uint32_t> shape) {
    check_shape(shape);
    std::vector<float> data(shape_product(shape), 0.0f);
    return Tensor(std::move(shape), std::move(data));
}

std::span<const float> Tensor::row(std::size_t i) const {
    if (rank() != 2)
        throw InvalidInput("row() requires a rank-2 tensor");
    const std::size_t cols = shape_[1];
    return {data_.data() + i * cols, cols};
}

std::size_t Tensor::outer_size() const {
    std::size_t n = 1;
    for (std::size_t i = 0; i + 1 < shape_.size(); ++i) n *= shape_[i];
    return n;
}

LabelVector::LabelVector(std::vector<std::uint32_t> shape, std::vector<std::uint8_t> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    check_shape(shape_);
    if (values_.size() != shape_product(shape_))
        throw InvalidInput("label data length does not match shape product");
    for (auto v : values_)
        if (v > 1)
            throw InvalidInput("label values must be 0 or 1, got " + std::to_string(v));
}

}  // namespace oodkit
