#include "graspinf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graspinf {

std::string to_string(const Shape3& s) {
    return "(" + std::to_string(s.c) + "," + std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

GridTensor::GridTensor(Shape3 shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

GridTensor::GridTensor(Shape3 shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
        throw std::invalid_argument("GridTensor: data length " + std::to_string(data_.size()) +
                                    " does not match shape " + to_string(shape_));
    }
}

GridTensor GridTensor::from_vector(std::span<const double> values) {
    return GridTensor(Shape3{static_cast<int>(values.size()), 1, 1},
                      std::vector<double>(values.begin(), values.end()));
}

void GridTensor::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

void GridTensor::reshape_to(Shape3 shape) {
    shape_ = shape;
    data_.assign(shape.size(), 0.0);
}

bool GridTensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ParamVector::ParamVector(std::string name, std::vector<int> dims) : name_(std::move(name)), dims_(std::move(dims)) {
    std::size_t n = 1;
    for (int d : dims_) {
        if (d <= 0) throw std::invalid_argument("ParamVector " + name_ + ": non-positive dimension");
        n *= static_cast<std::size_t>(d);
    }
    values_.assign(n, 0.0);
}

}  // namespace graspinf
