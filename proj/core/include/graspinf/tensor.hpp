#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace graspinf {

/// (channels, height, width). Vectors are represented as (n, 1, 1).
struct Shape3 {
    int c = 0;
    int h = 0;
    int w = 0;

    [[nodiscard]] std::size_t size() const noexcept {
        return static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }
    [[nodiscard]] bool is_vector() const noexcept { return h == 1 && w == 1; }
    friend bool operator==(const Shape3&, const Shape3&) = default;
};

std::string to_string(const Shape3& s);

/// Dense channel-major, row-major-within-channel grid of doubles.
class GridTensor {
public:
    GridTensor() = default;
    explicit GridTensor(Shape3 shape, double fill = 0.0);
    GridTensor(Shape3 shape, std::vector<double> data);

    /// Vector tensor of shape (values.size(), 1, 1).
    static GridTensor from_vector(std::span<const double> values);

    [[nodiscard]] const Shape3& shape() const noexcept { return shape_; }
    [[nodiscard]] int channels() const noexcept { return shape_.c; }
    [[nodiscard]] int height() const noexcept { return shape_.h; }
    [[nodiscard]] int width() const noexcept { return shape_.w; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    [[nodiscard]] double& at(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
    [[nodiscard]] double at(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }
    [[nodiscard]] double& operator[](std::size_t i) noexcept { return data_[i]; }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return data_[i]; }

    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::span<double> channel(int c) noexcept {
        return std::span<double>(data_).subspan(static_cast<std::size_t>(c) * plane(), plane());
    }
    [[nodiscard]] std::span<const double> channel(int c) const noexcept {
        return std::span<const double>(data_).subspan(static_cast<std::size_t>(c) * plane(), plane());
    }

    void fill(double v) noexcept;
    void reshape_to(Shape3 shape);  ///< resizes storage, contents zeroed
    [[nodiscard]] bool all_finite() const noexcept;

    friend bool operator==(const GridTensor&, const GridTensor&) = default;

private:
    [[nodiscard]] std::size_t plane() const noexcept {
        return static_cast<std::size_t>(shape_.h) * static_cast<std::size_t>(shape_.w);
    }
    [[nodiscard]] std::size_t index(int c, int y, int x) const noexcept {
        return (static_cast<std::size_t>(c) * shape_.h + y) * shape_.w + x;
    }

    Shape3 shape_{};
    std::vector<double> data_;
};

/// Named trainable parameter block. Shape never changes after construction.
class ParamVector {
public:
    ParamVector(std::string name, std::vector<int> dims);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] const std::vector<int>& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    /// Biases are excluded from ridge penalties.
    [[nodiscard]] bool is_bias() const noexcept { return dims_.size() == 1; }

private:
    std::string name_;
    std::vector<int> dims_;
    std::vector<double> values_;
};

}  // namespace graspinf
