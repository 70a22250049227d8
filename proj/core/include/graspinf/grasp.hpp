#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace graspinf {

/// Coordinates of the toy-world gripper configuration. The planner and networks are
/// dimension-agnostic; only the toy world interprets the individual entries.
namespace theta {
inline constexpr std::size_t gx = 0;       ///< gripper center x, world units
inline constexpr std::size_t gy = 1;       ///< gripper center y, world units
inline constexpr std::size_t psi = 2;      ///< closing-axis angle, radians
inline constexpr std::size_t opening = 3;  ///< fingertip distance from center, world units
inline constexpr std::size_t dim = 4;
}  // namespace theta

/// Fixed-length real vector of grasp parameters.
struct GraspConfig {
    std::vector<double> values;

    GraspConfig() = default;
    explicit GraspConfig(std::vector<double> v) : values(std::move(v)) {}
    GraspConfig(std::initializer_list<double> v) : values(v) {}

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double& operator[](std::size_t i) noexcept { return values[i]; }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return values[i]; }
    [[nodiscard]] std::span<const double> span() const noexcept { return values; }

    friend bool operator==(const GraspConfig&, const GraspConfig&) = default;
};

/// Elementwise box constraint lower <= theta <= upper.
class BoxBounds {
public:
    BoxBounds() = default;
    BoxBounds(std::vector<double> lower, std::vector<double> upper);

    [[nodiscard]] std::size_t size() const noexcept { return lower_.size(); }
    [[nodiscard]] const std::vector<double>& lower() const noexcept { return lower_; }
    [[nodiscard]] const std::vector<double>& upper() const noexcept { return upper_; }
    [[nodiscard]] bool contains(const GraspConfig& g) const noexcept;

    /// Elementwise intersection; throws if it is empty in any coordinate.
    [[nodiscard]] BoxBounds intersect(const BoxBounds& other) const;
    /// Elementwise hull (smallest box containing both).
    [[nodiscard]] BoxBounds hull(const BoxBounds& other) const;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
};

/// Elementwise clamp into the box. Idempotent.
GraspConfig project(const GraspConfig& g, const BoxBounds& bounds);

}  // namespace graspinf
