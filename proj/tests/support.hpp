#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "graspinf/grasp.hpp"
#include "graspinf/tensor.hpp"
#include "graspinf/world.hpp"

namespace graspinf::testing {

inline GridTensor random_tensor(Shape3 shape, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    GridTensor t(shape);
    for (auto& v : t.data()) v = n(rng);
    return t;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
    double d = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::max(std::sqrt(na), std::sqrt(nb));
    return denom == 0.0 ? 0.0 : std::sqrt(d) / denom;
}

/// Central differences of f around x, one coordinate at a time.
inline std::vector<double> central_difference(std::vector<double> x, double h,
                                              const std::function<double(const std::vector<double>&)>& f) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

// Rotation of the plane by `a` about (0.5, 0.5), applied to a shape and a configuration.
inline world::Vec2 rotate(world::Vec2 p, double a) {
    const double c = std::cos(a), s = std::sin(a);
    const double x = p.x - 0.5, y = p.y - 0.5;
    return {0.5 + c * x - s * y, 0.5 + s * x + c * y};
}

inline world::ObjectShape rotated(world::ObjectShape s, double a) {
    const world::Vec2 c = rotate({s.cx, s.cy}, a);
    s.cx = c.x;
    s.cy = c.y;
    s.phi += a;
    return s;
}

inline GraspConfig rotated(GraspConfig g, double a) {
    const world::Vec2 c = rotate({g[0], g[1]}, a);
    g[0] = c.x;
    g[1] = c.y;
    g[2] += a;
    return g;
}

/// True when every sample point of the palm (16) and fingertip (8) patches lies
/// inside the grid, so bilinear lookups never reach the zero fill.
inline bool patches_interior(const GraspConfig& g, int grid = 32) {
    auto inside = [&](double x, double y, int size) {
        const double r = (size - 1) / 2.0 * (std::abs(std::cos(g[2])) + std::abs(std::sin(g[2])));
        const auto c = world::world_to_grid({x, y}, grid);
        return c.x - r >= 0 && c.x + r <= grid - 1 && c.y - r >= 0 && c.y + r <= grid - 1;
    };
    const double dx = g[3] * std::cos(g[2]), dy = g[3] * std::sin(g[2]);
    return inside(g[0], g[1], 16) && inside(g[0] + dx, g[1] + dy, 8) && inside(g[0] - dx, g[1] - dy, 8);
}

}  // namespace graspinf::testing
