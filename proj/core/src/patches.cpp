#include "graspinf/patches.hpp"

#include <cmath>
#include <stdexcept>

#include "graspinf/errors.hpp"

namespace graspinf {

std::string_view to_string(Interp v) { return v == Interp::nearest ? "nearest" : "bilinear"; }

std::string_view to_string(PatchMode v) { return v == PatchMode::fixed ? "fixed" : "palm-tracked"; }

Interp parse_interp(std::string_view text) {
    if (text == "nearest") return Interp::nearest;
    if (text == "bilinear") return Interp::bilinear;
    throw FormatError("unknown interpolation '" + std::string(text) + "'");
}

PatchMode parse_patch_mode(std::string_view text) {
    if (text == "fixed") return PatchMode::fixed;
    if (text == "palm-tracked") return PatchMode::palm_tracked;
    throw FormatError("unknown patch mode '" + std::string(text) + "'");
}

GridTensor sample_patch(const GridTensor& grid, const PatchGeometry& geom, Interp interp) {
    if (geom.size <= 0) throw std::invalid_argument("sample_patch: size must be positive");
    const int C = grid.channels();
    const int H = grid.height();
    const int W = grid.width();
    GridTensor out(Shape3{C, geom.size, geom.size});
    const double c = std::cos(geom.angle);
    const double s = std::sin(geom.angle);
    const double half = 0.5 * (geom.size - 1);
    for (int r = 0; r < geom.size; ++r) {
        for (int q = 0; q < geom.size; ++q) {
            const double ox = q - half;
            const double oy = r - half;
            const double u = geom.center.x + c * ox - s * oy;
            const double v = geom.center.y + s * ox + c * oy;
            if (interp == Interp::nearest) {
                const auto x = static_cast<long>(std::floor(u + 0.5));
                const auto y = static_cast<long>(std::floor(v + 0.5));
                if (x < 0 || y < 0 || x >= W || y >= H) continue;
                for (int ch = 0; ch < C; ++ch) out.at(ch, r, q) = grid.at(ch, static_cast<int>(y), static_cast<int>(x));
                continue;
            }
            const double fx = std::floor(u);
            const double fy = std::floor(v);
            const double tx = u - fx;
            const double ty = v - fy;
            const auto x0 = static_cast<long>(fx);
            const auto y0 = static_cast<long>(fy);
            const double wts[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
            const long xs[4] = {x0, x0 + 1, x0, x0 + 1};
            const long ys[4] = {y0, y0, y0 + 1, y0 + 1};
            for (int k = 0; k < 4; ++k) {
                if (xs[k] < 0 || ys[k] < 0 || xs[k] >= W || ys[k] >= H || wts[k] == 0.0) continue;
                for (int ch = 0; ch < C; ++ch) {
                    out.at(ch, r, q) += wts[k] * grid.at(ch, static_cast<int>(ys[k]), static_cast<int>(xs[k]));
                }
            }
        }
    }
    return out;
}

world::Vec2 object_anchor(const world::Observation& obs) {
    const GridTensor& g = obs.grid;
    const int n = g.width();
    double sx = 0.0, sy = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < g.height(); ++i) {
        for (int j = 0; j < n; ++j) {
            if (g.at(world::kOccupancy, i, j) > 0.5) {
                sx += j + 0.5;
                sy += i + 0.5;
                ++count;
            }
        }
    }
    if (count == 0) return {0.5, 0.5};
    return {std::round(sx / count) / n, std::round(sy / static_cast<double>(count)) / g.height()};
}

GridTensor extract_object_patch(const world::Observation& obs, const GraspConfig& g, PatchMode mode, int size,
                                Interp interp) {
    const int n = obs.grid.width();
    world::Vec2 center = mode == PatchMode::fixed ? object_anchor(obs) : world::Vec2{g[theta::gx], g[theta::gy]};
    return sample_patch(obs.grid, PatchGeometry{world::world_to_grid(center, n), 0.0, size}, interp);
}

std::vector<GridTensor> extract_grasp_patches(const world::Observation& obs, const GraspConfig& g,
                                              GraspPatchSizes sizes, Interp interp) {
    const int n = obs.grid.width();
    const double psi = g[theta::psi];
    const double h = g[theta::opening];
    const world::Vec2 c{g[theta::gx], g[theta::gy]};
    const world::Vec2 d{std::cos(psi), std::sin(psi)};
    std::vector<GridTensor> out;
    out.reserve(3);
    out.push_back(sample_patch(obs.grid, {world::world_to_grid(c, n), psi, sizes.palm}, interp));
    out.push_back(sample_patch(obs.grid, {world::world_to_grid({c.x + h * d.x, c.y + h * d.y}, n), psi, sizes.finger},
                               interp));
    out.push_back(sample_patch(obs.grid, {world::world_to_grid({c.x - h * d.x, c.y - h * d.y}, n), psi, sizes.finger},
                               interp));
    return out;
}

}  // namespace graspinf
