#include "graspinf/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graspinf {

BoxBounds::BoxBounds(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size()) throw std::invalid_argument("BoxBounds: lower/upper dimension mismatch");
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
            throw std::invalid_argument("BoxBounds: bounds must be finite");
        }
        if (lower_[i] > upper_[i]) {
            throw std::invalid_argument("BoxBounds: lower > upper in coordinate " + std::to_string(i));
        }
    }
}

bool BoxBounds::contains(const GraspConfig& g) const noexcept {
    if (g.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        if (!(g[i] >= lower_[i] && g[i] <= upper_[i])) return false;
    }
    return true;
}

BoxBounds BoxBounds::intersect(const BoxBounds& other) const {
    if (other.size() != size()) throw std::invalid_argument("BoxBounds::intersect: dimension mismatch");
    std::vector<double> lo(size()), hi(size());
    for (std::size_t i = 0; i < size(); ++i) {
        lo[i] = std::max(lower_[i], other.lower_[i]);
        hi[i] = std::min(upper_[i], other.upper_[i]);
    }
    return BoxBounds(std::move(lo), std::move(hi));
}

BoxBounds BoxBounds::hull(const BoxBounds& other) const {
    if (other.size() != size()) throw std::invalid_argument("BoxBounds::hull: dimension mismatch");
    std::vector<double> lo(size()), hi(size());
    for (std::size_t i = 0; i < size(); ++i) {
        lo[i] = std::min(lower_[i], other.lower_[i]);
        hi[i] = std::max(upper_[i], other.upper_[i]);
    }
    return BoxBounds(std::move(lo), std::move(hi));
}

GraspConfig project(const GraspConfig& g, const BoxBounds& bounds) {
    if (g.size() != bounds.size()) throw std::invalid_argument("project: dimension mismatch");
    GraspConfig out = g;
    for (std::size_t i = 0; i < g.size(); ++i) {
        out[i] = std::clamp(g[i], bounds.lower()[i], bounds.upper()[i]);
    }
    return out;
}

}  // namespace graspinf
