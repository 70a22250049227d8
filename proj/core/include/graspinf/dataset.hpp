#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "graspinf/grasp.hpp"
#include "graspinf/world.hpp"

namespace graspinf {

/// One labelled grasp trial. The shape is kept so labels can be re-verified and
/// samples mirrored consistently.
struct GraspSample {
    world::ObjectShape shape;
    world::Observation obs;
    GraspConfig theta;
    int label = 0;

    friend bool operator==(const GraspSample&, const GraspSample&) = default;
};

struct Dataset {
    std::vector<GraspSample> samples;
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> family_pool;  ///< ids of the families scenes were drawn from
    world::WorldConfig world;

    [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
    [[nodiscard]] std::size_t positives() const noexcept;
    [[nodiscard]] double positive_rate() const noexcept;
    [[nodiscard]] std::vector<std::size_t> positive_indices() const;
    /// Copy holding only the samples at `indices`, in that order.
    [[nodiscard]] Dataset subset(std::span<const std::size_t> indices) const;
    /// Copy holding only successful trials.
    [[nodiscard]] Dataset positives_only() const;
};

/// Runs `n` trials: scene, one heuristic init (uniform among the three), exploration
/// jitter, oracle label. Trial i uses its own seed derived from (seed, i), so the
/// result does not depend on `workers`.
Dataset collect_dataset(std::size_t n, std::uint64_t seed, std::span<const world::Family> families,
                        const world::WorldConfig& cfg, unsigned workers = 1);

/// The data-collection perturbation applied to one heuristic init.
GraspConfig explore(const GraspConfig& init, std::mt19937_64& rng, const world::WorldConfig& cfg);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace graspinf
