#pragma once

#include <span>
#include <vector>

#include "graspinf/grasp.hpp"
#include "graspinf/tensor.hpp"
#include "graspinf/world.hpp"

namespace graspinf {

enum class Interp { nearest, bilinear };
enum class PatchMode { fixed, palm_tracked };

std::string_view to_string(Interp v);
std::string_view to_string(PatchMode v);
Interp parse_interp(std::string_view text);
PatchMode parse_patch_mode(std::string_view text);

/// Square resampling window over an observation grid.
///
/// Patch cell (r, q) samples grid point center + R(angle) * (q - (size-1)/2, r - (size-1)/2),
/// in grid units (column, row); the patch x-axis is the rotated world x-axis. Samples
/// outside the grid read 0.
struct PatchGeometry {
    world::Vec2 center;  ///< grid coordinates, see world::world_to_grid
    double angle = 0.0;
    int size = 0;
};

GridTensor sample_patch(const GridTensor& grid, const PatchGeometry& geom, Interp interp);

/// Grid-lattice anchor of the fixed object patch: the occupancy centroid rounded to the
/// nearest cell corner, in world units. Independent of any grasp configuration.
world::Vec2 object_anchor(const world::Observation& obs);

/// Object patch for the config-net. Fixed mode crops around object_anchor; palm-tracked
/// mode recenters on the gripper center (gx, gy). No rotation in either mode.
GridTensor extract_object_patch(const world::Observation& obs, const GraspConfig& g, PatchMode mode, int size,
                                Interp interp);

struct GraspPatchSizes {
    int palm = 16;
    int finger = 8;

    friend bool operator==(const GraspPatchSizes&, const GraspPatchSizes&) = default;
};

/// Palm patch at the gripper center plus one patch per fingertip at center +- h (cos psi,
/// sin psi), all rotated by psi. Returned in the order palm, finger+, finger-.
std::vector<GridTensor> extract_grasp_patches(const world::Observation& obs, const GraspConfig& g,
                                              GraspPatchSizes sizes, Interp interp);

}  // namespace graspinf
