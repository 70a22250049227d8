#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "graspinf/grasp.hpp"
#include "graspinf/tensor.hpp"

// Analytic 2D grasp world: parametric convex objects on the unit square, a
// 4-channel grid rendering, an exact grasp-success rule and the bounding-box
// heuristic that proposes initial grasps.
namespace graspinf::world {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

enum class ShapeKind : std::uint8_t { rectangle = 0, ellipse = 1, capsule = 2 };

std::string_view to_string(ShapeKind kind);

/// Object pose and size. Half-extents satisfy 0.03 <= b <= a <= 0.25; `a` lies
/// along the direction `phi`.
struct ObjectShape {
    ShapeKind kind = ShapeKind::rectangle;
    double cx = 0.5;
    double cy = 0.5;
    double phi = 0.0;
    double a = 0.1;
    double b = 0.05;
    std::uint32_t shape_id = 0;
    std::uint32_t family_id = 0;

    friend bool operator==(const ObjectShape&, const ObjectShape&) = default;
};

/// An object "type": kind plus nominal half-extents. Families drive seen/unseen splits.
struct Family {
    std::uint32_t id = 0;
    ShapeKind kind = ShapeKind::rectangle;
    double a = 0.1;
    double b = 0.05;
};

/// The default pool of 24 families (8 size classes for each kind).
std::vector<Family> default_families();
/// Subset of `pool` whose ids appear in `ids`; throws on unknown ids.
std::vector<Family> select_families(std::span<const Family> pool, std::span<const std::uint32_t> ids);

/// Geometry and calibration constants of the world. The success-rule constants and
/// the heuristic/exploration noise levels are calibration knobs, not physics.
struct WorldConfig {
    int grid = 32;                 ///< cells per side of the unit workspace
    double sdf_clamp = 0.2;        ///< signed distance channel clamp
    double normal_band = 0.05;     ///< normals are zero where |sdf| > band
    double place_lo = 0.3;         ///< object centers are uniform in [place_lo, place_hi]^2
    double place_hi = 0.7;
    double size_jitter = 0.1;      ///< relative jitter of family half-extents
    double slack = 0.06;           ///< maximum 2h - w before a grasp is too wide
    double offcenter_frac = 0.5;   ///< centroid offset tolerance as a fraction of min(a, b)
    double palm_offset = 0.03;     ///< palm distance outside the chosen box face
    double palm_noise = 0.002;     ///< std-dev of palm placement noise along the face normal
    double opening_noise = 0.02;   ///< opening h = half-extent across + U[0, opening_noise]
    double finger_reach = 0.14;    ///< palm-to-fingertip-line distance
    double explore_translation = 0.1;  ///< data collection: uniform jitter of (gx, gy)
    double explore_angle = 0.3;        ///< data collection: uniform jitter of psi
    double explore_opening = 0.05;     ///< data collection: uniform jitter of h
    double explore_keep = 0.2;         ///< data collection: probability of an unperturbed init

    [[nodiscard]] double cell() const noexcept { return 1.0 / grid; }
};

/// Flat `key=value` view of every WorldConfig field, in declaration order.
std::vector<std::pair<std::string, double>> world_params(const WorldConfig& cfg);
/// Sets one field by key; returns false for unknown keys. Integral fields are rounded.
bool set_world_param(WorldConfig& cfg, std::string_view key, double value);

/// World-frame limits of every configuration coordinate.
BoxBounds world_bounds();

// --- geometry -------------------------------------------------------------

double signed_distance(const ObjectShape& shape, Vec2 p);
/// Unit outward normal of the boundary point closest to p.
Vec2 outward_normal(const ObjectShape& shape, Vec2 p);
double area(const ObjectShape& shape);

/// Parameter interval [t0, t1] where `origin + t * dir` lies inside the shape.
struct Chord {
    bool hit = false;
    double t0 = 0.0;
    double t1 = 0.0;
};
Chord chord(const ObjectShape& shape, Vec2 origin, Vec2 dir);

// --- observation ----------------------------------------------------------

inline constexpr int kOccupancy = 0;
inline constexpr int kSignedDistance = 1;
inline constexpr int kNormalX = 2;
inline constexpr int kNormalY = 3;
inline constexpr int kChannels = 4;

/// Grid rendering of one scene. Row i covers y in [i, i+1) * cell, column j covers
/// x in [j, j+1) * cell; every value is sampled at the cell center and stored with
/// float32 precision.
struct Observation {
    GridTensor grid;
    friend bool operator==(const Observation&, const Observation&) = default;
};

Observation render(const ObjectShape& shape, const WorldConfig& cfg);

/// Continuous grid coordinates (column, row) of a world point; cell centers are integral.
Vec2 world_to_grid(Vec2 p, int grid);

// --- scenes ----------------------------------------------------------------

struct Scene {
    ObjectShape shape;
    Observation obs;
};

Scene generate_scene(std::mt19937_64& rng, std::span<const Family> families, const WorldConfig& cfg,
                     std::uint32_t shape_id = 0);

/// Shape with its parameters rounded to float32, as stored in dataset files.
ObjectShape quantize(const ObjectShape& shape);
GraspConfig quantize(const GraspConfig& g);

// --- grasp outcome -----------------------------------------------------------

enum class FailureReason : std::uint8_t { none, no_contact, too_narrow, too_wide, off_center, finger_collision };

std::string_view to_string(FailureReason reason);
FailureReason parse_failure_reason(std::string_view text);

struct GraspOutcome {
    bool success = false;
    FailureReason reason = FailureReason::none;
    friend bool operator==(const GraspOutcome&, const GraspOutcome&) = default;
};

/// Exact success rule. Fingertips sit at center +- h * (cos psi, sin psi).
/// Checks, in order: both fingertips strictly outside the object; the closing
/// segment crosses the object; chord width w satisfies w <= 2h <= w + slack; the
/// closing line passes within offcenter_frac * min(a, b) of the centroid.
GraspOutcome oracle_execute(const ObjectShape& shape, const GraspConfig& g, const WorldConfig& cfg);

// --- heuristic initializations ---------------------------------------------

/// Oriented box fitted to an observation (principal axes of the occupied cells).
struct BoxFit {
    Vec2 center;
    Vec2 major;  ///< unit vector
    Vec2 minor;  ///< major rotated by +90 degrees
    double half_major = 0.0;
    double half_minor = 0.0;
};

BoxFit fit_box(const Observation& obs, const WorldConfig& cfg);

/// Three candidates, one per box face in the order {major+, major-, minor+}. For each
/// face the palm sits palm_offset (+ noise) outside the face center, the fingers
/// reach finger_reach back toward the object and close across the box.
std::array<GraspConfig, 3> heuristic_inits(const Observation& obs, std::mt19937_64& rng, const WorldConfig& cfg);

/// Maps psi into [-pi/2, pi/2); the fingertip pair is symmetric under psi + pi.
double canonical_angle(double psi);

// --- mirroring ---------------------------------------------------------------

/// Reflection x -> 1 - x of the workspace.
ObjectShape mirror(const ObjectShape& shape);
GraspConfig mirror(const GraspConfig& g);
Observation mirror(const Observation& obs);

}  // namespace graspinf::world
