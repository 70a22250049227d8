#include "graspinf/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <type_traits>

#include "graspinf/errors.hpp"

namespace graspinf::world {

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }
Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

/// World -> object frame (object major axis along +x).
struct Frame {
    Vec2 origin;
    double c;
    double s;

    explicit Frame(const ObjectShape& sh) : origin{sh.cx, sh.cy}, c(std::cos(sh.phi)), s(std::sin(sh.phi)) {}
    [[nodiscard]] Vec2 to_local(Vec2 p) const {
        const Vec2 d = p - origin;
        return {c * d.x + s * d.y, -s * d.x + c * d.y};
    }
    [[nodiscard]] Vec2 dir_to_local(Vec2 v) const { return {c * v.x + s * v.y, -s * v.x + c * v.y}; }
    [[nodiscard]] Vec2 dir_to_world(Vec2 v) const { return {c * v.x - s * v.y, s * v.x + c * v.y}; }
};

struct LocalSample {
    double distance;
    Vec2 normal;  // unit outward normal in the local frame
};

double sign_or_one(double v) { return v < 0.0 ? -1.0 : 1.0; }

LocalSample rectangle_sample(double a, double b, Vec2 p) {
    const double qx = std::abs(p.x) - a;
    const double qy = std::abs(p.y) - b;
    if (qx > 0.0 || qy > 0.0) {
        const double ox = std::max(qx, 0.0);
        const double oy = std::max(qy, 0.0);
        const double d = std::hypot(ox, oy);
        return {d, {sign_or_one(p.x) * ox / d, sign_or_one(p.y) * oy / d}};
    }
    if (qx >= qy) return {qx, {sign_or_one(p.x), 0.0}};
    return {qy, {0.0, sign_or_one(p.y)}};
}

LocalSample capsule_sample(double a, double b, Vec2 p) {
    const double half = a - b;
    const double sx = std::clamp(p.x, -half, half);
    const Vec2 diff{p.x - sx, p.y};
    const double len = norm(diff);
    if (len == 0.0) return {-b, {0.0, sign_or_one(p.y)}};
    return {len - b, {diff.x / len, diff.y / len}};
}

// Bisection root of the ellipse closest-point equation (Eberly, "Distance from a
// Point to an Ellipse, an Ellipsoid, or a Hyperellipsoid").
double ellipse_root(double r0, double z0, double z1, double g) {
    const double n0 = r0 * z0;
    double s0 = z1 - 1.0;
    double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
    double s = 0.0;
    for (int i = 0; i < 1100; ++i) {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1) break;
        const double ratio0 = n0 / (s + r0);
        const double ratio1 = z1 / (s + 1.0);
        g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if (g > 0.0) {
            s0 = s;
        } else if (g < 0.0) {
            s1 = s;
        } else {
            break;
        }
    }
    return s;
}

LocalSample ellipse_sample(double e0, double e1, Vec2 p) {
    const double y0 = std::abs(p.x);
    const double y1 = std::abs(p.y);
    double x0 = 0.0;
    double x1 = 0.0;
    if (y1 > 0.0) {
        if (y0 > 0.0) {
            const double z0 = y0 / e0;
            const double z1 = y1 / e1;
            const double g = z0 * z0 + z1 * z1 - 1.0;
            if (g != 0.0) {
                const double r0 = (e0 / e1) * (e0 / e1);
                const double sbar = ellipse_root(r0, z0, z1, g);
                x0 = r0 * y0 / (sbar + r0);
                x1 = y1 / (sbar + 1.0);
            } else {
                x0 = y0;
                x1 = y1;
            }
        } else {
            x0 = 0.0;
            x1 = e1;
        }
    } else {
        const double numer0 = e0 * y0;
        const double denom0 = e0 * e0 - e1 * e1;
        if (numer0 < denom0) {
            const double xde0 = numer0 / denom0;
            x0 = e0 * xde0;
            x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
        } else {
            x0 = e0;
            x1 = 0.0;
        }
    }
    const double dist = std::hypot(x0 - y0, x1 - y1);
    const bool inside = (y0 / e0) * (y0 / e0) + (y1 / e1) * (y1 / e1) < 1.0;
    // Outward normal of the ellipse at the closest point (x0, x1), first quadrant.
    Vec2 n{x0 / (e0 * e0), x1 / (e1 * e1)};
    const double nl = norm(n);
    n = {n.x / nl, n.y / nl};
    n = {p.x < 0.0 ? -n.x : n.x, p.y < 0.0 ? -n.y : n.y};
    return {inside ? -dist : dist, n};
}

LocalSample local_sample(const ObjectShape& sh, Vec2 p) {
    switch (sh.kind) {
        case ShapeKind::rectangle: return rectangle_sample(sh.a, sh.b, p);
        case ShapeKind::ellipse: return ellipse_sample(sh.a, sh.b, p);
        case ShapeKind::capsule: return capsule_sample(sh.a, sh.b, p);
    }
    return {0.0, {1.0, 0.0}};
}

struct Interval {
    bool hit = false;
    double t0 = 0.0;
    double t1 = 0.0;
};

// Line p + t d against the axis-aligned box |x| <= hx, |y| <= hy.
Interval box_interval(Vec2 p, Vec2 d, double hx, double hy) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    const double pc[2] = {p.x, p.y};
    const double dc[2] = {d.x, d.y};
    const double hc[2] = {hx, hy};
    for (int k = 0; k < 2; ++k) {
        if (dc[k] == 0.0) {
            if (std::abs(pc[k]) >= hc[k]) return {};
            continue;
        }
        double ta = (-hc[k] - pc[k]) / dc[k];
        double tb = (hc[k] - pc[k]) / dc[k];
        if (ta > tb) std::swap(ta, tb);
        lo = std::max(lo, ta);
        hi = std::min(hi, tb);
    }
    if (!(lo < hi)) return {};
    return {true, lo, hi};
}

// Line p + t d against the ellipse (x/ea)^2 + (y/eb)^2 <= 1.
Interval ellipse_interval(Vec2 p, Vec2 d, double ea, double eb) {
    const double A = d.x * d.x / (ea * ea) + d.y * d.y / (eb * eb);
    const double B = 2.0 * (p.x * d.x / (ea * ea) + p.y * d.y / (eb * eb));
    const double C = p.x * p.x / (ea * ea) + p.y * p.y / (eb * eb) - 1.0;
    const double disc = B * B - 4.0 * A * C;
    if (A <= 0.0 || disc <= 0.0) return {};
    const double sq = std::sqrt(disc);
    // Numerically stable pair of roots.
    const double q = -0.5 * (B + (B >= 0.0 ? sq : -sq));
    double r0 = q / A;
    double r1 = q != 0.0 ? C / q : -r0;
    if (r0 > r1) std::swap(r0, r1);
    return {true, r0, r1};
}

Interval hull(Interval x, Interval y) {
    if (!x.hit) return y;
    if (!y.hit) return x;
    return {true, std::min(x.t0, y.t0), std::max(x.t1, y.t1)};
}

double wrap_angle(double a) {
    // into [-pi, pi)
    while (a >= kPi) a -= 2.0 * kPi;
    while (a < -kPi) a += 2.0 * kPi;
    return a;
}

}  // namespace

std::string_view to_string(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::rectangle: return "rectangle";
        case ShapeKind::ellipse: return "ellipse";
        case ShapeKind::capsule: return "capsule";
    }
    return "unknown";
}

std::vector<Family> default_families() {
    // (a, b) nominal half-extents; eight size classes per kind.
    static constexpr double sizes[8][2] = {
        {0.05, 0.04}, {0.07, 0.05}, {0.09, 0.04}, {0.10, 0.07},
        {0.12, 0.05}, {0.13, 0.09}, {0.15, 0.06}, {0.17, 0.08},
    };
    std::vector<Family> out;
    std::uint32_t id = 0;
    for (ShapeKind kind : {ShapeKind::rectangle, ShapeKind::ellipse, ShapeKind::capsule}) {
        for (const auto& s : sizes) out.push_back(Family{id++, kind, s[0], s[1]});
    }
    return out;
}

std::vector<Family> select_families(std::span<const Family> pool, std::span<const std::uint32_t> ids) {
    std::vector<Family> out;
    for (std::uint32_t id : ids) {
        const auto it = std::find_if(pool.begin(), pool.end(), [&](const Family& f) { return f.id == id; });
        if (it == pool.end()) throw std::invalid_argument("unknown family id " + std::to_string(id));
        out.push_back(*it);
    }
    return out;
}

namespace {

template <class F>
void visit_world_params(WorldConfig& cfg, F&& f) {
    f("grid", cfg.grid);
    f("sdf_clamp", cfg.sdf_clamp);
    f("normal_band", cfg.normal_band);
    f("place_lo", cfg.place_lo);
    f("place_hi", cfg.place_hi);
    f("size_jitter", cfg.size_jitter);
    f("slack", cfg.slack);
    f("offcenter_frac", cfg.offcenter_frac);
    f("palm_offset", cfg.palm_offset);
    f("palm_noise", cfg.palm_noise);
    f("opening_noise", cfg.opening_noise);
    f("finger_reach", cfg.finger_reach);
    f("explore_translation", cfg.explore_translation);
    f("explore_angle", cfg.explore_angle);
    f("explore_opening", cfg.explore_opening);
    f("explore_keep", cfg.explore_keep);
}

}  // namespace

std::vector<std::pair<std::string, double>> world_params(const WorldConfig& cfg) {
    std::vector<std::pair<std::string, double>> out;
    WorldConfig copy = cfg;
    visit_world_params(copy, [&](const char* key, auto& v) { out.emplace_back(key, static_cast<double>(v)); });
    return out;
}

bool set_world_param(WorldConfig& cfg, std::string_view key, double value) {
    bool found = false;
    visit_world_params(cfg, [&](const char* k, auto& v) {
        if (key != k) return;
        found = true;
        if constexpr (std::is_integral_v<std::remove_reference_t<decltype(v)>>) {
            v = static_cast<int>(std::lround(value));
        } else {
            v = value;
        }
    });
    return found;
}

BoxBounds world_bounds() {
    return BoxBounds({0.0, 0.0, -kPi, 0.01}, {1.0, 1.0, kPi, 0.35});
}

double signed_distance(const ObjectShape& shape, Vec2 p) {
    const Frame f(shape);
    return local_sample(shape, f.to_local(p)).distance;
}

Vec2 outward_normal(const ObjectShape& shape, Vec2 p) {
    const Frame f(shape);
    return f.dir_to_world(local_sample(shape, f.to_local(p)).normal);
}

double area(const ObjectShape& shape) {
    switch (shape.kind) {
        case ShapeKind::rectangle: return 4.0 * shape.a * shape.b;
        case ShapeKind::ellipse: return kPi * shape.a * shape.b;
        case ShapeKind::capsule: return 4.0 * shape.b * (shape.a - shape.b) + kPi * shape.b * shape.b;
    }
    return 0.0;
}

Chord chord(const ObjectShape& shape, Vec2 origin, Vec2 dir) {
    const Frame f(shape);
    const Vec2 p = f.to_local(origin);
    const Vec2 d = f.dir_to_local(dir);
    Interval iv;
    switch (shape.kind) {
        case ShapeKind::rectangle:
            iv = box_interval(p, d, shape.a, shape.b);
            break;
        case ShapeKind::ellipse:
            iv = ellipse_interval(p, d, shape.a, shape.b);
            break;
        case ShapeKind::capsule: {
            // Convex union of a box and two end discs: the hull of the three intervals.
            const double half = shape.a - shape.b;
            iv = ellipse_interval(p - Vec2{half, 0.0}, d, shape.b, shape.b);
            iv = hull(iv, ellipse_interval(p + Vec2{half, 0.0}, d, shape.b, shape.b));
            if (half > 0.0) iv = hull(iv, box_interval(p, d, half, shape.b));
            break;
        }
    }
    return {iv.hit, iv.t0, iv.t1};
}

Vec2 world_to_grid(Vec2 p, int grid) {
    return {p.x * grid - 0.5, p.y * grid - 0.5};
}

Observation render(const ObjectShape& shape, const WorldConfig& cfg) {
    const int n = cfg.grid;
    Observation obs{GridTensor(Shape3{kChannels, n, n})};
    const Frame f(shape);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 p{(j + 0.5) / n, (i + 0.5) / n};
            const LocalSample s = local_sample(shape, f.to_local(p));
            const double sdf = std::clamp(s.distance, -cfg.sdf_clamp, cfg.sdf_clamp);
            obs.grid.at(kOccupancy, i, j) = s.distance < 0.0 ? 1.0 : 0.0;
            obs.grid.at(kSignedDistance, i, j) = static_cast<float>(sdf);
            if (std::abs(s.distance) <= cfg.normal_band) {
                const Vec2 nw = f.dir_to_world(s.normal);
                obs.grid.at(kNormalX, i, j) = static_cast<float>(nw.x);
                obs.grid.at(kNormalY, i, j) = static_cast<float>(nw.y);
            }
        }
    }
    return obs;
}

ObjectShape quantize(const ObjectShape& shape) {
    ObjectShape q = shape;
    q.cx = static_cast<float>(shape.cx);
    q.cy = static_cast<float>(shape.cy);
    q.phi = static_cast<float>(shape.phi);
    q.a = static_cast<float>(shape.a);
    q.b = static_cast<float>(shape.b);
    return q;
}

GraspConfig quantize(const GraspConfig& g) {
    GraspConfig q = g;
    for (double& v : q.values) v = static_cast<float>(v);
    return q;
}

Scene generate_scene(std::mt19937_64& rng, std::span<const Family> families, const WorldConfig& cfg,
                     std::uint32_t shape_id) {
    if (families.empty()) throw std::invalid_argument("generate_scene: empty family pool");
    std::uniform_int_distribution<std::size_t> pick(0, families.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Family& fam = families[pick(rng)];

    ObjectShape sh;
    sh.kind = fam.kind;
    sh.family_id = fam.id;
    sh.shape_id = shape_id;
    const double ja = 1.0 + cfg.size_jitter * (2.0 * unit(rng) - 1.0);
    const double jb = 1.0 + cfg.size_jitter * (2.0 * unit(rng) - 1.0);
    sh.a = std::clamp(fam.a * ja, 0.03, 0.25);
    sh.b = std::clamp(fam.b * jb, 0.03, sh.a);
    const double cx = cfg.place_lo + (cfg.place_hi - cfg.place_lo) * unit(rng);
    const double cy = cfg.place_lo + (cfg.place_hi - cfg.place_lo) * unit(rng);
    sh.phi = -kPi + 2.0 * kPi * unit(rng);
    // Keep the whole object inside the unit workspace.
    const double lo = sh.a;
    const double hi = 1.0 - sh.a;
    sh.cx = std::min(std::max(cx, lo), hi);
    sh.cy = std::min(std::max(cy, lo), hi);
    const ObjectShape stored = quantize(sh);
    return Scene{stored, render(stored, cfg)};
}

std::string_view to_string(FailureReason reason) {
    switch (reason) {
        case FailureReason::none: return "ok";
        case FailureReason::no_contact: return "no-contact";
        case FailureReason::too_narrow: return "too-narrow";
        case FailureReason::too_wide: return "too-wide";
        case FailureReason::off_center: return "off-center";
        case FailureReason::finger_collision: return "finger-collision";
    }
    return "unknown";
}

FailureReason parse_failure_reason(std::string_view text) {
    for (FailureReason r : {FailureReason::none, FailureReason::no_contact, FailureReason::too_narrow,
                            FailureReason::too_wide, FailureReason::off_center, FailureReason::finger_collision}) {
        if (to_string(r) == text) return r;
    }
    throw FormatError("unknown failure reason '" + std::string(text) + "'");
}

GraspOutcome oracle_execute(const ObjectShape& shape, const GraspConfig& g, const WorldConfig& cfg) {
    if (g.size() != theta::dim) throw std::invalid_argument("oracle_execute: configuration must have 4 entries");
    const Vec2 center{g[theta::gx], g[theta::gy]};
    const Vec2 dir{std::cos(g[theta::psi]), std::sin(g[theta::psi])};
    const double h = g[theta::opening];
    auto fail = [](FailureReason r) { return GraspOutcome{false, r}; };

    if (!(signed_distance(shape, center + h * dir) > 0.0) || !(signed_distance(shape, center - h * dir) > 0.0)) {
        return fail(FailureReason::finger_collision);
    }
    const Chord c = chord(shape, center, dir);
    if (!c.hit || !(c.t0 < h && c.t1 > -h)) return fail(FailureReason::no_contact);
    const double w = c.t1 - c.t0;
    if (w > 2.0 * h) return fail(FailureReason::too_narrow);
    if (2.0 * h > w + cfg.slack) return fail(FailureReason::too_wide);
    const double offset = std::abs(cross(dir, Vec2{shape.cx, shape.cy} - center));
    if (offset > cfg.offcenter_frac * std::min(shape.a, shape.b)) return fail(FailureReason::off_center);
    return GraspOutcome{true, FailureReason::none};
}

double canonical_angle(double psi) {
    const double half = 0.5 * kPi;
    while (psi >= half) psi -= kPi;
    while (psi < -half) psi += kPi;
    return psi;
}

BoxFit fit_box(const Observation& obs, const WorldConfig& cfg) {
    const GridTensor& g = obs.grid;
    const int n = g.height();
    const double cell = 1.0 / n;
    double sx = 0.0, sy = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < g.width(); ++j) {
            if (g.at(kOccupancy, i, j) > 0.5) {
                sx += (j + 0.5) * cell;
                sy += (i + 0.5) * cell;
                ++count;
            }
        }
    }
    if (count == 0) throw Error("heuristic grasp generation: observation has no occupied cells");
    const Vec2 mean{sx / count, sy / count};
    double cxx = 0.0, cyy = 0.0, cxy = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < g.width(); ++j) {
            if (g.at(kOccupancy, i, j) > 0.5) {
                const double dx = (j + 0.5) * cell - mean.x;
                const double dy = (i + 0.5) * cell - mean.y;
                cxx += dx * dx;
                cyy += dy * dy;
                cxy += dx * dy;
            }
        }
    }
    const double alpha = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
    BoxFit fit;
    fit.major = {std::cos(alpha), std::sin(alpha)};
    fit.minor = perp(fit.major);

    // Extents from boundary points recovered through the distance and normal channels;
    // a cell with normal n and distance s has its closest boundary point at p - s n.
    double lo_u = std::numeric_limits<double>::infinity(), hi_u = -lo_u;
    double lo_v = lo_u, hi_v = -lo_u;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < g.width(); ++j) {
            const Vec2 nrm{g.at(kNormalX, i, j), g.at(kNormalY, i, j)};
            if (nrm.x == 0.0 && nrm.y == 0.0) continue;
            const double s = g.at(kSignedDistance, i, j);
            if (std::abs(s) >= cfg.sdf_clamp) continue;
            const Vec2 q = Vec2{(j + 0.5) * cell, (i + 0.5) * cell} - s * nrm;
            const double u = dot(q - mean, fit.major);
            const double v = dot(q - mean, fit.minor);
            lo_u = std::min(lo_u, u);
            hi_u = std::max(hi_u, u);
            lo_v = std::min(lo_v, v);
            hi_v = std::max(hi_v, v);
        }
    }
    if (!(lo_u <= hi_u)) {
        // No boundary band available: fall back to occupied cell extents.
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < g.width(); ++j) {
                if (g.at(kOccupancy, i, j) <= 0.5) continue;
                const Vec2 q{(j + 0.5) * cell, (i + 0.5) * cell};
                const double u = dot(q - mean, fit.major);
                const double v = dot(q - mean, fit.minor);
                lo_u = std::min(lo_u, u - 0.5 * cell);
                hi_u = std::max(hi_u, u + 0.5 * cell);
                lo_v = std::min(lo_v, v - 0.5 * cell);
                hi_v = std::max(hi_v, v + 0.5 * cell);
            }
        }
    }
    fit.center = mean + 0.5 * (lo_u + hi_u) * fit.major + 0.5 * (lo_v + hi_v) * fit.minor;
    fit.half_major = 0.5 * (hi_u - lo_u);
    fit.half_minor = 0.5 * (hi_v - lo_v);
    return fit;
}

std::array<GraspConfig, 3> heuristic_inits(const Observation& obs, std::mt19937_64& rng, const WorldConfig& cfg) {
    const BoxFit box = fit_box(obs, cfg);
    struct Face {
        Vec2 normal;
        double depth;   // half-extent along the normal
        double across;  // half-extent along the closing axis
    };
    const Face faces[3] = {
        {box.major, box.half_major, box.half_minor},
        {-1.0 * box.major, box.half_major, box.half_minor},
        {box.minor, box.half_minor, box.half_major},
    };
    std::array<GraspConfig, 3> out;
    for (int k = 0; k < 3; ++k) {
        const Face& f = faces[k];
        double palm_noise = 0.0;
        if (cfg.palm_noise > 0.0) palm_noise = std::normal_distribution<double>(0.0, cfg.palm_noise)(rng);
        double open_noise = 0.0;
        if (cfg.opening_noise > 0.0) open_noise = std::uniform_real_distribution<double>(0.0, cfg.opening_noise)(rng);
        const Vec2 palm = box.center + (f.depth + cfg.palm_offset + palm_noise) * f.normal;
        const Vec2 center = palm - cfg.finger_reach * f.normal;
        const Vec2 closing = perp(f.normal);
        out[k] = GraspConfig{center.x, center.y, canonical_angle(std::atan2(closing.y, closing.x)),
                             f.across + open_noise};
        out[k] = project(out[k], world_bounds());
    }
    return out;
}

ObjectShape mirror(const ObjectShape& shape) {
    ObjectShape m = shape;
    m.cx = 1.0 - shape.cx;
    m.phi = wrap_angle(-shape.phi);
    return m;
}

GraspConfig mirror(const GraspConfig& g) {
    GraspConfig m = g;
    m[theta::gx] = 1.0 - g[theta::gx];
    m[theta::psi] = -g[theta::psi];
    return m;
}

Observation mirror(const Observation& obs) {
    Observation m = obs;
    const int h = obs.grid.height();
    const int w = obs.grid.width();
    for (int c = 0; c < obs.grid.channels(); ++c) {
        const double sign = c == kNormalX ? -1.0 : 1.0;
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) m.grid.at(c, i, j) = sign * obs.grid.at(c, i, w - 1 - j);
        }
    }
    return m;
}

}  // namespace graspinf::world
