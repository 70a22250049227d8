#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "graspinf/dataset.hpp"
#include "graspinf/errors.hpp"
#include "graspinf/world.hpp"
#include "support.hpp"

using namespace graspinf;
using namespace graspinf::world;
using graspinf::testing::rotated;
namespace fs = std::filesystem;

namespace {

const WorldConfig kWorld{};

ObjectShape circle(double r, double cx = 0.5, double cy = 0.5) {
    return {ShapeKind::ellipse, cx, cy, 0.0, r, r};
}

Dataset trials(std::size_t n, std::uint64_t seed) { return collect_dataset(n, seed, default_families(), kWorld); }

}  // namespace

TEST(Oracle, CenteredCircleGrasp) {
    const auto o = oracle_execute(circle(0.1), {0.5, 0.5, 0.0, 0.12}, kWorld);
    EXPECT_TRUE(o.success);
    EXPECT_EQ(o.reason, FailureReason::none);
}

TEST(Oracle, FingertipsInsideCollide) {
    const auto o = oracle_execute(circle(0.1), {0.5, 0.5, 0.0, 0.05}, kWorld);
    EXPECT_FALSE(o.success);
    EXPECT_EQ(o.reason, FailureReason::finger_collision);
}

TEST(Oracle, FarAwayGripperMissesObject) {
    EXPECT_EQ(oracle_execute(circle(0.1), {0.05, 0.05, 0.0, 0.1}, kWorld).reason, FailureReason::no_contact);
}

TEST(Oracle, WidthAndCenteringRules) {
    // 2h = 0.3 > 0.2 + 0.06 slack.
    EXPECT_EQ(oracle_execute(circle(0.1), {0.5, 0.5, 0.0, 0.15}, kWorld).reason, FailureReason::too_wide);
    // Closing line 0.06 above the centre: chord 2 sqrt(0.01 - 0.0036) = 0.16 <= 2h = 0.2, offset 0.06 > 0.05.
    EXPECT_EQ(oracle_execute(circle(0.1), {0.5, 0.56, 0.0, 0.10}, kWorld).reason, FailureReason::off_center);
    // Rectangle 0.2 x 0.1: closing across the short side needs 2h in [0.1, 0.16].
    const ObjectShape rect{ShapeKind::rectangle, 0.5, 0.5, 0.0, 0.1, 0.05};
    EXPECT_TRUE(oracle_execute(rect, {0.5, 0.5, std::numbers::pi / 2, 0.07}, kWorld).success);
    EXPECT_EQ(oracle_execute(rect, {0.5, 0.5, std::numbers::pi / 2, 0.09}, kWorld).reason, FailureReason::too_wide);
}

TEST(Oracle, SuccessIffNoReason) {
    for (const auto& s : trials(300, 1).samples) {
        const auto o = oracle_execute(s.shape, s.theta, kWorld);
        EXPECT_EQ(o.success, o.reason == FailureReason::none);
        EXPECT_EQ(o, oracle_execute(s.shape, s.theta, kWorld));
    }
}

TEST(Oracle, MirrorConsistency) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-0.08, 0.08);
    int successes = 0;
    for (const auto& s : trials(1000, 2).samples) {
        for (const GraspConfig& g : {s.theta, GraspConfig{s.theta[0] + u(rng), s.theta[1] + u(rng), s.theta[2], s.theta[3]}}) {
            const auto a = oracle_execute(s.shape, g, kWorld);
            EXPECT_EQ(a, oracle_execute(mirror(s.shape), mirror(g), kWorld));
            successes += a.success;
        }
    }
    EXPECT_GT(successes, 50);
}

TEST(Oracle, RotationConsistency) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    int successes = 0;
    for (const auto& s : trials(1000, 3).samples) {
        const double a = angle(rng);
        const auto before = oracle_execute(s.shape, s.theta, kWorld);
        EXPECT_EQ(before, oracle_execute(rotated(s.shape, a), rotated(s.theta, a), kWorld));
        successes += before.success;
    }
    EXPECT_GT(successes, 50);
}

TEST(Render, DeterministicPerSeed) {
    std::mt19937_64 a(5), b(5);
    const Scene sa = generate_scene(a, default_families(), kWorld);
    const Scene sb = generate_scene(b, default_families(), kWorld);
    EXPECT_EQ(sa.shape, sb.shape);
    EXPECT_EQ(sa.obs, sb.obs);
}

TEST(Render, CenteredCircleSymmetricUnderQuarterTurn) {
    const Observation o = render(circle(0.2), kWorld);
    const int n = kWorld.grid;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) EXPECT_EQ(o.grid.at(kOccupancy, i, j), o.grid.at(kOccupancy, j, n - 1 - i));
    }
}

TEST(Render, OccupancyAreaTracksAnalyticArea) {
    std::mt19937_64 rng(6);
    double rendered = 0.0, analytic = 0.0, worst = 0.0;
    const double cell2 = kWorld.cell() * kWorld.cell();
    for (int t = 0; t < 1000; ++t) {
        const Scene s = generate_scene(rng, default_families(), kWorld);
        double occ = 0.0;
        for (double v : s.obs.grid.channel(kOccupancy)) occ += v;
        occ *= cell2;
        rendered += occ;
        analytic += area(s.shape);
        worst = std::max(worst, std::abs(occ - area(s.shape)) / area(s.shape));
    }
    EXPECT_NEAR(rendered / analytic, 1.0, 0.10);
    EXPECT_LT(worst, 0.5);
}

TEST(Render, ObservationInvariants) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 200; ++t) {
        const Scene s = generate_scene(rng, default_families(), kWorld);
        const auto& g = s.obs.grid;
        for (int i = 0; i < kWorld.grid; ++i) {
            for (int j = 0; j < kWorld.grid; ++j) {
                const double occ = g.at(kOccupancy, i, j), sdf = g.at(kSignedDistance, i, j);
                EXPECT_TRUE(occ == 0.0 || occ == 1.0);
                EXPECT_EQ(occ == 1.0, sdf < 0.0);
                EXPECT_LE(std::abs(sdf), kWorld.sdf_clamp + 1e-7);
                const double n = std::hypot(g.at(kNormalX, i, j), g.at(kNormalY, i, j));
                EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) <= 1e-6) << n;
            }
        }
    }
}

TEST(Scene, ObjectInsideWorkspaceAndSizesInRange) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 300; ++t) {
        const Scene s = generate_scene(rng, default_families(), kWorld);
        EXPECT_GE(s.shape.b, 0.03 - 1e-7);
        EXPECT_LE(s.shape.b, s.shape.a);
        EXPECT_LE(s.shape.a, 0.25 + 1e-7);
        for (int k = 0; k <= 400; ++k) {
            const double u = k / 400.0;
            for (Vec2 p : {Vec2{u, -1e-3}, Vec2{u, 1.001}, Vec2{-1e-3, u}, Vec2{1.001, u}}) {
                EXPECT_GT(signed_distance(s.shape, p), 0.0);
            }
        }
    }
}

TEST(Families, PoolSupportsUnseenSplits) {
    const auto pool = default_families();
    EXPECT_GE(pool.size(), 20u);
    const std::vector<std::uint32_t> ids{3, 1};
    const auto sel = select_families(pool, ids);
    ASSERT_EQ(sel.size(), 2u);
    const std::vector<std::uint32_t> bad{999};
    EXPECT_THROW(select_families(pool, bad), std::invalid_argument);
}

TEST(Heuristic, AxisAlignedRectangleClosesAcrossMinorAxis) {
    const ObjectShape rect{ShapeKind::rectangle, 0.5, 0.5, 0.0, 0.15, 0.06};
    WorldConfig quiet = kWorld;
    std::mt19937_64 rng(9);
    const auto inits = heuristic_inits(render(rect, quiet), rng, quiet);
    // Order {major+, major-, minor+}; the major- palm sits beyond the -x end.
    EXPECT_LT(inits[1][0], 0.5);
    EXPECT_LE(std::abs(std::cos(inits[1][2])), 1e-6);
    EXPECT_LE(std::abs(std::cos(inits[0][2])), 1e-6);
    EXPECT_LE(std::abs(std::sin(inits[2][2])), 1e-6);
}

TEST(Heuristic, NoiseFreeInitsDependOnGeometryOnly) {
    WorldConfig quiet = kWorld;
    quiet.palm_noise = 0.0;
    quiet.opening_noise = 0.0;
    const Observation obs = render({ShapeKind::capsule, 0.45, 0.55, 0.7, 0.12, 0.05}, quiet);
    std::mt19937_64 a(1), b(2);
    EXPECT_EQ(heuristic_inits(obs, a, quiet), heuristic_inits(obs, b, quiet));
}

TEST(Heuristic, EmptySceneRejected) {
    Observation empty{GridTensor({4, 32, 32})};
    std::mt19937_64 rng(1);
    EXPECT_THROW(heuristic_inits(empty, rng, kWorld), graspinf::Error);
}

TEST(Heuristic, SuccessRateInCalibrationBand) {
    std::mt19937_64 rng(10);
    int ok = 0, total = 0;
    for (int t = 0; t < 1000; ++t) {
        const Scene s = generate_scene(rng, default_families(), kWorld);
        for (const auto& g : heuristic_inits(s.obs, rng, kWorld)) {
            ok += oracle_execute(s.shape, g, kWorld).success;
            ++total;
        }
    }
    const double rate = static_cast<double>(ok) / total;
    EXPECT_GE(rate, 0.20);
    EXPECT_LE(rate, 0.45);
}

TEST(Dataset, ReferenceCollectionPositiveRate) {
    const Dataset ds = trials(1500, 7);
    EXPECT_EQ(ds.size(), 1500u);
    EXPECT_GE(ds.positive_rate(), 0.08);
    EXPECT_LE(ds.positive_rate(), 0.14);
    for (const auto& s : ds.samples) EXPECT_EQ(s.label, oracle_execute(s.shape, s.theta, kWorld).success ? 1 : 0);
}

TEST(Dataset, IndependentOfWorkerCount) {
    const Dataset a = collect_dataset(64, 11, default_families(), kWorld, 1);
    const Dataset b = collect_dataset(64, 11, default_families(), kWorld, 3);
    EXPECT_EQ(a.samples, b.samples);
}

TEST(Dataset, FileRoundTripAndByteIdentity) {
    const fs::path dir = fs::temp_directory_path() / "graspinf_test_ds";
    fs::create_directories(dir);
    WorldConfig wc = kWorld;
    wc.slack = 0.07;
    const auto fams = select_families(default_families(), std::vector<std::uint32_t>{0, 5, 9});
    const Dataset ds = collect_dataset(40, 12, fams, wc);
    save_dataset(ds, dir / "a.bin");
    save_dataset(collect_dataset(40, 12, fams, wc), dir / "b.bin");
    auto bytes = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    EXPECT_EQ(bytes(dir / "a.bin"), bytes(dir / "b.bin"));
    const Dataset back = load_dataset(dir / "a.bin");
    EXPECT_EQ(back.samples, ds.samples);
    EXPECT_EQ(back.seed, 12u);
    EXPECT_EQ(back.family_pool, (std::vector<std::uint32_t>{0, 5, 9}));
    EXPECT_EQ(back.world.slack, 0.07);
    for (const auto& s : back.samples) EXPECT_EQ(s.label, oracle_execute(s.shape, s.theta, wc).success ? 1 : 0);

    std::ofstream(dir / "a.bin", std::ios::app | std::ios::binary) << "x";
    EXPECT_THROW(load_dataset(dir / "a.bin"), FormatError);
    fs::resize_file(dir / "b.bin", fs::file_size(dir / "b.bin") - 7);
    EXPECT_THROW(load_dataset(dir / "b.bin"), FormatError);
    std::ofstream(dir / "c.bin") << "graspinf-dataset 9\n";
    EXPECT_THROW(load_dataset(dir / "c.bin"), FormatError);
    fs::remove_all(dir);
}

TEST(WorldParams, EveryFieldRoundTrips) {
    WorldConfig a;
    for (const auto& [key, value] : world_params(a)) {
        WorldConfig b;
        EXPECT_TRUE(set_world_param(b, key, value + 1.0)) << key;
        const auto after = world_params(b);
        const auto it = std::ranges::find_if(after, [&](const auto& kv) { return kv.first == key; });
        EXPECT_EQ(it->second, value + 1.0) << key;
    }
    EXPECT_FALSE(set_world_param(a, "gravity", 9.8));
}
