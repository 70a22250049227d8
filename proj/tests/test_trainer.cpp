#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "graspinf/dataset.hpp"
#include "graspinf/errors.hpp"
#include "graspinf/trainer.hpp"

using namespace graspinf;

namespace {

Dataset small_dataset(std::size_t n, std::uint64_t seed) {
    return collect_dataset(n, seed, world::default_families(), world::WorldConfig{});
}

// Ten positives and ten negatives drawn from one collection.
Dataset balanced_twenty() {
    const Dataset ds = small_dataset(400, 11);
    std::vector<std::size_t> pick;
    std::size_t pos = 0, neg = 0;
    for (std::size_t i = 0; i < ds.size() && pick.size() < 20; ++i) {
        auto& count = ds.samples[i].label ? pos : neg;
        if (count < 10) {
            pick.push_back(i);
            ++count;
        }
    }
    return ds.subset(pick);
}

double eval_loss(const GraspModel& m, const Dataset& ds) {
    double sum = 0.0;
    for (const auto& s : ds.samples) sum += cross_entropy_loss(m.predict(s.obs, s.theta), s.label);
    return sum / static_cast<double>(ds.size());
}

}  // namespace

TEST(CrossEntropy, Values) {
    EXPECT_NEAR(cross_entropy_loss(0.5, 1), std::log(2.0), 1e-15);
    EXPECT_NEAR(cross_entropy_loss(1.0 - 1e-12, 1), 1e-12, 1e-15);
    EXPECT_NEAR(cross_entropy_loss(0.4, 0), -std::log(0.6), 1e-15);
    EXPECT_TRUE(std::isfinite(cross_entropy_loss(0.0, 1)));
    EXPECT_TRUE(std::isfinite(cross_entropy_loss(1.0, 0)));
}

TEST(CrossEntropy, GradientMatchesDifference) {
    for (double p : {0.1, 0.37, 0.8}) {
        for (int y : {0, 1}) {
            const double h = 1e-6;
            const double fd = (cross_entropy_loss(p + h, y) - cross_entropy_loss(p - h, y)) / (2 * h);
            EXPECT_NEAR(cross_entropy_grad(p, y), fd, 1e-6);
        }
    }
}

TEST(LearningRate, StepSchedule) {
    const TrainConfig cfg = TrainConfig::config_net_defaults();
    EXPECT_EQ(learning_rate(cfg, 0), 0.001);
    EXPECT_EQ(learning_rate(cfg, 1999), 0.001);
    EXPECT_EQ(learning_rate(cfg, 2000), 0.001 * std::pow(0.1, 1));
    EXPECT_DOUBLE_EQ(learning_rate(cfg, 2000), 0.0001);
    EXPECT_EQ(learning_rate(cfg, 4000), 0.001 * std::pow(0.1, 2));
    const TrainConfig pc = TrainConfig::patch_net_defaults();
    EXPECT_EQ(pc.iterations, 60000);
    EXPECT_EQ(learning_rate(pc, 19999), 0.001);
    EXPECT_EQ(learning_rate(pc, 20000), 0.001 * std::pow(0.1, 1));
}

TEST(TrainConfig, OversamplingNeedsRoomForAPositive) {
    TrainConfig cfg;
    cfg.batch_size = 1;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.oversample = false;
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Minibatch, AllPositiveDatasetGivesAllPositiveBatches) {
    std::vector<std::size_t> pos(12);
    std::iota(pos.begin(), pos.end(), 0);
    std::mt19937_64 rng(1);
    for (int t = 0; t < 100; ++t) {
        for (auto i : sample_minibatch(12, pos, 8, true, rng)) EXPECT_LT(i, 12u);
    }
}

TEST(Minibatch, OversamplingGuaranteesAPositive) {
    const std::vector<std::size_t> pos{3, 50, 77};
    std::mt19937_64 rng(2);
    for (int t = 0; t < 10000; ++t) {
        const auto b = sample_minibatch(100, pos, 8, true, rng);
        ASSERT_EQ(b.size(), 8u);
        EXPECT_TRUE(std::ranges::any_of(b, [&](std::size_t i) { return std::ranges::count(pos, i) > 0; }));
    }
}

TEST(Minibatch, PositiveShareMatchesReplacementRule) {
    // 10% positives, batch 8: E[positives] = 8 * 0.1 + P(no positive drawn) = 0.8 + 0.9^8.
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < 1000; i += 10) pos.push_back(i);
    const double oracle = (0.8 + std::pow(0.9, 8)) / 8.0;
    std::mt19937_64 rng(3);
    std::size_t hits = 0, total = 0;
    for (int t = 0; t < 10000; ++t) {
        for (auto i : sample_minibatch(1000, pos, 8, true, rng)) {
            hits += i % 10 == 0;
            ++total;
        }
    }
    EXPECT_NEAR(static_cast<double>(hits) / static_cast<double>(total), oracle, 0.01);
}

TEST(Minibatch, Errors) {
    std::mt19937_64 rng(4);
    EXPECT_THROW(sample_minibatch(0, {}, 8, false, rng), std::invalid_argument);
    EXPECT_THROW(sample_minibatch(10, {}, 8, true, rng), std::invalid_argument);
}

TEST(Mirror, TwiceIsIdentityOnStoredSamples) {
    // Stored coordinates are float32 values in [0, 1], for which 1 - (1 - x) is exact.
    for (const auto& s : small_dataset(50, 5).samples) EXPECT_EQ(mirror_augment(mirror_augment(s)), s);
}

TEST(Mirror, CenteredSymmetricSceneIsFixed) {
    const world::ObjectShape circle{world::ShapeKind::ellipse, 0.5, 0.5, 0.0, 0.1, 0.1};
    const world::WorldConfig wc;
    GraspSample s{circle, world::render(circle, wc), GraspConfig{0.5, 0.4, 0.0, 0.12}, 1};
    const GraspSample m = mirror_augment(s);
    EXPECT_EQ(m.theta, s.theta);
    EXPECT_EQ(m.shape.cx, 0.5);
    for (std::size_t i = 0; i < s.obs.grid.size(); ++i) EXPECT_NEAR(m.obs.grid[i], s.obs.grid[i], 1e-12);
}

TEST(Mirror, LabelAgreesWithOracleOnMirroredConfiguration) {
    const world::WorldConfig wc;
    for (const auto& s : small_dataset(1000, 6).samples) {
        const GraspSample m = mirror_augment(s);
        EXPECT_EQ(m.label, world::oracle_execute(m.shape, m.theta, wc).success ? 1 : 0);
    }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    GraspModel m = GraspModel::patch_net(PatchNetSpec{}, Interp::bilinear, 1);
    Adam adam(m.graph());
    const auto before = m.graph().params();
    auto grads = m.graph().zero_gradients();
    for (int i = 0; i < 5; ++i) adam.step(m.graph().params(), grads, 1e-3);
    for (std::size_t k = 0; k < before.size(); ++k) {
        EXPECT_TRUE(std::ranges::equal(before[k].values(), m.graph().params()[k].values()));
    }
}

TEST(Train, FitsTwentySeparableSamples) {
    const Dataset ds = balanced_twenty();
    ASSERT_EQ(ds.positives(), 10u);
    GraspModel m = GraspModel::patch_net(PatchNetSpec{}, Interp::bilinear, 2);
    TrainConfig cfg = TrainConfig::config_net_defaults();
    cfg.iterations = 2000;
    cfg.mirror = false;
    const TrainResult r = train(m, ds, cfg);
    for (double l : r.loss) ASSERT_TRUE(std::isfinite(l));
    EXPECT_LT(eval_loss(m, ds), 0.1);
}

TEST(Train, DeterministicLossTrace) {
    const Dataset ds = small_dataset(60, 7);
    TrainConfig cfg;
    cfg.iterations = 40;
    GraspModel a = GraspModel::config_net(ConfigNetSpec{}, PatchMode::fixed, Interp::bilinear, 3);
    GraspModel b = GraspModel::config_net(ConfigNetSpec{}, PatchMode::fixed, Interp::bilinear, 3);
    const TrainResult ra = train(a, ds, cfg);
    const TrainResult rb = train(b, ds, cfg);
    EXPECT_EQ(ra.loss, rb.loss);
    EXPECT_EQ(ra.lr, rb.lr);
    for (std::size_t k = 0; k < a.graph().params().size(); ++k) {
        EXPECT_TRUE(std::ranges::equal(a.graph().params()[k].values(), b.graph().params()[k].values()));
    }
}

TEST(Train, NonFiniteDataAborts) {
    Dataset ds = small_dataset(30, 8);
    ds.samples[0].obs.grid.fill(std::numeric_limits<double>::quiet_NaN());
    for (auto& s : ds.samples) s.label = 1;
    TrainConfig cfg;
    cfg.iterations = 500;
    GraspModel m = GraspModel::patch_net(PatchNetSpec{}, Interp::nearest, 1);
    EXPECT_THROW(train(m, ds, cfg), NumericError);
}

TEST(TrainRegression, MemorizesSingleSample) {
    const Dataset ds = small_dataset(200, 9).positives_only().subset(std::vector<std::size_t>{0});
    RegressionNetSpec spec;
    spec.keep_prob = 1.0;
    GraspModel m = GraspModel::regression(spec, 4);
    TrainConfig cfg = TrainConfig::regression_defaults();
    cfg.mirror = false;
    cfg.ridge = 0.0;
    cfg.batch_size = 1;
    cfg.iterations = 1500;
    train_regression(m, ds, cfg);
    const GraspConfig got = m.regress(ds.samples[0].obs);
    for (std::size_t d = 0; d < 4; ++d) EXPECT_NEAR(got[d], ds.samples[0].theta[d], 1e-2) << "coordinate " << d;
}

TEST(TrainRegression, RidgeShrinksWeights) {
    Dataset ds = small_dataset(300, 10).positives_only();
    ds = ds.subset(std::vector<std::size_t>{0, 1, 2, 3, 4, 0, 1, 2, 3, 4});
    TrainConfig cfg = TrainConfig::regression_defaults();
    cfg.iterations = 200;
    cfg.ridge = 0.0;
    GraspModel free = GraspModel::regression(RegressionNetSpec{}, 5);
    train_regression(free, ds, cfg);
    cfg.ridge = 0.5;
    GraspModel ridge = GraspModel::regression(RegressionNetSpec{}, 5);
    train_regression(ridge, ds, cfg);
    EXPECT_LT(weight_norm_sq(ridge.graph()), weight_norm_sq(free.graph()));
}

TEST(TrainRegression, RejectsClassifier) {
    GraspModel m = GraspModel::patch_net(PatchNetSpec{}, Interp::bilinear, 1);
    EXPECT_THROW(train_regression(m, small_dataset(10, 1), TrainConfig::regression_defaults()),
                 std::invalid_argument);
}
