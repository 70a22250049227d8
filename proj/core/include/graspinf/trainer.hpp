#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "graspinf/dataset.hpp"
#include "graspinf/model.hpp"

namespace graspinf {

struct TrainConfig {
    int batch_size = 8;
    int iterations = 6000;
    double lr = 1e-3;
    double decay = 0.1;
    int decay_every = 2000;
    bool oversample = true;
    bool mirror = true;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double ridge = 0.5;  ///< regression only

    static TrainConfig config_net_defaults();
    static TrainConfig patch_net_defaults();
    static TrainConfig regression_defaults();
    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
};

/// -y log p - (1-y) log(1-p) with p clamped to [1e-12, 1-1e-12].
double cross_entropy_loss(double p, int y);
/// d loss / d p at the clamped p.
double cross_entropy_grad(double p, int y);

/// lr * decay^floor(t / decay_every).
double learning_rate(const TrainConfig& cfg, int iteration);

/// Uniform draws with replacement. With oversampling on and no positive drawn, one
/// uniformly chosen slot is replaced by a uniformly chosen positive.
std::vector<std::size_t> sample_minibatch(std::size_t dataset_size, std::span<const std::size_t> positives,
                                          int batch_size, bool oversample, std::mt19937_64& rng);
std::vector<std::size_t> sample_minibatch(const Dataset& ds, const TrainConfig& cfg, std::mt19937_64& rng);

/// Left-right reflection of scene, shape and configuration; the label is kept.
GraspSample mirror_augment(const GraspSample& s);

class Adam {
public:
    Adam(const Graph& graph, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(std::vector<ParamVector>& params, const ParamGradients& grads, double lr);
    [[nodiscard]] long steps() const noexcept { return t_; }

private:
    double beta1_;
    double beta2_;
    double eps_;
    long t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

struct TrainResult {
    std::vector<double> loss;  ///< batch-mean loss per iteration
    std::vector<double> lr;    ///< learning rate used at each iteration
};

using TrainCallback = std::function<void(int iteration, double loss, double lr)>;

/// Minibatch Adam on batch-mean cross-entropy. Deterministic given cfg.seed.
/// Throws NumericError (with iteration and lr) on a non-finite loss.
TrainResult train(GraspModel& model, const Dataset& ds, const TrainConfig& cfg, const TrainCallback& cb = {});

/// Minibatch Adam on batch-mean squared error plus (ridge / M) * ||w||^2 over weights
/// (biases excluded), i.e. the summed objective divided by the training set size M.
TrainResult train_regression(GraspModel& model, const Dataset& ds, const TrainConfig& cfg,
                             const TrainCallback& cb = {});

/// Sum of squares of every non-bias parameter.
double weight_norm_sq(const Graph& graph);

}  // namespace graspinf
