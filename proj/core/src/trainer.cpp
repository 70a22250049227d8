#include "graspinf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "graspinf/errors.hpp"
#include "graspinf/rng.hpp"

namespace graspinf {

namespace {

constexpr double kProbFloor = 1e-12;
constexpr std::uint64_t kBatchStream = 0x62617463;    // "batc"
constexpr std::uint64_t kDropoutStream = 0x64726f70;  // "drop"

void accumulate(ParamGradients& total, const ParamGradients& g) {
    for (std::size_t k = 0; k < total.size(); ++k) {
        for (std::size_t i = 0; i < total[k].size(); ++i) total[k][i] += g[k][i];
    }
}

[[noreturn]] void numeric_failure(int iteration, double lr, const std::string& what) {
    std::ostringstream msg;
    msg << "training diverged at iteration " << iteration << " (lr " << lr << "): " << what;
    throw NumericError(msg.str());
}

GraspSample maybe_mirror(const GraspSample& s, bool mirror, std::mt19937_64& rng) {
    if (mirror && std::bernoulli_distribution(0.5)(rng)) return mirror_augment(s);
    return s;
}

}  // namespace

TrainConfig TrainConfig::config_net_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::patch_net_defaults() {
    TrainConfig c;
    c.iterations = 60000;
    c.decay_every = 20000;
    return c;
}

TrainConfig TrainConfig::regression_defaults() {
    TrainConfig c;
    c.oversample = false;
    return c;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
    if (oversample && batch_size < 2) throw std::invalid_argument("oversampling needs a batch size of at least 2");
    if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
    if (!(lr > 0.0) || !(decay > 0.0) || decay_every < 1) throw std::invalid_argument("invalid learning-rate schedule");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
        throw std::invalid_argument("invalid Adam hyperparameters");
    }
    if (!(ridge >= 0.0)) throw std::invalid_argument("ridge strength must be non-negative");
}

double cross_entropy_loss(double p, int y) {
    p = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
    return y == 1 ? -std::log(p) : -std::log1p(-p);
}

double cross_entropy_grad(double p, int y) {
    p = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
    return y == 1 ? -1.0 / p : 1.0 / (1.0 - p);
}

double learning_rate(const TrainConfig& cfg, int iteration) {
    return cfg.lr * std::pow(cfg.decay, iteration / cfg.decay_every);
}

std::vector<std::size_t> sample_minibatch(std::size_t dataset_size, std::span<const std::size_t> positives,
                                          int batch_size, bool oversample, std::mt19937_64& rng) {
    if (dataset_size == 0) throw std::invalid_argument("sample_minibatch: empty dataset");
    if (oversample && positives.empty()) throw std::invalid_argument("sample_minibatch: oversampling needs a positive");
    std::uniform_int_distribution<std::size_t> any(0, dataset_size - 1);
    std::vector<std::size_t> batch(static_cast<std::size_t>(batch_size));
    for (auto& b : batch) b = any(rng);
    if (oversample) {
        const bool has_positive = std::any_of(batch.begin(), batch.end(), [&](std::size_t i) {
            return std::binary_search(positives.begin(), positives.end(), i);
        });
        if (!has_positive) {
            const std::size_t slot = std::uniform_int_distribution<std::size_t>(0, batch.size() - 1)(rng);
            batch[slot] = positives[std::uniform_int_distribution<std::size_t>(0, positives.size() - 1)(rng)];
        }
    }
    return batch;
}

std::vector<std::size_t> sample_minibatch(const Dataset& ds, const TrainConfig& cfg, std::mt19937_64& rng) {
    const auto pos = ds.positive_indices();
    return sample_minibatch(ds.size(), pos, cfg.batch_size, cfg.oversample, rng);
}

GraspSample mirror_augment(const GraspSample& s) {
    GraspSample m;
    m.shape = world::mirror(s.shape);
    m.obs = world::mirror(s.obs);
    m.theta = world::mirror(s.theta);
    m.label = s.label;
    return m;
}

Adam::Adam(const Graph& graph, double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : graph.params()) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::step(std::vector<ParamVector>& params, const ParamGradients& grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) throw std::invalid_argument("Adam: parameter mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto w = params[k].values();
        const auto& g = grads[k];
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }
}

TrainResult train(GraspModel& model, const Dataset& ds, const TrainConfig& cfg, const TrainCallback& cb) {
    cfg.validate();
    if (!model.is_classifier()) throw std::invalid_argument("train: regression models use train_regression");
    if (ds.size() == 0) throw std::invalid_argument("train: empty dataset");
    const auto positives = ds.positive_indices();
    Graph& graph = model.graph();
    Adam adam(graph, cfg.beta1, cfg.beta2, cfg.eps);
    std::mt19937_64 rng(derive_seed(cfg.seed, kBatchStream));
    Workspace ws;
    ParamGradients total = graph.zero_gradients();
    ParamGradients g;
    TrainResult result;
    result.loss.reserve(cfg.iterations);
    result.lr.reserve(cfg.iterations);
    const double inv_b = 1.0 / cfg.batch_size;
    for (int t = 0; t < cfg.iterations; ++t) {
        const double lr = learning_rate(cfg, t);
        const auto batch = sample_minibatch(ds.size(), positives, cfg.batch_size, cfg.oversample, rng);
        for (auto& v : total) std::fill(v.begin(), v.end(), 0.0);
        double loss = 0.0;
        for (std::size_t k = 0; k < batch.size(); ++k) {
            const GraspSample s = maybe_mirror(ds.samples[batch[k]], cfg.mirror, rng);
            const auto in = model.inputs(s.obs, s.theta);
            double p = 0.0;
            try {
                p = graph.forward_scalar(ws, in, Mode::train,
                                         derive_seed(cfg.seed, kDropoutStream, static_cast<std::uint64_t>(t) * batch.size() + k));
            } catch (const NumericError& e) {
                numeric_failure(t, lr, e.what());
            }
            loss += cross_entropy_loss(p, s.label) * inv_b;
            graph.backward_weights(ws, cross_entropy_grad(p, s.label) * inv_b, g);
            accumulate(total, g);
        }
        if (!std::isfinite(loss)) numeric_failure(t, lr, "non-finite loss");
        adam.step(graph.params(), total, lr);
        result.loss.push_back(loss);
        result.lr.push_back(lr);
        if (cb) cb(t, loss, lr);
    }
    return result;
}

double weight_norm_sq(const Graph& graph) {
    double s = 0.0;
    for (const auto& p : graph.params()) {
        if (p.is_bias()) continue;
        for (double v : p.values()) s += v * v;
    }
    return s;
}

TrainResult train_regression(GraspModel& model, const Dataset& ds, const TrainConfig& cfg, const TrainCallback& cb) {
    cfg.validate();
    if (model.arch() != Arch::regression) throw std::invalid_argument("train_regression: not a regression model");
    if (ds.size() == 0) throw std::invalid_argument("train_regression: empty dataset");
    Graph& graph = model.graph();
    const std::size_t dim = model.dim();
    Adam adam(graph, cfg.beta1, cfg.beta2, cfg.eps);
    std::mt19937_64 rng(derive_seed(cfg.seed, kBatchStream));
    Workspace ws;
    ParamGradients total = graph.zero_gradients();
    ParamGradients g;
    TrainResult result;
    const double inv_b = 1.0 / cfg.batch_size;
    const double ridge = cfg.ridge / static_cast<double>(ds.size());
    for (int t = 0; t < cfg.iterations; ++t) {
        const double lr = learning_rate(cfg, t);
        const auto batch = sample_minibatch(ds.size(), {}, cfg.batch_size, false, rng);
        for (auto& v : total) std::fill(v.begin(), v.end(), 0.0);
        double loss = 0.0;
        for (std::size_t k = 0; k < batch.size(); ++k) {
            const GraspSample s = maybe_mirror(ds.samples[batch[k]], cfg.mirror, rng);
            if (s.theta.size() != dim) throw ShapeError("regression target has the wrong dimension");
            const std::vector<GridTensor> in{s.obs.grid};
            const GridTensor* out = nullptr;
            try {
                out = &graph.forward(ws, in, Mode::train,
                                     derive_seed(cfg.seed, kDropoutStream, static_cast<std::uint64_t>(t) * batch.size() + k));
            } catch (const NumericError& e) {
                numeric_failure(t, lr, e.what());
            }
            GridTensor upstream(out->shape());
            for (std::size_t d = 0; d < dim; ++d) {
                const double r = (*out)[d] - s.theta[d];
                loss += r * r * inv_b;
                upstream[d] = 2.0 * r * inv_b;
            }
            graph.backward_weights(ws, upstream, g);
            accumulate(total, g);
        }
        if (ridge > 0.0) {
            const auto& params = graph.params();
            for (std::size_t p = 0; p < params.size(); ++p) {
                if (params[p].is_bias()) continue;
                const auto w = params[p].values();
                for (std::size_t i = 0; i < w.size(); ++i) {
                    loss += ridge * w[i] * w[i];
                    total[p][i] += 2.0 * ridge * w[i];
                }
            }
        }
        if (!std::isfinite(loss)) numeric_failure(t, lr, "non-finite loss");
        adam.step(graph.params(), total, lr);
        result.loss.push_back(loss);
        result.lr.push_back(lr);
        if (cb) cb(t, loss, lr);
    }
    return result;
}

}  // namespace graspinf
