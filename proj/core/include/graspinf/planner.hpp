#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "graspinf/grasp.hpp"
#include "graspinf/model.hpp"
#include "graspinf/world.hpp"

namespace graspinf {

enum class GradientMode { config_only, full_chain };
/// Armijo sufficient increase, or plain f(theta') > f(theta).
enum class AcceptRule { armijo, increase };

std::string_view to_string(GradientMode m);
GradientMode parse_gradient_mode(std::string_view text);
std::string_view to_string(AcceptRule r);
AcceptRule parse_accept_rule(std::string_view text);

struct PlannerConfig {
    int max_iterations = 100;
    double initial_step = 1e-3;
    int max_trials = 10;
    double shrink = 0.5;
    double armijo = 1e-4;
    double tolerance = 1e-6;  ///< on ||theta_{t+1} - theta_t||_inf
    double fd_eps = 1e-3;
    GradientMode mode = GradientMode::config_only;
    AcceptRule accept = AcceptRule::armijo;
    double translation = 0.1;  ///< half-width of the box around the init, world units
    double angle = 0.3;        ///< radians
    double opening = 0.05;     ///< world units

    void validate() const;
};

/// Box of half-widths (translation, translation, angle, opening) around `init`,
/// intersected with the world limits.
BoxBounds inference_bounds(const GraspConfig& init, const PlannerConfig& cfg);

/// Scalar function of a configuration that the planner maximizes.
class Objective {
public:
    virtual ~Objective() = default;
    [[nodiscard]] virtual std::size_t dim() const = 0;
    virtual double value(const GraspConfig& g) = 0;
    /// Writes d value / d theta into `grad` and returns value(g).
    virtual double gradient(const GraspConfig& g, std::vector<double>& grad) = 0;
};

/// A trained classifier on one fixed observation. Owns its workspace, so one instance
/// per thread. Config-net image inputs that do not depend on theta are computed once.
class ModelObjective final : public Objective {
public:
    ModelObjective(const GraspModel& model, const world::Observation& obs, GradientMode mode, double fd_eps = 1e-3);

    [[nodiscard]] std::size_t dim() const override { return model_.dim(); }
    double value(const GraspConfig& g) override;
    double gradient(const GraspConfig& g, std::vector<double>& grad) override;

private:
    void evaluate(const GraspConfig& g);

    const GraspModel& model_;
    const world::Observation& obs_;
    GradientMode mode_;
    double fd_eps_;
    world::Vec2 anchor_;
    Workspace ws_;
    std::vector<GridTensor> inputs_;
    bool cached_ = false;
    GraspConfig cached_theta_;
    double cached_value_ = 0.0;
};

/// Config-net gradient. config-only: the configuration-branch term alone; full-chain
/// adds the image term with the patch derivative taken by central differences.
std::vector<double> grad_config_net(const GraspModel& model, const world::Observation& obs, const GraspConfig& g,
                                    GradientMode mode, double fd_eps = 1e-3);
/// Patch-net gradient: sum over patches of (d f / d patch) (d patch / d theta).
std::vector<double> grad_patch_net(const GraspModel& model, const world::Observation& obs, const GraspConfig& g,
                                   double fd_eps = 1e-3);

/// Central-difference derivative of every image input w.r.t. coordinate `coord`.
std::vector<GridTensor> patch_derivative(const GraspModel& model, const world::Observation& obs, const GraspConfig& g,
                                         std::size_t coord, double eps);
/// sum_i <upstream_i, d patch_i / d theta_d> for every coordinate d, as 2*D extractions.
std::vector<double> finite_diff_patch_grad(const GraspModel& model, const world::Observation& obs,
                                           const GraspConfig& g, std::span<const GridTensor> upstream, double eps);

enum class Termination { converged, max_iterations, line_search_failed };

std::string_view to_string(Termination t);
Termination parse_termination(std::string_view text);

struct PlanStep {
    GraspConfig theta;
    double p = 0.0;
    double step = 0.0;  ///< accepted step length alpha (0 for the initial entry)
};

struct PlanResult {
    std::size_t init_index = 0;
    GraspConfig theta0;
    GraspConfig theta;  ///< final iterate
    double p0 = 0.0;
    double p = 0.0;
    int iterations = 0;  ///< accepted steps
    Termination reason = Termination::converged;
    double ms = 0.0;
    std::vector<PlanStep> trace;  ///< initial point, then every accepted step
};

/// Projected gradient ascent with backtracking line search inside `bounds`.
PlanResult ascend(Objective& f, const GraspConfig& theta0, const BoxBounds& bounds, const PlannerConfig& cfg);
/// Ascent on a model within inference_bounds(theta0).
PlanResult ascend(const GraspModel& model, const world::Observation& obs, const GraspConfig& theta0,
                  const PlannerConfig& cfg);

/// Runs ascend from every init and returns the one with the highest final p; ties go
/// to the lowest index. `all`, when given, receives every per-init result.
PlanResult plan_multi_init(const GraspModel& model, const world::Observation& obs, std::span<const GraspConfig> inits,
                           const PlannerConfig& cfg, unsigned workers = 1, std::vector<PlanResult>* all = nullptr);

struct Ranked {
    std::size_t index = 0;
    GraspConfig theta;
    double p = 0.0;
};

/// Scores each init once and returns the argmax (lowest index on ties).
Ranked max_eval(const GraspModel& model, const world::Observation& obs, std::span<const GraspConfig> inits);
/// n uniform draws inside `bounds`, scored by the model; argmax, lowest index on ties.
Ranked sample_and_rank(const GraspModel& model, const world::Observation& obs, const BoxBounds& bounds, int n,
                       std::mt19937_64& rng);

/// `init=<i> iters=<n> p0=<p> p=<p> theta=<a,b,..> reason=<r> ms=<t>`
std::string to_record(const PlanResult& r);
PlanResult parse_plan_record(std::string_view line);

/// One configuration per line, comma- or space-separated; '#' starts a comment.
/// Errors name the offending line number.
std::vector<GraspConfig> parse_init_file(std::istream& in, std::size_t dim);

}  // namespace graspinf
