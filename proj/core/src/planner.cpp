#include "graspinf/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "graspinf/errors.hpp"
#include "graspinf/io.hpp"
#include "graspinf/parallel.hpp"

namespace graspinf {

namespace {

double inf_norm_diff(const GraspConfig& a, const GraspConfig& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string("planner: non-finite ") + what);
}

unsigned image_slot_mask(const GraspModel& model) {
    const std::size_t images = model.arch() == Arch::config_net ? 1 : model.graph().slot_count();
    return (1u << images) - 1u;
}

std::string join(const GraspConfig& g) {
    std::string out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (i) out += ',';
        out += io::format_double(g[i]);
    }
    return out;
}

GraspConfig parse_config_list(std::string_view text, std::string_view what) {
    std::vector<double> v;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find(',', start);
        const auto end = pos == std::string_view::npos ? text.size() : pos;
        v.push_back(io::parse_double(text.substr(start, end - start), what));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return GraspConfig(std::move(v));
}

}  // namespace

std::string_view to_string(GradientMode m) { return m == GradientMode::config_only ? "config-only" : "full-chain"; }

GradientMode parse_gradient_mode(std::string_view text) {
    if (text == "config-only") return GradientMode::config_only;
    if (text == "full-chain") return GradientMode::full_chain;
    throw FormatError("unknown gradient mode '" + std::string(text) + "'");
}

std::string_view to_string(AcceptRule r) { return r == AcceptRule::armijo ? "armijo" : "increase"; }

AcceptRule parse_accept_rule(std::string_view text) {
    if (text == "armijo") return AcceptRule::armijo;
    if (text == "increase") return AcceptRule::increase;
    throw FormatError("unknown acceptance rule '" + std::string(text) + "'");
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::max_iterations: return "max-iterations";
        case Termination::line_search_failed: return "line-search-failed";
    }
    return "unknown";
}

Termination parse_termination(std::string_view text) {
    for (auto t : {Termination::converged, Termination::max_iterations, Termination::line_search_failed}) {
        if (to_string(t) == text) return t;
    }
    throw FormatError("unknown termination reason '" + std::string(text) + "'");
}

void PlannerConfig::validate() const {
    if (max_iterations < 0 || max_trials < 1) throw std::invalid_argument("planner: iteration limits must be positive");
    if (!(initial_step > 0.0) || !(shrink > 0.0 && shrink < 1.0) || !(armijo >= 0.0) || !(tolerance > 0.0) ||
        !(fd_eps > 0.0)) {
        throw std::invalid_argument("planner: step parameters must be positive");
    }
    if (!(translation >= 0.0) || !(angle >= 0.0) || !(opening >= 0.0)) {
        throw std::invalid_argument("planner: bound radii must be non-negative");
    }
}

BoxBounds inference_bounds(const GraspConfig& init, const PlannerConfig& cfg) {
    if (init.size() != theta::dim) throw std::invalid_argument("inference_bounds: expects a 4-entry configuration");
    const double r[4] = {cfg.translation, cfg.translation, cfg.angle, cfg.opening};
    const BoxBounds w = world::world_bounds();
    std::vector<double> lo(4), hi(4);
    for (std::size_t i = 0; i < 4; ++i) {
        lo[i] = std::clamp(init[i] - r[i], w.lower()[i], w.upper()[i]);
        hi[i] = std::clamp(init[i] + r[i], w.lower()[i], w.upper()[i]);
    }
    return BoxBounds(std::move(lo), std::move(hi));
}

// ---------------------------------------------------------------------------

ModelObjective::ModelObjective(const GraspModel& model, const world::Observation& obs, GradientMode mode,
                               double fd_eps)
    : model_(model), obs_(obs), mode_(mode), fd_eps_(fd_eps), anchor_(object_anchor(obs)) {
    if (!model.is_classifier()) throw std::invalid_argument("planner objective needs a classifier model");
}

void ModelObjective::evaluate(const GraspConfig& g) {
    if (cached_ && g == cached_theta_) return;
    unsigned changed = 0;
    const unsigned images = image_slot_mask(model_);
    if (inputs_.empty() || model_.patches_depend_on_config()) {
        auto img = model_.image_inputs(obs_, g);
        if (inputs_.empty()) inputs_.resize(model_.graph().slot_count());
        for (std::size_t i = 0; i < img.size(); ++i) inputs_[i] = std::move(img[i]);
        changed |= images;
    }
    if (model_.arch() == Arch::config_net) {
        inputs_.back() = model_.config_input(anchor_, g);
        changed |= 1u << (inputs_.size() - 1);
    }
    const GridTensor& out = ws_.has_forward() ? model_.graph().forward_update(ws_, inputs_, changed)
                                              : model_.graph().forward(ws_, inputs_, Mode::eval);
    cached_value_ = out[0];
    cached_theta_ = g;
    cached_ = true;
}

double ModelObjective::value(const GraspConfig& g) {
    evaluate(g);
    return cached_value_;
}

double ModelObjective::gradient(const GraspConfig& g, std::vector<double>& grad) {
    evaluate(g);
    grad.assign(dim(), 0.0);
    const bool config_net = model_.arch() == Arch::config_net;
    const bool patch_term = model_.patches_depend_on_config() && (!config_net || mode_ == GradientMode::full_chain);
    unsigned wanted = 0;
    if (config_net) wanted |= 1u << (inputs_.size() - 1);
    if (patch_term) wanted |= image_slot_mask(model_);
    if (wanted == 0) return cached_value_;
    const auto dx = model_.graph().backward_inputs(ws_, 1.0, wanted);
    if (config_net) {
        const GridTensor& dc = dx.back();
        for (std::size_t d = 0; d < grad.size(); ++d) grad[d] = dc[d];
    }
    if (patch_term) {
        const auto extra = finite_diff_patch_grad(model_, obs_, g, dx, fd_eps_);
        for (std::size_t d = 0; d < grad.size(); ++d) grad[d] += extra[d];
    }
    return cached_value_;
}

std::vector<double> grad_config_net(const GraspModel& model, const world::Observation& obs, const GraspConfig& g,
                                    GradientMode mode, double fd_eps) {
    if (model.arch() != Arch::config_net) throw std::invalid_argument("grad_config_net: not a config-net model");
    ModelObjective f(model, obs, mode, fd_eps);
    std::vector<double> grad;
    f.gradient(g, grad);
    return grad;
}

std::vector<double> grad_patch_net(const GraspModel& model, const world::Observation& obs, const GraspConfig& g,
                                   double fd_eps) {
    if (model.arch() != Arch::patch_net) throw std::invalid_argument("grad_patch_net: not a patch-net model");
    ModelObjective f(model, obs, GradientMode::full_chain, fd_eps);
    std::vector<double> grad;
    f.gradient(g, grad);
    return grad;
}

std::vector<GridTensor> patch_derivative(const GraspModel& model, const world::Observation& obs, const GraspConfig& g,
                                         std::size_t coord, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("patch_derivative: eps must be positive");
    GraspConfig up = g;
    GraspConfig down = g;
    up[coord] += eps;
    down[coord] -= eps;
    auto plus = model.image_inputs(obs, up);
    const auto minus = model.image_inputs(obs, down);
    const double inv = 1.0 / (2.0 * eps);
    for (std::size_t i = 0; i < plus.size(); ++i) {
        auto p = plus[i].data();
        const auto m = minus[i].data();
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = (p[k] - m[k]) * inv;
    }
    return plus;
}

std::vector<double> finite_diff_patch_grad(const GraspModel& model, const world::Observation& obs,
                                           const GraspConfig& g, std::span<const GridTensor> upstream, double eps) {
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t d = 0; d < g.size(); ++d) {
        const auto dp = patch_derivative(model, obs, g, d, eps);
        double s = 0.0;
        for (std::size_t i = 0; i < dp.size(); ++i) {
            if (i >= upstream.size() || upstream[i].size() == 0) continue;
            const auto a = upstream[i].data();
            const auto b = dp[i].data();
            for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
        }
        out[d] = s;
    }
    return out;
}

// ---------------------------------------------------------------------------

PlanResult ascend(Objective& f, const GraspConfig& theta0, const BoxBounds& bounds, const PlannerConfig& cfg) {
    cfg.validate();
    if (theta0.size() != f.dim() || bounds.size() != f.dim()) throw ShapeError("ascend: dimension mismatch");
    const auto start = std::chrono::steady_clock::now();
    PlanResult r;
    r.theta0 = theta0;
    GraspConfig theta = project(theta0, bounds);
    std::vector<double> grad;
    double p = f.gradient(theta, grad);
    check_finite(p, "objective");
    r.p0 = p;
    r.trace.push_back({theta, p, 0.0});
    r.reason = Termination::max_iterations;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        double gnorm2 = 0.0;
        for (double v : grad) {
            check_finite(v, "gradient");
            gnorm2 += v * v;
        }
        double alpha = cfg.initial_step;
        bool accepted = false;
        bool converged = false;
        GraspConfig cand = theta;
        double pc = p;
        for (int trial = 0; trial < cfg.max_trials; ++trial) {
            for (std::size_t d = 0; d < theta.size(); ++d) cand[d] = theta[d] + alpha * grad[d];
            cand = project(cand, bounds);
            if (inf_norm_diff(cand, theta) < cfg.tolerance) {
                converged = trial == 0;
                break;
            }
            pc = f.value(cand);
            check_finite(pc, "objective");
            const bool ok = cfg.accept == AcceptRule::armijo ? pc >= p + cfg.armijo * alpha * gnorm2 : pc > p;
            if (ok) {
                accepted = true;
                break;
            }
            alpha *= cfg.shrink;
        }
        if (!accepted) {
            r.reason = converged ? Termination::converged : Termination::line_search_failed;
            break;
        }
        theta = cand;
        p = f.gradient(theta, grad);
        r.trace.push_back({theta, p, alpha});
        ++r.iterations;
    }
    r.theta = theta;
    r.p = p;
    r.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

PlanResult ascend(const GraspModel& model, const world::Observation& obs, const GraspConfig& theta0,
                  const PlannerConfig& cfg) {
    ModelObjective f(model, obs, cfg.mode, cfg.fd_eps);
    return ascend(f, theta0, inference_bounds(theta0, cfg), cfg);
}

PlanResult plan_multi_init(const GraspModel& model, const world::Observation& obs, std::span<const GraspConfig> inits,
                           const PlannerConfig& cfg, unsigned workers, std::vector<PlanResult>* all) {
    if (inits.empty()) throw std::invalid_argument("plan_multi_init: no initializations");
    std::vector<PlanResult> results(inits.size());
    parallel_for(inits.size(), workers, [&](std::size_t i) {
        results[i] = ascend(model, obs, inits[i], cfg);
        results[i].init_index = i;
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (results[i].p > results[best].p) best = i;
    }
    PlanResult out = results[best];
    if (all) *all = std::move(results);
    return out;
}

Ranked max_eval(const GraspModel& model, const world::Observation& obs, std::span<const GraspConfig> inits) {
    if (inits.empty()) throw std::invalid_argument("max_eval: no initializations");
    ModelObjective f(model, obs, GradientMode::config_only);
    Ranked best{0, inits[0], f.value(inits[0])};
    for (std::size_t i = 1; i < inits.size(); ++i) {
        const double p = f.value(inits[i]);
        if (p > best.p) best = {i, inits[i], p};
    }
    return best;
}

Ranked sample_and_rank(const GraspModel& model, const world::Observation& obs, const BoxBounds& bounds, int n,
                       std::mt19937_64& rng) {
    if (n < 1) throw std::invalid_argument("sample_and_rank: n must be at least 1");
    if (bounds.size() != model.dim()) throw ShapeError("sample_and_rank: bounds dimension mismatch");
    ModelObjective f(model, obs, GradientMode::config_only);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Ranked best;
    for (int k = 0; k < n; ++k) {
        GraspConfig g(std::vector<double>(bounds.size()));
        for (std::size_t d = 0; d < g.size(); ++d) {
            g[d] = bounds.lower()[d] + (bounds.upper()[d] - bounds.lower()[d]) * unit(rng);
        }
        const double p = f.value(g);
        if (k == 0 || p > best.p) best = {static_cast<std::size_t>(k), g, p};
    }
    return best;
}

// ---------------------------------------------------------------------------

std::string to_record(const PlanResult& r) {
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.3f", r.ms);
    std::ostringstream out;
    out << "init=" << r.init_index << " iters=" << r.iterations << " p0=" << io::format_double(r.p0)
        << " p=" << io::format_double(r.p) << " theta=" << join(r.theta) << " reason=" << to_string(r.reason)
        << " ms=" << ms;
    return out.str();
}

PlanResult parse_plan_record(std::string_view line) {
    PlanResult r;
    int seen = 0;
    for (const auto& tok : io::split_ws(line)) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw FormatError("plan record: malformed field '" + tok + "'");
        const std::string_view key = std::string_view(tok).substr(0, eq);
        const std::string_view val = std::string_view(tok).substr(eq + 1);
        if (key == "init") {
            r.init_index = static_cast<std::size_t>(io::parse_int(val, key));
        } else if (key == "iters") {
            r.iterations = static_cast<int>(io::parse_int(val, key));
        } else if (key == "p0") {
            r.p0 = io::parse_double(val, key);
        } else if (key == "p") {
            r.p = io::parse_double(val, key);
        } else if (key == "theta") {
            r.theta = parse_config_list(val, key);
        } else if (key == "reason") {
            r.reason = parse_termination(val);
        } else if (key == "ms") {
            r.ms = io::parse_double(val, key);
        } else {
            throw FormatError("plan record: unknown field '" + std::string(key) + "'");
        }
        ++seen;
    }
    if (seen != 7) throw FormatError("plan record: expected 7 fields");
    return r;
}

std::vector<GraspConfig> parse_init_file(std::istream& in, std::size_t dim) {
    std::vector<GraspConfig> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        const auto tok = io::split_ws(line);
        if (tok.empty()) continue;
        const std::string where = "init file line " + std::to_string(lineno);
        if (tok.size() != dim) {
            throw FormatError(where + ": expected " + std::to_string(dim) + " values, got " + std::to_string(tok.size()));
        }
        std::vector<double> v;
        for (const auto& t : tok) {
            const double x = io::parse_double(t, where);
            if (!std::isfinite(x)) throw FormatError(where + ": non-finite value");
            v.push_back(x);
        }
        out.emplace_back(std::move(v));
    }
    if (out.empty()) throw FormatError("init file contains no configurations");
    return out;
}

}  // namespace graspinf
