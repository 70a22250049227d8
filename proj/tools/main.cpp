#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "graspinf/dataset.hpp"
#include "graspinf/errors.hpp"
#include "graspinf/eval.hpp"
#include "graspinf/io.hpp"
#include "graspinf/model.hpp"
#include "graspinf/planner.hpp"
#include "graspinf/rng.hpp"
#include "graspinf/trainer.hpp"
#include "graspinf/world.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace graspinf;
using graspinf::cli::RunConfig;
using graspinf::cli::UsageError;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr std::uint64_t kPlanSceneStream = 0x706c616e;  // "plan"

// --- shared settings ----------------------------------------------------------

void declare_world(RunConfig& c) {
    for (const auto& [key, value] : world::world_params(world::WorldConfig{})) {
        c.declare("world." + key, io::format_double(value), "toy-world constant " + key);
    }
}

world::WorldConfig world_config(const RunConfig& c) {
    world::WorldConfig w;
    for (const auto& key : c.keys_with_prefix("world.")) world::set_world_param(w, key, c.real("world." + key));
    if (w.grid < 4) throw UsageError("world.grid must be at least 4");
    return w;
}

void declare_planner(RunConfig& c) {
    const PlannerConfig d;
    c.declare("planner.max-iterations", std::to_string(d.max_iterations), "ascent iterations per init");
    c.declare("planner.initial-step", io::format_double(d.initial_step), "line-search initial step");
    c.declare("planner.max-trials", std::to_string(d.max_trials), "line-search trials per iteration");
    c.declare("planner.shrink", io::format_double(d.shrink), "line-search step multiplier");
    c.declare("planner.armijo", io::format_double(d.armijo), "Armijo slope fraction");
    c.declare("planner.tolerance", io::format_double(d.tolerance), "convergence tolerance on the step inf-norm");
    c.declare("planner.fd-eps", io::format_double(d.fd_eps), "finite-difference step for patch derivatives");
    c.declare("planner.accept", "armijo", "line-search acceptance rule: armijo | increase");
    c.declare("planner.translation", io::format_double(d.translation), "translation radius around each init");
    c.declare("planner.angle", io::format_double(d.angle), "angle radius around each init (rad)");
    c.declare("planner.opening", io::format_double(d.opening), "opening radius around each init");
    c.declare("mode", "config-only", "gradient mode: config-only | full-chain");
}

PlannerConfig planner_config(const RunConfig& c) {
    PlannerConfig p;
    p.max_iterations = static_cast<int>(c.integer("planner.max-iterations"));
    p.initial_step = c.real("planner.initial-step");
    p.max_trials = static_cast<int>(c.integer("planner.max-trials"));
    p.shrink = c.real("planner.shrink");
    p.armijo = c.real("planner.armijo");
    p.tolerance = c.real("planner.tolerance");
    p.fd_eps = c.real("planner.fd-eps");
    p.translation = c.real("planner.translation");
    p.angle = c.real("planner.angle");
    p.opening = c.real("planner.opening");
    try {
        p.accept = parse_accept_rule(c.str("planner.accept"));
        p.mode = parse_gradient_mode(c.str("mode"));
        p.validate();
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    return p;
}

void declare_training(RunConfig& c) {
    c.declare("arch", "config-net", "architecture: config-net | patch-net | regression");
    c.declare("iters", "auto", "training iterations (auto: 6000 config-net/regression, 60000 patch-net)");
    c.declare("decay-every", "auto", "iterations between learning-rate decays (auto: 2000 / 20000)");
    c.declare("batch", "8", "minibatch size");
    c.declare("lr", "0.001", "initial learning rate");
    c.declare("decay", "0.1", "learning-rate decay factor");
    c.declare("keep", "0.75", "dropout keep probability");
    c.declare("oversample", "true", "guarantee a positive in every minibatch (classifiers)");
    c.declare("mirror", "true", "random left-right mirror augmentation");
    c.declare("ridge", "0.5", "ridge strength on weights (regression)");
    c.declare("patch-mode", "fixed", "config-net object patch: fixed | palm-tracked");
    c.declare("interp", "bilinear", "patch sampling: bilinear | nearest");
}

Arch arch_setting(const RunConfig& c) {
    try {
        return parse_arch(c.str("arch"));
    } catch (const FormatError& e) {
        throw UsageError(e.what());
    }
}

TrainConfig train_config(const RunConfig& c, Arch arch) {
    TrainConfig t = arch == Arch::patch_net    ? TrainConfig::patch_net_defaults()
                    : arch == Arch::regression ? TrainConfig::regression_defaults()
                                               : TrainConfig::config_net_defaults();
    if (c.str("iters") != "auto") t.iterations = static_cast<int>(c.integer("iters"));
    if (c.str("decay-every") != "auto") t.decay_every = static_cast<int>(c.integer("decay-every"));
    t.batch_size = static_cast<int>(c.integer("batch"));
    t.lr = c.real("lr");
    t.decay = c.real("decay");
    t.oversample = arch != Arch::regression && c.boolean("oversample");
    t.mirror = c.boolean("mirror");
    t.ridge = c.real("ridge");
    t.seed = static_cast<std::uint64_t>(c.integer("seed"));
    if (t.iterations < 1) throw UsageError("iters must be at least 1");
    try {
        t.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return t;
}

GraspModel fresh_model(const RunConfig& c, Arch arch, std::uint64_t seed) {
    const double keep = c.real("keep");
    if (!(keep > 0.0 && keep <= 1.0)) throw UsageError("keep must be in (0, 1]");
    Interp interp{};
    PatchMode mode{};
    try {
        interp = parse_interp(c.str("interp"));
        mode = parse_patch_mode(c.str("patch-mode"));
    } catch (const FormatError& e) {
        throw UsageError(e.what());
    }
    switch (arch) {
        case Arch::config_net: {
            ConfigNetSpec s;
            s.keep_prob = keep;
            return GraspModel::config_net(s, mode, interp, seed);
        }
        case Arch::patch_net: {
            PatchNetSpec s;
            s.keep_prob = keep;
            return GraspModel::patch_net(s, interp, seed);
        }
        case Arch::regression: {
            RegressionNetSpec s;
            s.keep_prob = keep;
            return GraspModel::regression(s, seed);
        }
    }
    throw UsageError("unknown architecture");
}

/// "all", or a comma list of ids and inclusive ranges such as "0-7,12".
std::vector<world::Family> families_setting(const RunConfig& c, const std::string& key) {
    const auto pool = world::default_families();
    if (c.str(key) == "all") return pool;
    std::vector<std::uint32_t> ids;
    for (const auto& item : c.list(key)) {
        const auto dash = item.find('-');
        try {
            if (dash == std::string::npos) {
                ids.push_back(static_cast<std::uint32_t>(io::parse_int(item, key)));
            } else {
                const auto lo = io::parse_int(item.substr(0, dash), key);
                const auto hi = io::parse_int(item.substr(dash + 1), key);
                if (lo > hi) throw UsageError(key + ": empty range '" + item + "'");
                for (auto i = lo; i <= hi; ++i) ids.push_back(static_cast<std::uint32_t>(i));
            }
        } catch (const FormatError& e) {
            throw UsageError(e.what());
        }
    }
    if (ids.empty()) throw UsageError(key + ": no families selected");
    try {
        return world::select_families(pool, ids);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

unsigned workers_setting(const RunConfig& c) {
    const auto w = c.integer("workers");
    if (w < 1) throw UsageError("workers must be at least 1");
    return static_cast<unsigned>(w);
}

void require(const RunConfig& c, const std::string& key) {
    if (c.str(key).empty()) throw UsageError("--" + key + " is required");
}

void write_text(const fs::path& path, const std::string& text) {
    io::write_atomically(path, false, [&](std::ostream& out) { out << text; });
}

// --- commands -------------------------------------------------------------------

int cmd_gen_data(const RunConfig& c) {
    require(c, "out");
    const auto n = c.integer("n");
    if (n < 1) throw UsageError("--n must be at least 1");
    const auto fams = families_setting(c, "families");
    const Dataset ds = collect_dataset(static_cast<std::size_t>(n), static_cast<std::uint64_t>(c.integer("seed")), fams,
                                       world_config(c), workers_setting(c));
    save_dataset(ds, c.str("out"));
    std::printf("wrote %zu records to %s: %zu positive (%.2f%%), %zu families\n", ds.size(), c.str("out").c_str(),
                ds.positives(), 100.0 * ds.positive_rate(), fams.size());
    return 0;
}

int cmd_train(const RunConfig& c) {
    require(c, "data");
    require(c, "out");
    const Arch arch = arch_setting(c);
    const TrainConfig tc = train_config(c, arch);
    Dataset ds = load_dataset(c.str("data"));
    GraspModel model = fresh_model(c, arch, derive_seed(tc.seed, 0x696e6974));  // "init"
    std::ostringstream trace;
    trace << "# iteration loss lr\n";
    const auto log = [&](int t, double loss, double lr) {
        trace << t << ' ' << io::format_double(loss) << ' ' << io::format_double(lr) << '\n';
    };
    TrainResult res;
    if (arch == Arch::regression) {
        const std::size_t total = ds.size();
        ds = ds.positives_only();
        std::fprintf(stderr, "regression trains on positives only: %zu of %zu samples\n", ds.size(), total);
        if (ds.size() == 0) throw FormatError("dataset has no positive samples to regress on");
        res = train_regression(model, ds, tc, log);
    } else {
        if (tc.oversample && ds.positives() == 0) throw FormatError("dataset has no positives; cannot oversample");
        res = train(model, ds, tc, log);
    }
    save_checkpoint(model, c.str("out"));
    const std::string loss_out = c.str("loss-out").empty() ? c.str("out") + ".loss" : c.str("loss-out");
    write_text(loss_out, trace.str());
    double tail = 0.0;
    const std::size_t k = std::min<std::size_t>(100, res.loss.size());
    for (std::size_t i = res.loss.size() - k; i < res.loss.size(); ++i) tail += res.loss[i];
    std::printf("trained %s for %d iterations on %zu samples (%zu parameters); final mean loss %.5f\n",
                std::string(to_string(arch)).c_str(), tc.iterations, ds.size(), model.graph().parameter_count(),
                k ? tail / static_cast<double>(k) : 0.0);
    std::printf("checkpoint: %s\nloss trace: %s\n", c.str("out").c_str(), loss_out.c_str());
    return 0;
}

int cmd_eval(const RunConfig& c) {
    require(c, "data");
    const auto folds = c.integer("folds");
    if (folds < 2) throw UsageError("--folds must be at least 2");
    FoldMode mode{};
    try {
        mode = parse_fold_mode(c.str("mode"));
    } catch (const FormatError& e) {
        throw UsageError(e.what());
    }
    std::optional<ModelInfo> info;
    if (!c.str("model").empty()) {
        info = load_checkpoint(c.str("model")).info();
        if (info->arch == Arch::regression) {
            throw UsageError("'" + c.str("model") + "' is a regression checkpoint; classification metrics need a classifier");
        }
    }
    const Arch arch = info ? info->arch : arch_setting(c);
    if (arch == Arch::regression) throw UsageError("classification metrics need a classifier architecture");
    const TrainConfig tc = train_config(c, arch);
    const Dataset ds = load_dataset(c.str("data"));
    const auto seed = static_cast<std::uint64_t>(c.integer("seed"));
    FoldSplit split;
    try {
        split = make_folds(ds, mode, static_cast<int>(folds), seed);
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    const ModelFactory factory = [&](int fold) {
        GraspModel m = fresh_model(c, arch, derive_seed(seed, 0x696e6974, static_cast<std::uint64_t>(fold)));
        if (info && arch == Arch::config_net) {
            ConfigNetSpec s;
            s.keep_prob = c.real("keep");
            m = GraspModel::config_net(s, info->patch_mode, info->interp, m.info().seed);
        }
        return m;
    };
    const ClassifierReport rep = cross_validate(ds, split, factory, tc, workers_setting(c));
    std::ostringstream text;
    write_classifier_report(text, rep);
    std::cout << text.str();
    if (!c.str("out").empty()) write_text(c.str("out"), text.str());
    if (!c.str("scores-out").empty()) {
        std::ostringstream s;
        s << "# fold score label\n";
        for (std::size_t j = 0; j < rep.folds.size(); ++j) {
            for (std::size_t i = 0; i < rep.folds[j].scores.size(); ++i) {
                s << j << ' ' << io::format_double(rep.folds[j].scores[i]) << ' ' << rep.folds[j].labels[i] << '\n';
            }
        }
        write_text(c.str("scores-out"), s.str());
    }
    if (!c.str("roc-out").empty()) {
        std::ostringstream s;
        write_roc_plot_data(s, rep);
        write_text(c.str("roc-out"), s.str());
    }
    return 0;
}

int cmd_plan(const RunConfig& c) {
    require(c, "model");
    const GraspModel model = load_checkpoint(c.str("model"));
    if (!model.is_classifier()) throw UsageError("planning needs a classifier checkpoint");
    const PlannerConfig pc = planner_config(c);
    const world::WorldConfig wc = world_config(c);
    const auto fams = families_setting(c, "families");
    std::mt19937_64 rng(derive_seed(static_cast<std::uint64_t>(c.integer("scene-seed")), kPlanSceneStream));
    const world::Scene scene = world::generate_scene(rng, fams, wc);
    std::vector<GraspConfig> inits;
    if (c.str("inits") == "heuristic") {
        const auto h = world::heuristic_inits(scene.obs, rng, wc);
        inits.assign(h.begin(), h.end());
    } else if (c.str("inits") == "file") {
        require(c, "init-file");
        std::ifstream in(c.str("init-file"));
        if (!in) throw FormatError("cannot read init file '" + c.str("init-file") + "'");
        inits = parse_init_file(in, model.dim());
    } else {
        throw UsageError("--inits must be 'heuristic' or 'file'");
    }
    if (pc.mode == GradientMode::full_chain && !model.patches_depend_on_config()) {
        std::fprintf(stderr, "note: the model's image input does not depend on the configuration; "
                             "full-chain gradients equal config-only gradients\n");
    }
    const auto& s = scene.shape;
    std::printf("scene kind=%s family=%u cx=%.4f cy=%.4f phi=%.4f a=%.4f b=%.4f\n",
                std::string(world::to_string(s.kind)).c_str(), s.family_id, s.cx, s.cy, s.phi, s.a, s.b);
    std::vector<PlanResult> all;
    const PlanResult best = plan_multi_init(model, scene.obs, inits, pc, workers_setting(c), &all);
    for (const auto& r : all) std::printf("%s\n", to_record(r).c_str());
    const auto outcome = world::oracle_execute(s, best.theta, wc);
    std::printf("chosen=%zu p=%.6f oracle=%s\n", best.init_index, best.p,
                outcome.success ? "success" : std::string(world::to_string(outcome.reason)).c_str());
    return 0;
}

int cmd_bench(const RunConfig& c) {
    require(c, "model");
    const GraspModel model = load_checkpoint(c.str("model"));
    if (!model.is_classifier()) throw UsageError("benchmarking needs a classifier checkpoint");
    BenchConfig bc;
    bc.scenes = static_cast<int>(c.integer("scenes"));
    if (bc.scenes < 1) throw UsageError("--scenes must be at least 1");
    bc.seed = static_cast<std::uint64_t>(c.integer("seed"));
    bc.families = families_setting(c, "families");
    bc.world = world_config(c);
    bc.planner = planner_config(c);
    bc.samples = static_cast<int>(c.integer("samples"));
    if (bc.samples < 1) throw UsageError("--samples must be at least 1");
    bc.workers = workers_setting(c);
    std::unique_ptr<GraspModel> reg;
    if (!c.str("regression").empty()) {
        reg = std::make_unique<GraspModel>(load_checkpoint(c.str("regression")));
        if (reg->arch() != Arch::regression) throw UsageError("--regression must name a regression checkpoint");
    }
    if (c.str("methods") != "all") {
        bc.methods.clear();
        for (const auto& m : c.list("methods")) {
            try {
                const Method method = parse_method(m);
                if (method == Method::refine) throw FormatError("'refine' is not a selectable method");
                bc.methods.insert(method);
            } catch (const FormatError& e) {
                throw UsageError(e.what());
            }
        }
        if (bc.methods.empty()) throw UsageError("--methods selects nothing");
    } else if (reg) {
        bc.methods.insert(Method::regression);
    }
    if (bc.methods.count(Method::regression) && !reg) throw UsageError("method 'regression' needs --regression");
    const BenchmarkReport rep = run_benchmark(model, reg.get(), bc);
    std::ostringstream text;
    write_benchmark_report(text, rep);
    std::cout << text.str();
    if (!c.str("out").empty()) write_text(c.str("out"), text.str());
    if (!c.str("log").empty()) {
        std::ostringstream log;
        write_trial_log(log, rep, c.boolean("timing"));
        write_text(c.str("log"), log.str());
    }
    return 0;
}

ClassifierReport report_from_scores(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot read scores file '" + path.string() + "'");
    std::map<int, FoldResult> folds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto tok = io::split_ws(line);
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (tok.size() != 3) throw FormatError(where + ": expected 'fold score label'");
        auto& f = folds[static_cast<int>(io::parse_int(tok[0], where))];
        f.scores.push_back(io::parse_double(tok[1], where));
        f.labels.push_back(static_cast<int>(io::parse_int(tok[2], where)));
    }
    if (folds.empty()) throw FormatError("scores file '" + path.string() + "' is empty");
    ClassifierReport r;
    std::vector<double> all_s, aucs;
    std::vector<int> all_y;
    std::vector<RocCurve> curves;
    for (auto& [_, f] : folds) {
        f.roc = roc_auc(f.scores, f.labels);
        all_s.insert(all_s.end(), f.scores.begin(), f.scores.end());
        all_y.insert(all_y.end(), f.labels.begin(), f.labels.end());
        aucs.push_back(f.roc.auc);
        curves.push_back(f.roc);
        r.folds.push_back(f);
    }
    r.k = static_cast<int>(r.folds.size());
    r.pooled = roc_auc(all_s, all_y);
    r.averaged = vertical_average(curves);
    r.auc = mean_std(aucs);
    return r;
}

int cmd_plot_data(const RunConfig& c) {
    if (c.str("scores").empty() && c.str("log").empty()) throw UsageError("give --scores and/or --log");
    std::ostringstream out;
    if (!c.str("scores").empty()) write_roc_plot_data(out, report_from_scores(c.str("scores")));
    if (!c.str("log").empty()) {
        std::ifstream in(c.str("log"));
        if (!in) throw FormatError("cannot read trial log '" + c.str("log") + "'");
        write_bar_plot_data(out, read_trial_log(in));
    }
    if (c.str("out").empty()) {
        std::cout << out.str();
    } else {
        write_text(c.str("out"), out.str());
    }
    return 0;
}

// --- wiring ------------------------------------------------------------------------

struct Command {
    std::string name;
    std::string help;
    RunConfig cfg;
    std::function<int(const RunConfig&)> run;
    CLI::App* app = nullptr;
    std::map<std::string, std::string> values;
    std::string config_file;
};

std::vector<std::unique_ptr<Command>> make_commands() {
    std::vector<std::unique_ptr<Command>> cmds;
    auto add = [&](std::string name, std::string help, std::function<int(const RunConfig&)> run) -> RunConfig& {
        auto cmd = std::make_unique<Command>();
        cmd->name = std::move(name);
        cmd->help = std::move(help);
        cmd->run = std::move(run);
        cmd->cfg.declare("seed", "1", "random seed");
        cmd->cfg.declare("workers", "1", "worker threads");
        cmds.push_back(std::move(cmd));
        return cmds.back()->cfg;
    };
    {
        RunConfig& c = add("gen-data", "generate a labelled grasp dataset", cmd_gen_data);
        c.declare("n", "1500", "number of grasp trials");
        c.declare("families", "all", "family ids: all, or a list such as 0-7,12");
        c.declare("out", "", "output dataset file");
        declare_world(c);
    }
    {
        RunConfig& c = add("train", "train a network", cmd_train);
        c.declare("data", "", "dataset file");
        c.declare("out", "", "output checkpoint");
        c.declare("loss-out", "", "loss trace file (default: <out>.loss)");
        declare_training(c);
    }
    {
        RunConfig& c = add("eval", "cross-validate a classifier architecture", cmd_eval);
        c.declare("data", "", "dataset file");
        c.declare("model", "", "checkpoint whose architecture and input settings are cross-validated");
        c.declare("mode", "seen", "fold mode: seen | unseen");
        c.declare("folds", "5", "number of folds");
        c.declare("out", "", "report file (also printed)");
        c.declare("scores-out", "", "per-sample test scores file (fold score label)");
        c.declare("roc-out", "", "ROC plot data file");
        declare_training(c);
    }
    {
        RunConfig& c = add("plan", "plan grasps for one generated scene", cmd_plan);
        c.declare("model", "", "classifier checkpoint");
        c.declare("scene-seed", "1", "seed of the generated scene");
        c.declare("families", "all", "family ids the scene is drawn from");
        c.declare("inits", "heuristic", "initializations: heuristic | file");
        c.declare("init-file", "", "file with one configuration per line (for --inits file)");
        declare_planner(c);
        declare_world(c);
    }
    {
        RunConfig& c = add("bench", "compare heuristic, max-eval, sampling and inference", cmd_bench);
        c.declare("model", "", "classifier checkpoint");
        c.declare("regression", "", "optional regression checkpoint (adds the regression method)");
        c.declare("scenes", "200", "number of benchmark scenes");
        c.declare("methods", "all", "all, or a list of heuristic,max-eval,sampling,inference,regression");
        c.declare("families", "all", "family ids scenes are drawn from");
        c.declare("samples", "150", "draws for the sampling baseline");
        c.declare("out", "", "report file (also printed)");
        c.declare("log", "", "per-trial log file");
        c.declare("timing", "false", "include wall-clock times in the trial log");
        declare_planner(c);
        declare_world(c);
    }
    {
        RunConfig& c = add("plot-data", "export ROC and bar-chart data", cmd_plot_data);
        c.declare("scores", "", "scores file written by eval --scores-out");
        c.declare("log", "", "trial log written by bench --log");
        c.declare("out", "", "output file (default: stdout)");
    }
    return cmds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graspinf: learn a grasp-success classifier and plan grasps by gradient ascent on its input"};
    app.require_subcommand(1);
    auto cmds = make_commands();
    for (auto& cmd : cmds) {
        cmd->app = app.add_subcommand(cmd->name, cmd->help);
        cmd->app->add_option("--config", cmd->config_file, "flat key=value settings file (flags override it)");
        for (const auto& key : cmd->cfg.keys_with_prefix("")) {
            cmd->app->add_option("--" + key, cmd->values[key], cmd->cfg.help(key))->default_str(cmd->cfg.str(key));
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }
    for (auto& cmd : cmds) {
        if (!cmd->app->parsed()) continue;
        try {
            if (!cmd->config_file.empty()) cmd->cfg.load_file(cmd->config_file);
            for (const auto& [key, value] : cmd->values) {
                if (cmd->app->get_option("--" + key)->count() > 0) cmd->cfg.set_flag(key, value);
            }
            cmd->cfg.echo(std::cerr);
            return cmd->run(cmd->cfg);
        } catch (const UsageError& e) {
            std::cerr << "usage error: " << e.what() << '\n';
            return kExitUsage;
        } catch (const NumericError& e) {
            std::cerr << "numeric error: " << e.what() << '\n';
            return kExitNumeric;
        } catch (const FormatError& e) {
            std::cerr << "data error: " << e.what() << '\n';
            return kExitData;
        } catch (const std::invalid_argument& e) {
            std::cerr << "usage error: " << e.what() << '\n';
            return kExitUsage;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitData;
        }
    }
    return kExitUsage;
}
