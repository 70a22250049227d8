#include "graspinf/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "graspinf/errors.hpp"
#include "graspinf/io.hpp"
#include "graspinf/parallel.hpp"
#include "graspinf/rng.hpp"

namespace graspinf {

namespace {

constexpr std::uint64_t kFoldStream = 0x666f6c64;    // "fold"
constexpr std::uint64_t kSceneStream = 0x7363656e;   // "scen"
constexpr std::uint64_t kSampleStream = 0x73616d70;  // "samp"

constexpr Method kReportOrder[] = {Method::heuristic, Method::max_eval, Method::sampling, Method::inference,
                                   Method::regression};

std::string fmt(double v, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

}  // namespace

std::string_view to_string(FoldMode m) { return m == FoldMode::seen ? "seen" : "unseen"; }

FoldMode parse_fold_mode(std::string_view text) {
    if (text == "seen") return FoldMode::seen;
    if (text == "unseen") return FoldMode::unseen;
    throw FormatError("unknown fold mode '" + std::string(text) + "'");
}

FoldSplit make_folds(const Dataset& ds, FoldMode mode, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("make_folds: need at least 2 folds");
    if (ds.size() < static_cast<std::size_t>(k)) throw std::invalid_argument("make_folds: fewer samples than folds");
    std::mt19937_64 rng(derive_seed(seed, kFoldStream));
    std::vector<std::vector<std::size_t>> test(k);
    if (mode == FoldMode::seen) {
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < ds.size(); ++i) (ds.samples[i].label ? pos : neg).push_back(i);
        if (pos.size() < static_cast<std::size_t>(k)) {
            throw std::invalid_argument("make_folds: " + std::to_string(pos.size()) + " positives cannot be stratified into " +
                                        std::to_string(k) + " folds");
        }
        std::shuffle(pos.begin(), pos.end(), rng);
        std::shuffle(neg.begin(), neg.end(), rng);
        // Negatives continue the deal where positives stopped so fold sizes stay within one.
        std::size_t slot = 0;
        for (std::size_t i : pos) test[slot++ % k].push_back(i);
        for (std::size_t i : neg) test[slot++ % k].push_back(i);
    } else {
        std::map<std::uint32_t, std::vector<std::size_t>> by_family;
        for (std::size_t i = 0; i < ds.size(); ++i) by_family[ds.samples[i].shape.family_id].push_back(i);
        if (by_family.size() < static_cast<std::size_t>(k)) {
            throw std::invalid_argument("make_folds: unseen mode needs at least " + std::to_string(k) + " families, got " +
                                        std::to_string(by_family.size()));
        }
        std::vector<std::uint32_t> fams;
        for (const auto& [f, _] : by_family) fams.push_back(f);
        std::shuffle(fams.begin(), fams.end(), rng);
        std::stable_sort(fams.begin(), fams.end(), [&](std::uint32_t a, std::uint32_t b) {
            return by_family[a].size() > by_family[b].size();
        });
        for (std::uint32_t f : fams) {
            std::size_t smallest = 0;
            for (int j = 1; j < k; ++j) {
                if (test[j].size() < test[smallest].size()) smallest = static_cast<std::size_t>(j);
            }
            auto& dst = test[smallest];
            dst.insert(dst.end(), by_family[f].begin(), by_family[f].end());
        }
    }
    FoldSplit split;
    split.mode = mode;
    split.k = k;
    for (int j = 0; j < k; ++j) {
        std::sort(test[j].begin(), test[j].end());
        std::vector<char> in_test(ds.size(), 0);
        for (std::size_t i : test[j]) in_test[i] = 1;
        std::vector<std::size_t> train;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (!in_test[i]) train.push_back(i);
        }
        split.train.push_back(std::move(train));
        split.test.push_back(std::move(test[j]));
    }
    return split;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: scores and labels differ in length");
    std::size_t P = 0, N = 0;
    for (int y : labels) (y ? P : N) += 1;
    if (P == 0 || N == 0) throw std::invalid_argument("roc_auc: need at least one positive and one negative");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    RocCurve c;
    c.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] ? tp : fp) += 1;
            ++i;
        }
        c.points.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P, s});
    }
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        const auto& a = c.points[i - 1];
        const auto& b = c.points[i];
        c.auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
    }
    return c;
}

std::vector<RocPoint> vertical_average(std::span<const RocCurve> curves, int grid_points) {
    std::vector<RocPoint> out;
    if (curves.empty() || grid_points < 2) return out;
    for (int g = 0; g < grid_points; ++g) {
        const double x = static_cast<double>(g) / (grid_points - 1);
        double sum = 0.0;
        for (const auto& c : curves) {
            // Highest TPR reached at FPR <= x, interpolating inside a diagonal segment.
            double tpr = 0.0;
            for (std::size_t i = 1; i < c.points.size(); ++i) {
                const auto& a = c.points[i - 1];
                const auto& b = c.points[i];
                if (b.fpr <= x) {
                    tpr = std::max(tpr, b.tpr);
                } else if (a.fpr <= x) {
                    const double t = (x - a.fpr) / (b.fpr - a.fpr);
                    tpr = std::max(tpr, a.tpr + t * (b.tpr - a.tpr));
                }
            }
            sum += tpr;
        }
        out.push_back({x, sum / static_cast<double>(curves.size()), 0.0});
    }
    return out;
}

Classification accuracy_f1(std::span<const double> scores, std::span<const int> labels, double threshold) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw std::invalid_argument("accuracy_f1: scores and labels must be non-empty and equal in length");
    }
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] > threshold;
        if (pred && labels[i]) ++tp;
        else if (pred) ++fp;
        else if (labels[i]) ++fn;
        else ++tn;
    }
    Classification c;
    c.accuracy = static_cast<double>(tp + tn) / static_cast<double>(scores.size());
    c.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    c.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    c.f1 = tp + fp == 0 || c.precision + c.recall == 0.0 ? 0.0
                                                          : 2.0 * c.precision * c.recall / (c.precision + c.recall);
    return c;
}

MeanStd mean_std(std::span<const double> values) {
    MeanStd r;
    if (values.empty()) return r;
    for (double v : values) r.mean += v;
    r.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - r.mean) * (v - r.mean);
        r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return r;
}

ClassifierReport cross_validate(const Dataset& ds, const FoldSplit& split, const ModelFactory& make_model,
                                const TrainConfig& train_cfg, unsigned workers, double threshold) {
    ClassifierReport r;
    r.mode = split.mode;
    r.k = split.k;
    r.threshold = threshold;
    r.folds.resize(split.k);
    parallel_for(static_cast<std::size_t>(split.k), workers, [&](std::size_t j) {
        FoldResult& fr = r.folds[j];
        const Dataset train_ds = ds.subset(split.train[j]);
        GraspModel model = make_model(static_cast<int>(j));
        if (!model.is_classifier()) throw std::invalid_argument("cross-validation needs a classifier architecture");
        const auto t0 = std::chrono::steady_clock::now();
        train(model, train_ds, train_cfg);
        fr.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        Workspace ws;
        for (std::size_t i : split.test[j]) {
            const auto& s = ds.samples[i];
            fr.scores.push_back(model.predict(ws, s.obs, s.theta));
            fr.labels.push_back(s.label);
            fr.test_positives += s.label;
        }
        fr.train_size = split.train[j].size();
        fr.test_size = split.test[j].size();
        fr.roc = roc_auc(fr.scores, fr.labels);
        fr.cls = accuracy_f1(fr.scores, fr.labels, threshold);
    });
    std::vector<double> all_s, aucs, accs, f1s;
    std::vector<int> all_y;
    std::vector<RocCurve> curves;
    for (const auto& fr : r.folds) {
        all_s.insert(all_s.end(), fr.scores.begin(), fr.scores.end());
        all_y.insert(all_y.end(), fr.labels.begin(), fr.labels.end());
        aucs.push_back(fr.roc.auc);
        accs.push_back(fr.cls.accuracy);
        f1s.push_back(fr.cls.f1);
        curves.push_back(fr.roc);
    }
    r.pooled = roc_auc(all_s, all_y);
    r.averaged = vertical_average(curves);
    r.auc = mean_std(aucs);
    r.accuracy = mean_std(accs);
    r.f1 = mean_std(f1s);
    return r;
}

void write_classifier_report(std::ostream& out, const ClassifierReport& r) {
    out << "# classifier cross-validation: mode=" << to_string(r.mode) << " folds=" << r.k
        << " threshold=" << fmt(r.threshold, 2) << " (positive iff score > threshold)\n";
    out << "fold  train  test  test_pos  auc     accuracy  precision  recall  f1      train_s\n";
    for (std::size_t j = 0; j < r.folds.size(); ++j) {
        const auto& f = r.folds[j];
        char line[256];
        std::snprintf(line, sizeof line, "%-4zu  %-5zu  %-4zu  %-8zu  %.4f  %.4f    %.4f     %.4f  %.4f  %.1f\n", j,
                      f.train_size, f.test_size, f.test_positives, f.roc.auc, f.cls.accuracy, f.cls.precision,
                      f.cls.recall, f.cls.f1, f.train_seconds);
        out << line;
    }
    out << "mean  auc=" << fmt(r.auc.mean, 4) << " accuracy=" << fmt(r.accuracy.mean, 4) << " f1=" << fmt(r.f1.mean, 4)
        << '\n';
    out << "std   auc=" << fmt(r.auc.std, 4) << " accuracy=" << fmt(r.accuracy.std, 4) << " f1=" << fmt(r.f1.std, 4)
        << '\n';
    out << "pooled auc=" << fmt(r.pooled.auc, 4) << '\n';
}

// ---------------------------------------------------------------------------

std::string_view to_string(Method m) {
    switch (m) {
        case Method::heuristic: return "heuristic";
        case Method::max_eval: return "max-eval";
        case Method::sampling: return "sampling";
        case Method::inference: return "inference";
        case Method::regression: return "regression";
        case Method::refine: return "refine";
    }
    return "unknown";
}

Method parse_method(std::string_view text) {
    for (auto m : {Method::heuristic, Method::max_eval, Method::sampling, Method::inference, Method::regression,
                   Method::refine}) {
        if (to_string(m) == text) return m;
    }
    throw FormatError("unknown method '" + std::string(text) + "'");
}

void summarize(BenchmarkReport& r) {
    r.overall.clear();
    r.per_family.clear();
    double p0 = 0.0, p1 = 0.0, pc = 0.0;
    std::size_t n_refine = 0, n_inf = 0;
    r.max_init_ms = 0.0;
    for (const auto& t : r.trials) {
        if (t.method == Method::refine) {
            p0 += t.p_init;
            p1 += t.p_final;
            ++n_refine;
            if (t.ms) r.max_init_ms = std::max(r.max_init_ms, *t.ms);
            continue;
        }
        if (t.method == Method::inference) {
            pc += t.p_final;
            ++n_inf;
        }
        auto& o = r.overall[t.method];
        auto& f = r.per_family[t.method][t.family];
        ++o.attempts;
        ++f.attempts;
        if (t.success) {
            ++o.successes;
            ++f.successes;
        }
    }
    r.mean_p_init = n_refine ? p0 / static_cast<double>(n_refine) : 0.0;
    r.mean_p_inference = n_refine ? p1 / static_cast<double>(n_refine) : 0.0;
    r.mean_p_chosen = n_inf ? pc / static_cast<double>(n_inf) : 0.0;
}

BenchmarkReport run_benchmark(const GraspModel& model, const GraspModel* regression, const BenchConfig& cfg) {
    if (cfg.scenes < 1) throw std::invalid_argument("run_benchmark: need at least one scene");
    if (!model.is_classifier()) throw std::invalid_argument("run_benchmark: the planning model must be a classifier");
    if (cfg.methods.count(Method::regression) && !regression) {
        throw std::invalid_argument("run_benchmark: regression method requested without a regression model");
    }
    const auto& m = cfg.methods;
    std::vector<std::vector<TrialRecord>> per_scene(static_cast<std::size_t>(cfg.scenes));
    parallel_for(per_scene.size(), cfg.workers, [&](std::size_t s) {
        std::mt19937_64 rng(derive_seed(cfg.seed, kSceneStream, s));
        const world::Scene scene = world::generate_scene(rng, cfg.families, cfg.world, static_cast<std::uint32_t>(s));
        const auto inits_arr = world::heuristic_inits(scene.obs, rng, cfg.world);
        const std::vector<GraspConfig> inits(inits_arr.begin(), inits_arr.end());
        auto& out = per_scene[s];
        auto record = [&](Method method, int init, double p_init, double p_final, const GraspConfig& g,
                          std::optional<double> ms) {
            const auto o = world::oracle_execute(scene.shape, project(g, world::world_bounds()), cfg.world);
            out.push_back({static_cast<std::uint32_t>(s), scene.shape.family_id, method, init, p_init, p_final, o.success,
                           o.reason, ms});
        };
        ModelObjective f(model, scene.obs, GradientMode::config_only);
        std::vector<double> p_inits;
        for (const auto& g : inits) p_inits.push_back(f.value(g));
        if (m.count(Method::heuristic)) {
            for (std::size_t i = 0; i < inits.size(); ++i) {
                record(Method::heuristic, static_cast<int>(i), p_inits[i], p_inits[i], inits[i], std::nullopt);
            }
        }
        if (m.count(Method::max_eval)) {
            const Ranked best = max_eval(model, scene.obs, inits);
            record(Method::max_eval, static_cast<int>(best.index), best.p, best.p, best.theta, std::nullopt);
        }
        if (m.count(Method::sampling)) {
            BoxBounds box = inference_bounds(inits[0], cfg.planner);
            for (std::size_t i = 1; i < inits.size(); ++i) box = box.hull(inference_bounds(inits[i], cfg.planner));
            std::mt19937_64 srng(derive_seed(cfg.seed, kSampleStream, s));
            const Ranked best = sample_and_rank(model, scene.obs, box, cfg.samples, srng);
            record(Method::sampling, -1, best.p, best.p, best.theta, std::nullopt);
        }
        if (m.count(Method::inference)) {
            std::vector<PlanResult> all;
            const PlanResult best = plan_multi_init(model, scene.obs, inits, cfg.planner, 1, &all);
            for (const auto& pr : all) {
                record(Method::refine, static_cast<int>(pr.init_index), pr.p0, pr.p, pr.theta, pr.ms);
            }
            record(Method::inference, static_cast<int>(best.init_index), best.p0, best.p, best.theta, best.ms);
        }
        if (m.count(Method::regression)) {
            const GraspConfig g = project(regression->regress(scene.obs), world::world_bounds());
            const double p = f.value(g);
            record(Method::regression, -1, p, p, g, std::nullopt);
        }
    });
    BenchmarkReport r;
    r.scenes = cfg.scenes;
    r.seed = cfg.seed;
    for (auto& v : per_scene) r.trials.insert(r.trials.end(), v.begin(), v.end());
    summarize(r);
    return r;
}

Improvement improvement_analysis(const BenchmarkReport& r) {
    // Pre-inference outcome of an init is its heuristic execution; post is its refine record.
    std::map<std::pair<std::uint32_t, int>, bool> before;
    for (const auto& t : r.trials) {
        if (t.method == Method::heuristic) before[{t.scene, t.init}] = t.success;
    }
    Improvement imp;
    for (const auto& t : r.trials) {
        if (t.method != Method::refine) continue;
        const auto it = before.find({t.scene, t.init});
        if (it == before.end() || it->second) continue;
        ++imp.failing;
        if (t.success) ++imp.converted;
    }
    if (imp.failing) imp.fraction = static_cast<double>(imp.converted) / static_cast<double>(imp.failing);
    return imp;
}

void write_benchmark_report(std::ostream& out, const BenchmarkReport& r) {
    out << "# planner benchmark: scenes=" << r.scenes << " seed=" << r.seed << '\n';
    out << "# heuristic is scored per attempt (every init of every scene); other methods per scene\n";
    out << "method      attempts  successes  rate%\n";
    for (Method m : kReportOrder) {
        const auto it = r.overall.find(m);
        if (it == r.overall.end()) continue;
        char line[128];
        std::snprintf(line, sizeof line, "%-10s  %-8zu  %-9zu  %.1f\n", std::string(to_string(m)).c_str(),
                      it->second.attempts, it->second.successes, it->second.rate());
        out << line;
    }
    std::set<std::uint32_t> families;
    for (const auto& [_, fam] : r.per_family) {
        for (const auto& [f, __] : fam) families.insert(f);
    }
    out << "\nper-family success rate%\nfamily";
    for (Method m : kReportOrder) {
        if (r.overall.count(m)) out << "  " << to_string(m);
    }
    out << '\n';
    for (std::uint32_t f : families) {
        out << f;
        for (Method m : kReportOrder) {
            if (!r.overall.count(m)) continue;
            const auto& fam = r.per_family.at(m);
            const auto it = fam.find(f);
            out << "  " << (it == fam.end() ? std::string("-") : fmt(it->second.rate(), 1) + "(" +
                                                                   std::to_string(it->second.attempts) + ")");
        }
        out << '\n';
    }
    if (r.overall.count(Method::inference)) {
        const Improvement imp = improvement_analysis(r);
        out << "\nmean predicted probability: init=" << fmt(r.mean_p_init, 4)
            << " after-inference=" << fmt(r.mean_p_inference, 4) << " chosen=" << fmt(r.mean_p_chosen, 4) << '\n';
        out << "failing inits refined to success: " << imp.converted << "/" << imp.failing << " fraction="
            << (imp.fraction ? fmt(*imp.fraction, 4) : std::string("undefined")) << '\n';
    }
}

void write_trial_log(std::ostream& out, const BenchmarkReport& r, bool timing) {
    out << "# scenes=" << r.scenes << " seed=" << r.seed << '\n';
    for (const auto& t : r.trials) {
        out << "scene=" << t.scene << " family=" << t.family << " method=" << to_string(t.method) << " init=" << t.init
            << " p_init=" << io::format_double(t.p_init) << " p_final=" << io::format_double(t.p_final)
            << " outcome=" << (t.success ? 1 : 0) << " reason=" << world::to_string(t.reason)
            << " ms=" << (timing && t.ms ? fmt(*t.ms, 3) : std::string("-")) << '\n';
    }
}

BenchmarkReport read_trial_log(std::istream& in) {
    BenchmarkReport r;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = "trial log line " + std::to_string(lineno);
        if (line.empty()) continue;
        if (line[0] == '#') {
            for (const auto& tok : io::split_ws(line.substr(1))) {
                if (tok.rfind("scenes=", 0) == 0) r.scenes = static_cast<int>(io::parse_int(tok.substr(7), where));
                if (tok.rfind("seed=", 0) == 0) r.seed = std::stoull(tok.substr(5));
            }
            continue;
        }
        TrialRecord t;
        int fields = 0;
        for (const auto& tok : io::split_ws(line)) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw FormatError(where + ": malformed field '" + tok + "'");
            const std::string key = tok.substr(0, eq);
            const std::string val = tok.substr(eq + 1);
            if (key == "scene") t.scene = static_cast<std::uint32_t>(io::parse_int(val, where));
            else if (key == "family") t.family = static_cast<std::uint32_t>(io::parse_int(val, where));
            else if (key == "method") t.method = parse_method(val);
            else if (key == "init") t.init = static_cast<int>(io::parse_int(val, where));
            else if (key == "p_init") t.p_init = io::parse_double(val, where);
            else if (key == "p_final") t.p_final = io::parse_double(val, where);
            else if (key == "outcome") t.success = io::parse_int(val, where) != 0;
            else if (key == "reason") t.reason = world::parse_failure_reason(val);
            else if (key == "ms") t.ms = val == "-" ? std::nullopt : std::optional<double>(io::parse_double(val, where));
            else throw FormatError(where + ": unknown field '" + key + "'");
            ++fields;
        }
        if (fields != 9) throw FormatError(where + ": expected 9 fields");
        r.trials.push_back(t);
    }
    summarize(r);
    return r;
}

void write_roc_plot_data(std::ostream& out, const ClassifierReport& r) {
    auto curve = [&](const std::string& name, std::span<const RocPoint> pts) {
        out << "# curve " << name << "\n# fpr tpr\n";
        for (const auto& p : pts) out << io::format_double(p.fpr) << ' ' << io::format_double(p.tpr) << '\n';
        out << '\n';
    };
    for (std::size_t j = 0; j < r.folds.size(); ++j) {
        curve("fold" + std::to_string(j) + " auc=" + fmt(r.folds[j].roc.auc, 4), r.folds[j].roc.points);
    }
    curve("pooled auc=" + fmt(r.pooled.auc, 4), r.pooled.points);
    curve("vertical-average mean-auc=" + fmt(r.auc.mean, 4), r.averaged);
    const std::vector<RocPoint> chance{{0.0, 0.0, 0.0}, {1.0, 1.0, 0.0}};
    curve("chance auc=0.5", chance);
}

void write_bar_plot_data(std::ostream& out, const BenchmarkReport& r) {
    out << "# success-rate method overall_percent\n";
    for (Method m : kReportOrder) {
        if (const auto it = r.overall.find(m); it != r.overall.end()) {
            out << to_string(m) << ' ' << fmt(it->second.rate(), 2) << '\n';
        }
    }
    out << "\n# success-rate-per-family method family percent attempts\n";
    for (Method m : kReportOrder) {
        const auto it = r.per_family.find(m);
        if (it == r.per_family.end()) continue;
        for (const auto& [f, tally] : it->second) {
            out << to_string(m) << ' ' << f << ' ' << fmt(tally.rate(), 2) << ' ' << tally.attempts << '\n';
        }
    }
    out << "\n# predicted-probability stage mean\n";
    out << "init " << fmt(r.mean_p_init, 4) << "\ninference " << fmt(r.mean_p_inference, 4) << '\n';
}

}  // namespace graspinf
