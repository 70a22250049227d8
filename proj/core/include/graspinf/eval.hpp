#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "graspinf/dataset.hpp"
#include "graspinf/model.hpp"
#include "graspinf/planner.hpp"
#include "graspinf/trainer.hpp"
#include "graspinf/world.hpp"

namespace graspinf {

// --- cross-validation --------------------------------------------------------

enum class FoldMode { seen, unseen };

std::string_view to_string(FoldMode m);
FoldMode parse_fold_mode(std::string_view text);

struct FoldSplit {
    FoldMode mode = FoldMode::seen;
    int k = 0;
    std::vector<std::vector<std::size_t>> train;
    std::vector<std::vector<std::size_t>> test;
};

/// seen: positives and negatives are shuffled separately and dealt round-robin, so
/// every fold keeps the global positive rate. unseen: whole families are assigned to
/// folds (largest remaining family to the smallest fold), so no family is in both the
/// train and test side of any fold. Deterministic in `seed`.
FoldSplit make_folds(const Dataset& ds, FoldMode mode, int k, std::uint64_t seed);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  ///< scores >= threshold are predicted positive
};

struct RocCurve {
    std::vector<RocPoint> points;  ///< from (0,0) to (1,1), non-decreasing in both axes
    double auc = 0.0;
};

/// Full threshold sweep with tied scores grouped into a single step; trapezoidal AUC.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Vertical average of several curves on an evenly spaced FPR grid.
std::vector<RocPoint> vertical_average(std::span<const RocCurve> curves, int grid_points = 101);

struct Classification {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Positive iff score > threshold. F1 is 0 when nothing is predicted positive.
Classification accuracy_f1(std::span<const double> scores, std::span<const int> labels, double threshold = 0.4);

struct FoldResult {
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t test_positives = 0;
    RocCurve roc;
    Classification cls;
    double train_seconds = 0.0;
    std::vector<double> scores;  ///< test predictions, in test-index order
    std::vector<int> labels;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Sample standard deviation (n - 1); zero for fewer than two values.
MeanStd mean_std(std::span<const double> values);

struct ClassifierReport {
    FoldMode mode = FoldMode::seen;
    int k = 0;
    double threshold = 0.4;
    std::vector<FoldResult> folds;
    RocCurve pooled;
    std::vector<RocPoint> averaged;  ///< vertical average of the per-fold curves
    MeanStd auc;
    MeanStd accuracy;
    MeanStd f1;
};

using ModelFactory = std::function<GraspModel(int fold)>;

/// Trains one model per fold with `make_model` and `train_cfg` and scores its test side.
ClassifierReport cross_validate(const Dataset& ds, const FoldSplit& split, const ModelFactory& make_model,
                                const TrainConfig& train_cfg, unsigned workers = 1, double threshold = 0.4);

/// Table with one row per fold plus mean and std rows.
void write_classifier_report(std::ostream& out, const ClassifierReport& r);

// --- planner benchmark -------------------------------------------------------

enum class Method { heuristic, max_eval, sampling, inference, regression, refine };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

struct BenchConfig {
    int scenes = 200;
    std::uint64_t seed = 1;
    std::vector<world::Family> families = world::default_families();
    world::WorldConfig world{};
    PlannerConfig planner{};
    int samples = 150;
    std::set<Method> methods{Method::heuristic, Method::max_eval, Method::sampling, Method::inference};
    unsigned workers = 1;
};

/// One executed grasp. `refine` records are per-init planner runs, used only for the
/// improvement analysis; every other method contributes one record per scene, except
/// heuristic which contributes one per attempt.
struct TrialRecord {
    std::uint32_t scene = 0;
    std::uint32_t family = 0;
    Method method = Method::heuristic;
    int init = -1;  ///< init index, -1 when not tied to one init
    double p_init = 0.0;
    double p_final = 0.0;
    bool success = false;
    world::FailureReason reason = world::FailureReason::none;
    std::optional<double> ms;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct MethodTally {
    std::size_t attempts = 0;
    std::size_t successes = 0;
    [[nodiscard]] double rate() const noexcept {
        return attempts ? 100.0 * static_cast<double>(successes) / static_cast<double>(attempts) : 0.0;
    }
};

struct Improvement {
    std::size_t failing = 0;
    std::size_t converted = 0;
    /// converted / failing; empty when no init failed.
    std::optional<double> fraction;
};

struct BenchmarkReport {
    int scenes = 0;
    std::uint64_t seed = 0;
    std::vector<TrialRecord> trials;

    std::map<Method, MethodTally> overall;
    std::map<Method, std::map<std::uint32_t, MethodTally>> per_family;
    double mean_p_init = 0.0;      ///< over every refined init, before ascent
    double mean_p_inference = 0.0;  ///< over every refined init, after ascent
    double mean_p_chosen = 0.0;    ///< over the selected inference result per scene
    double max_init_ms = 0.0;
};

/// Recomputes every aggregate of `r` from r.trials.
void summarize(BenchmarkReport& r);

BenchmarkReport run_benchmark(const GraspModel& model, const GraspModel* regression, const BenchConfig& cfg);

Improvement improvement_analysis(const BenchmarkReport& r);

void write_benchmark_report(std::ostream& out, const BenchmarkReport& r);
/// One record per line. Timing is written only when `timing` is set, so logs can be
/// compared byte for byte across runs.
void write_trial_log(std::ostream& out, const BenchmarkReport& r, bool timing);
BenchmarkReport read_trial_log(std::istream& in);

// --- plot data ---------------------------------------------------------------

/// `# curve <name>` blocks of "fpr tpr" rows: one per fold, pooled, and averaged.
void write_roc_plot_data(std::ostream& out, const ClassifierReport& r);
/// Success-rate bars per method (overall and per family) and the probability bars.
void write_bar_plot_data(std::ostream& out, const BenchmarkReport& r);

}  // namespace graspinf
