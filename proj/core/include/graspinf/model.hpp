#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "graspinf/graph.hpp"
#include "graspinf/grasp.hpp"
#include "graspinf/patches.hpp"
#include "graspinf/world.hpp"

namespace graspinf {

enum class Arch { config_net, patch_net, regression };

std::string_view to_string(Arch arch);
Arch parse_arch(std::string_view text);

/// Image + configuration classifier; configuration features are tiled over the image
/// feature map before the last convolution.
struct ConfigNetSpec {
    int dim = 4;
    Shape3 patch{4, 32, 32};
    int conv1_filters = 8;
    int conv1_kernel = 5;
    int conv2_filters = 8;
    int conv2_kernel = 3;
    int config_units = 8;
    int merge_filters = 8;
    int merge_kernel = 3;
    int fc1_units = 32;
    int fc2_units = 16;
    double keep_prob = 0.75;
};

/// Classifier over a palm patch and one patch per fingertip.
struct PatchNetSpec {
    int channels = 4;
    int palm = 16;
    int finger = 8;
    int fingers = 2;
    int filters = 8;
    int kernel = 3;
    int patch_units = 16;
    int merge_units = 32;
    double keep_prob = 0.75;
};

/// Direct regression of a configuration from the scene (image branch of the
/// config-net without the post-merge convolution, one linear head per coordinate).
struct RegressionNetSpec {
    int dim = 4;
    Shape3 image{4, 32, 32};
    int conv1_filters = 8;
    int conv1_kernel = 5;
    int conv2_filters = 8;
    int conv2_kernel = 3;
    int fc1_units = 32;
    int fc2_units = 16;
    double keep_prob = 0.75;
};

std::vector<LayerSpec> config_net_layers(const ConfigNetSpec& spec);
std::vector<LayerSpec> patch_net_layers(const PatchNetSpec& spec);
std::vector<LayerSpec> regression_net_layers(const RegressionNetSpec& spec);

/// Builders return Xavier-initialised graphs.
Graph build_config_net(const ConfigNetSpec& spec, std::uint64_t seed);
Graph build_patch_net(const PatchNetSpec& spec, std::uint64_t seed);
Graph build_regression_net(const RegressionNetSpec& spec, std::uint64_t seed);

/// How a network's inputs are produced from an (observation, configuration) pair.
struct ModelInfo {
    Arch arch = Arch::config_net;
    int dim = 4;
    std::uint64_t seed = 0;
    PatchMode patch_mode = PatchMode::fixed;  // config-net object patch
    Interp interp = Interp::bilinear;
    int object_patch = 32;
    GraspPatchSizes grasp_patches{};

    friend bool operator==(const ModelInfo&, const ModelInfo&) = default;
};

/// A network plus the input pipeline that feeds it.
///
/// config-net slots: 0 = object patch, 1 = configuration relative to object_anchor.
/// patch-net slots: 0 = palm, 1.. = fingertips. regression slots: 0 = scene grid.
class GraspModel {
public:
    GraspModel(ModelInfo info, Graph graph);

    static GraspModel config_net(const ConfigNetSpec& spec, PatchMode mode, Interp interp, std::uint64_t seed);
    static GraspModel patch_net(const PatchNetSpec& spec, Interp interp, std::uint64_t seed);
    static GraspModel regression(const RegressionNetSpec& spec, std::uint64_t seed);

    [[nodiscard]] const ModelInfo& info() const noexcept { return info_; }
    [[nodiscard]] Arch arch() const noexcept { return info_.arch; }
    [[nodiscard]] bool is_classifier() const noexcept { return info_.arch != Arch::regression; }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(info_.dim); }
    [[nodiscard]] const Graph& graph() const noexcept { return graph_; }
    [[nodiscard]] Graph& graph() noexcept { return graph_; }

    /// True when the network's image inputs move with the configuration.
    [[nodiscard]] bool patches_depend_on_config() const noexcept;

    /// Image inputs for the given configuration, in slot order (excludes the config slot).
    [[nodiscard]] std::vector<GridTensor> image_inputs(const world::Observation& obs, const GraspConfig& g) const;
    /// Value of the config slot (config-net only).
    [[nodiscard]] GridTensor config_input(const world::Observation& obs, const GraspConfig& g) const;
    [[nodiscard]] GridTensor config_input(world::Vec2 anchor, const GraspConfig& g) const;
    /// Every input slot, in slot order.
    [[nodiscard]] std::vector<GridTensor> inputs(const world::Observation& obs, const GraspConfig& g) const;

    /// Eval-mode success probability (classifiers only).
    [[nodiscard]] double predict(const world::Observation& obs, const GraspConfig& g) const;
    double predict(Workspace& ws, const world::Observation& obs, const GraspConfig& g) const;
    /// Eval-mode configuration prediction (regression only).
    [[nodiscard]] GraspConfig regress(const world::Observation& obs) const;

private:
    ModelInfo info_;
    Graph graph_;
};

/// Text header (model info, one line per layer) followed by per-parameter records:
/// `param <name> <rank> <dims...>` and then little-endian float32 values.
void save_checkpoint(const GraspModel& model, const std::filesystem::path& path);
GraspModel load_checkpoint(const std::filesystem::path& path);

}  // namespace graspinf
