#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "graspinf/tensor.hpp"

namespace graspinf {

enum class LayerKind {
    input,
    dense,
    conv2d,
    maxpool2d,
    relu,
    dropout,
    tile_concat,
    logistic,
    linear_heads,
    affine,
};

enum class Mode { train, eval };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

/// One node of a static layer graph. Only the fields relevant to `kind` are read.
///
/// tile_concat takes two inputs: a feature map (C1,H,W) and a vector (C2,1,1); the
/// vector is broadcast over every cell and appended after the map's channels.
/// logistic is a single-unit dense layer followed by the sigmoid. affine is a
/// fixed per-channel `x * scale + shift` with no trainable parameters.
struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::input;
    std::vector<std::string> inputs;

    Shape3 shape{};    // input
    int units = 0;     // dense, linear_heads
    int filters = 0;   // conv2d
    int kernel = 0;    // conv2d
    int stride = 1;    // conv2d
    int padding = 0;   // conv2d, zero padding on every side
    int window = 2;    // maxpool2d, window == stride
    double keep_prob = 1.0;  // dropout
    std::vector<double> scale;  // affine
    std::vector<double> shift;  // affine

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// One-line `key=value` rendering, exact for every double hyperparameter.
std::string to_text(const LayerSpec& spec);
LayerSpec parse_layer_spec(std::string_view line);

namespace layers {
LayerSpec input(std::string name, Shape3 shape);
LayerSpec dense(std::string name, std::string in, int units);
LayerSpec conv2d(std::string name, std::string in, int filters, int kernel, int padding = 0, int stride = 1);
LayerSpec maxpool2d(std::string name, std::string in, int window = 2);
LayerSpec relu(std::string name, std::string in);
LayerSpec dropout(std::string name, std::string in, double keep_prob);
LayerSpec tile_concat(std::string name, std::string map, std::string vec);
LayerSpec logistic(std::string name, std::string in);
LayerSpec linear_heads(std::string name, std::string in, int heads);
LayerSpec affine(std::string name, std::string in, std::vector<double> scale, std::vector<double> shift);
}  // namespace layers

/// Per-parameter gradient buffers, index-aligned with Graph::params().
using ParamGradients = std::vector<std::vector<double>>;

class Graph;

/// Activation cache for one forward/backward sequence. One workspace per thread.
class Workspace {
public:
    Workspace() = default;

    [[nodiscard]] bool has_forward() const noexcept { return has_forward_; }
    [[nodiscard]] Mode mode() const noexcept { return mode_; }
    /// Activation of node `index` from the last forward pass.
    [[nodiscard]] const GridTensor& activation(std::size_t index) const { return act_.at(index); }

private:
    friend class Graph;

    const Graph* owner_ = nullptr;
    bool has_forward_ = false;
    Mode mode_ = Mode::eval;
    std::vector<GridTensor> act_;
    std::vector<GridTensor> grad_;
    std::vector<std::vector<double>> cols_;     // im2col buffers for conv2d nodes
    std::vector<std::vector<int>> argmax_;      // maxpool2d routing
    std::vector<std::vector<double>> mask_;     // dropout multipliers
    std::vector<bool> need_;
};

/// Static, acyclic layer graph. Immutable after construction except for parameter
/// values, which the trainer updates in place.
///
/// Every node is either an input slot or a layer whose inputs are earlier nodes.
/// The last node is the output. Shapes are inferred at construction and any
/// inconsistency raises ShapeError naming the offending layer.
class Graph {
public:
    explicit Graph(std::vector<LayerSpec> specs);

    [[nodiscard]] const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
    [[nodiscard]] std::size_t node_count() const noexcept { return specs_.size(); }
    [[nodiscard]] std::size_t node_index(std::string_view name) const;
    [[nodiscard]] Shape3 node_shape(std::size_t index) const { return nodes_.at(index).out; }
    [[nodiscard]] Shape3 node_shape(std::string_view name) const { return node_shape(node_index(name)); }

    [[nodiscard]] std::size_t slot_count() const noexcept { return slots_.size(); }
    [[nodiscard]] std::size_t slot_index(std::string_view name) const;
    [[nodiscard]] const std::string& slot_name(std::size_t slot) const { return specs_.at(slots_.at(slot)).name; }
    [[nodiscard]] Shape3 slot_shape(std::size_t slot) const { return nodes_.at(slots_.at(slot)).out; }
    [[nodiscard]] Shape3 output_shape() const noexcept { return nodes_.back().out; }

    [[nodiscard]] std::vector<ParamVector>& params() noexcept { return params_; }
    [[nodiscard]] const std::vector<ParamVector>& params() const noexcept { return params_; }
    [[nodiscard]] std::size_t parameter_count() const noexcept;
    [[nodiscard]] ParamGradients zero_gradients() const;

    /// Xavier/Glorot uniform weights, zero biases. Deterministic in `seed`.
    void xavier_init(std::uint64_t seed);

    /// Full forward pass. `inputs` are given in slot order. Train mode draws dropout
    /// masks from `dropout_seed`; eval mode is deterministic and dropout is identity.
    const GridTensor& forward(Workspace& ws, std::span<const GridTensor> inputs, Mode mode,
                              std::uint64_t dropout_seed = 0) const;

    /// Eval-mode re-evaluation after only the slots in `changed_slots` (bit i = slot i)
    /// changed. Nodes that do not depend on those slots keep their cached activations.
    const GridTensor& forward_update(Workspace& ws, std::span<const GridTensor> inputs,
                                     unsigned changed_slots) const;

    /// Scalar convenience for single-output graphs.
    double forward_scalar(Workspace& ws, std::span<const GridTensor> inputs, Mode mode,
                          std::uint64_t dropout_seed = 0) const;

    /// Gradient of `upstream . output` w.r.t. every parameter, written into `grads`
    /// (resized and zeroed first).
    void backward_weights(Workspace& ws, const GridTensor& upstream, ParamGradients& grads) const;
    void backward_weights(Workspace& ws, double upstream, ParamGradients& grads) const;
    ParamGradients backward_weights(Workspace& ws, double upstream) const;

    /// Gradient of `upstream . output` w.r.t. the slots in `wanted_slots`. Requires an
    /// eval-mode forward. Entries for slots not requested are left empty.
    std::vector<GridTensor> backward_inputs(Workspace& ws, const GridTensor& upstream,
                                            unsigned wanted_slots) const;
    std::vector<GridTensor> backward_inputs(Workspace& ws, double upstream, unsigned wanted_slots) const;

private:
    struct Node {
        std::vector<std::size_t> in;
        Shape3 out{};
        unsigned slot_mask = 0;      // which input slots this node depends on
        bool param_upstream = false;  // this node or an ancestor owns parameters
        int weight = -1;
        int bias = -1;
    };

    void infer_shapes();
    void check_inputs(std::span<const GridTensor> inputs) const;
    void prepare(Workspace& ws) const;
    void run_node(Workspace& ws, std::size_t i, Mode mode, std::mt19937_64* rng) const;
    void back_node(Workspace& ws, std::size_t i, ParamGradients* grads) const;
    void backward(Workspace& ws, const GridTensor& upstream, ParamGradients* grads, unsigned wanted_slots) const;

    std::vector<LayerSpec> specs_;
    std::vector<Node> nodes_;
    std::vector<std::size_t> slots_;
    std::vector<ParamVector> params_;
};

}  // namespace graspinf
