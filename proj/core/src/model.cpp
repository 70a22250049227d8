#include "graspinf/model.hpp"

#include <fstream>
#include <sstream>

#include "graspinf/errors.hpp"
#include "graspinf/io.hpp"

namespace graspinf {

namespace {

constexpr std::string_view kMagic = "graspinf-checkpoint";
constexpr int kVersion = 1;

// Fixed input scaling so every channel is O(1): occupancy is centered and the clamped
// signed distance (+-0.2) is stretched to +-1.
std::vector<double> image_scale(int channels) {
    std::vector<double> s(channels, 1.0);
    if (channels > world::kSignedDistance) s[world::kSignedDistance] = 5.0;
    return s;
}

std::vector<double> image_shift(int channels) {
    std::vector<double> s(channels, 0.0);
    if (channels > world::kOccupancy) s[world::kOccupancy] = -0.5;
    return s;
}

// Relative configuration: offsets of about +-0.2, angles within +-2, openings near 0.1.
std::vector<double> config_scale(int dim) {
    if (dim == static_cast<int>(theta::dim)) return {10.0, 10.0, 2.0, 10.0};
    return std::vector<double>(dim, 1.0);
}

std::vector<double> config_shift(int dim) {
    if (dim == static_cast<int>(theta::dim)) return {0.0, 0.0, 0.0, -1.0};
    return std::vector<double>(dim, 0.0);
}

int same_pad(int kernel) { return kernel / 2; }

void image_branch(std::vector<LayerSpec>& L, const std::string& in, int c1, int k1, int c2, int k2) {
    L.push_back(layers::conv2d("conv1", in, c1, k1, same_pad(k1)));
    L.push_back(layers::relu("relu1", "conv1"));
    L.push_back(layers::conv2d("conv2", "relu1", c2, k2, same_pad(k2)));
    L.push_back(layers::relu("relu2", "conv2"));
    L.push_back(layers::maxpool2d("pool1", "relu2", 2));
}

std::string dims_text(const std::vector<int>& dims) {
    std::string out = std::to_string(dims.size());
    for (int d : dims) out += ' ' + std::to_string(d);
    return out;
}

}  // namespace

std::string_view to_string(Arch arch) {
    switch (arch) {
        case Arch::config_net: return "config-net";
        case Arch::patch_net: return "patch-net";
        case Arch::regression: return "regression";
    }
    return "unknown";
}

Arch parse_arch(std::string_view text) {
    if (text == "config-net") return Arch::config_net;
    if (text == "patch-net") return Arch::patch_net;
    if (text == "regression") return Arch::regression;
    throw FormatError("unknown architecture '" + std::string(text) + "'");
}

std::vector<LayerSpec> config_net_layers(const ConfigNetSpec& spec) {
    std::vector<LayerSpec> L;
    L.push_back(layers::input("image", spec.patch));
    L.push_back(layers::input("config", Shape3{spec.dim, 1, 1}));
    L.push_back(layers::affine("image_norm", "image", image_scale(spec.patch.c), image_shift(spec.patch.c)));
    L.push_back(layers::affine("config_norm", "config", config_scale(spec.dim), config_shift(spec.dim)));
    image_branch(L, "image_norm", spec.conv1_filters, spec.conv1_kernel, spec.conv2_filters, spec.conv2_kernel);
    L.push_back(layers::dense("config_fc", "config_norm", spec.config_units));
    L.push_back(layers::relu("config_relu", "config_fc"));
    L.push_back(layers::tile_concat("merge", "pool1", "config_relu"));
    L.push_back(layers::conv2d("conv3", "merge", spec.merge_filters, spec.merge_kernel, same_pad(spec.merge_kernel)));
    L.push_back(layers::relu("relu3", "conv3"));
    L.push_back(layers::maxpool2d("pool2", "relu3", 2));
    L.push_back(layers::dense("fc1", "pool2", spec.fc1_units));
    L.push_back(layers::relu("fc1_relu", "fc1"));
    L.push_back(layers::dropout("fc1_drop", "fc1_relu", spec.keep_prob));
    L.push_back(layers::dense("fc2", "fc1_drop", spec.fc2_units));
    L.push_back(layers::relu("fc2_relu", "fc2"));
    L.push_back(layers::dropout("fc2_drop", "fc2_relu", spec.keep_prob));
    L.push_back(layers::logistic("output", "fc2_drop"));
    return L;
}

std::vector<LayerSpec> patch_net_layers(const PatchNetSpec& spec) {
    std::vector<LayerSpec> L;
    std::vector<std::string> names{"palm"};
    for (int f = 0; f < spec.fingers; ++f) names.push_back("finger" + std::to_string(f));
    for (std::size_t k = 0; k < names.size(); ++k) {
        const int size = k == 0 ? spec.palm : spec.finger;
        L.push_back(layers::input(names[k], Shape3{spec.channels, size, size}));
    }
    for (const auto& n : names) {
        L.push_back(layers::affine(n + "_norm", n, image_scale(spec.channels), image_shift(spec.channels)));
        L.push_back(layers::conv2d(n + "_conv1", n + "_norm", spec.filters, spec.kernel, same_pad(spec.kernel)));
        L.push_back(layers::relu(n + "_relu1", n + "_conv1"));
        L.push_back(layers::conv2d(n + "_conv2", n + "_relu1", spec.filters, spec.kernel, same_pad(spec.kernel)));
        L.push_back(layers::relu(n + "_relu2", n + "_conv2"));
        L.push_back(layers::maxpool2d(n + "_pool", n + "_relu2", 2));
        L.push_back(layers::dense(n + "_fc", n + "_pool", spec.patch_units));
    }
    // Vector concatenation is a tile-concat onto a 1x1 map.
    std::string merged = names[0] + "_fc";
    for (std::size_t k = 1; k < names.size(); ++k) {
        const std::string name = "merge" + std::to_string(k);
        L.push_back(layers::tile_concat(name, merged, names[k] + "_fc"));
        merged = name;
    }
    L.push_back(layers::dense("fc", merged, spec.merge_units));
    L.push_back(layers::relu("fc_relu", "fc"));
    L.push_back(layers::dropout("fc_drop", "fc_relu", spec.keep_prob));
    L.push_back(layers::logistic("output", "fc_drop"));
    return L;
}

std::vector<LayerSpec> regression_net_layers(const RegressionNetSpec& spec) {
    std::vector<LayerSpec> L;
    L.push_back(layers::input("image", spec.image));
    L.push_back(layers::affine("image_norm", "image", image_scale(spec.image.c), image_shift(spec.image.c)));
    image_branch(L, "image_norm", spec.conv1_filters, spec.conv1_kernel, spec.conv2_filters, spec.conv2_kernel);
    L.push_back(layers::dense("fc1", "pool1", spec.fc1_units));
    L.push_back(layers::relu("fc1_relu", "fc1"));
    L.push_back(layers::dropout("fc1_drop", "fc1_relu", spec.keep_prob));
    L.push_back(layers::dense("fc2", "fc1_drop", spec.fc2_units));
    L.push_back(layers::relu("fc2_relu", "fc2"));
    L.push_back(layers::dropout("fc2_drop", "fc2_relu", spec.keep_prob));
    L.push_back(layers::linear_heads("heads", "fc2_drop", spec.dim));
    // Heads predict absolute coordinates in the same O(1) scaling as the config input,
    // with the workspace center as origin.
    std::vector<double> scale(spec.dim, 1.0);
    std::vector<double> shift(spec.dim, 0.0);
    if (spec.dim == static_cast<int>(theta::dim)) {
        const auto s = config_scale(spec.dim);
        const auto t = config_shift(spec.dim);
        const double origin[4] = {0.5, 0.5, 0.0, 0.0};
        for (int d = 0; d < spec.dim; ++d) {
            scale[d] = 1.0 / s[d];
            shift[d] = origin[d] - t[d] / s[d];
        }
    }
    L.push_back(layers::affine("theta", "heads", scale, shift));
    return L;
}

Graph build_config_net(const ConfigNetSpec& spec, std::uint64_t seed) {
    Graph g(config_net_layers(spec));
    g.xavier_init(seed);
    return g;
}

Graph build_patch_net(const PatchNetSpec& spec, std::uint64_t seed) {
    Graph g(patch_net_layers(spec));
    g.xavier_init(seed);
    return g;
}

Graph build_regression_net(const RegressionNetSpec& spec, std::uint64_t seed) {
    Graph g(regression_net_layers(spec));
    g.xavier_init(seed);
    return g;
}

// ---------------------------------------------------------------------------

GraspModel::GraspModel(ModelInfo info, Graph graph) : info_(info), graph_(std::move(graph)) {
    const std::size_t slots = graph_.slot_count();
    switch (info_.arch) {
        case Arch::config_net:
            if (slots != 2 || graph_.slot_shape(1) != Shape3{info_.dim, 1, 1} ||
                graph_.slot_shape(0) != Shape3{graph_.slot_shape(0).c, info_.object_patch, info_.object_patch}) {
                throw ShapeError("config-net graph does not match its model info");
            }
            break;
        case Arch::patch_net:
            if (slots < 2 || graph_.slot_shape(0).h != info_.grasp_patches.palm ||
                graph_.slot_shape(1).h != info_.grasp_patches.finger) {
                throw ShapeError("patch-net graph does not match its model info");
            }
            break;
        case Arch::regression:
            if (slots != 1 || graph_.output_shape() != Shape3{info_.dim, 1, 1}) {
                throw ShapeError("regression graph does not match its model info");
            }
            break;
    }
    if (info_.arch != Arch::regression && graph_.output_shape().size() != 1) {
        throw ShapeError("classifier graph must have a scalar output");
    }
}

GraspModel GraspModel::config_net(const ConfigNetSpec& spec, PatchMode mode, Interp interp, std::uint64_t seed) {
    if (spec.patch.h != spec.patch.w) throw std::invalid_argument("config-net patch must be square");
    ModelInfo info;
    info.arch = Arch::config_net;
    info.dim = spec.dim;
    info.seed = seed;
    info.patch_mode = mode;
    info.interp = interp;
    info.object_patch = spec.patch.h;
    return GraspModel(info, build_config_net(spec, seed));
}

GraspModel GraspModel::patch_net(const PatchNetSpec& spec, Interp interp, std::uint64_t seed) {
    if (spec.fingers != 2) throw std::invalid_argument("the toy gripper has exactly two fingers");
    ModelInfo info;
    info.arch = Arch::patch_net;
    info.dim = static_cast<int>(theta::dim);
    info.seed = seed;
    info.interp = interp;
    info.grasp_patches = {spec.palm, spec.finger};
    return GraspModel(info, build_patch_net(spec, seed));
}

GraspModel GraspModel::regression(const RegressionNetSpec& spec, std::uint64_t seed) {
    ModelInfo info;
    info.arch = Arch::regression;
    info.dim = spec.dim;
    info.seed = seed;
    info.object_patch = spec.image.h;
    return GraspModel(info, build_regression_net(spec, seed));
}

bool GraspModel::patches_depend_on_config() const noexcept {
    switch (info_.arch) {
        case Arch::config_net: return info_.patch_mode == PatchMode::palm_tracked;
        case Arch::patch_net: return true;
        case Arch::regression: return false;
    }
    return false;
}

std::vector<GridTensor> GraspModel::image_inputs(const world::Observation& obs, const GraspConfig& g) const {
    switch (info_.arch) {
        case Arch::config_net:
            return {extract_object_patch(obs, g, info_.patch_mode, info_.object_patch, info_.interp)};
        case Arch::patch_net:
            return extract_grasp_patches(obs, g, info_.grasp_patches, info_.interp);
        case Arch::regression:
            return {obs.grid};
    }
    return {};
}

GridTensor GraspModel::config_input(world::Vec2 anchor, const GraspConfig& g) const {
    if (g.size() != dim()) {
        throw ShapeError("configuration has " + std::to_string(g.size()) + " entries, model expects " +
                         std::to_string(dim()));
    }
    GridTensor c = GridTensor::from_vector(g.span());
    if (dim() == theta::dim) {
        c[theta::gx] -= anchor.x;
        c[theta::gy] -= anchor.y;
    }
    return c;
}

GridTensor GraspModel::config_input(const world::Observation& obs, const GraspConfig& g) const {
    return config_input(object_anchor(obs), g);
}

std::vector<GridTensor> GraspModel::inputs(const world::Observation& obs, const GraspConfig& g) const {
    auto in = image_inputs(obs, g);
    if (info_.arch == Arch::config_net) in.push_back(config_input(obs, g));
    return in;
}

double GraspModel::predict(Workspace& ws, const world::Observation& obs, const GraspConfig& g) const {
    if (!is_classifier()) throw StateError("predict called on a regression model");
    const auto in = inputs(obs, g);
    return graph_.forward_scalar(ws, in, Mode::eval);
}

double GraspModel::predict(const world::Observation& obs, const GraspConfig& g) const {
    Workspace ws;
    return predict(ws, obs, g);
}

GraspConfig GraspModel::regress(const world::Observation& obs) const {
    if (info_.arch != Arch::regression) throw StateError("regress called on a classifier model");
    Workspace ws;
    const std::vector<GridTensor> in{obs.grid};
    const GridTensor& out = graph_.forward(ws, in, Mode::eval);
    return GraspConfig(std::vector<double>(out.data().begin(), out.data().end()));
}

// ---------------------------------------------------------------------------

void save_checkpoint(const GraspModel& model, const std::filesystem::path& path) {
    const ModelInfo& info = model.info();
    const Graph& graph = model.graph();
    io::write_atomically(path, true, [&](std::ostream& out) {
        out << kMagic << ' ' << kVersion << '\n';
        out << "arch " << to_string(info.arch) << '\n';
        out << "dim " << info.dim << '\n';
        out << "seed " << info.seed << '\n';
        out << "patch-mode " << to_string(info.patch_mode) << '\n';
        out << "interp " << to_string(info.interp) << '\n';
        out << "object-patch " << info.object_patch << '\n';
        out << "palm-patch " << info.grasp_patches.palm << '\n';
        out << "finger-patch " << info.grasp_patches.finger << '\n';
        out << "layers " << graph.specs().size() << '\n';
        for (const auto& s : graph.specs()) out << to_text(s) << '\n';
        out << "params " << graph.params().size() << '\n';
        for (const auto& p : graph.params()) {
            out << "param " << p.name() << ' ' << dims_text(p.dims()) << '\n';
            io::put_f32_array(out, p.values());
        }
    });
}

GraspModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint '" + path.string() + "'");
    const std::string where = "checkpoint '" + path.string() + "'";
    auto field = [&](std::string_view key) {
        auto tok = io::split_ws(io::read_line(in, where));
        if (tok.size() != 2 || tok[0] != key) throw FormatError(where + ": expected '" + std::string(key) + "' line");
        return tok[1];
    };
    auto tok = io::split_ws(io::read_line(in, where));
    if (tok.size() != 2 || tok[0] != kMagic) throw FormatError("'" + path.string() + "' is not a checkpoint file");
    if (io::parse_int(tok[1], "checkpoint version") != kVersion) {
        throw FormatError(where + ": unsupported version " + tok[1]);
    }
    ModelInfo info;
    info.arch = parse_arch(field("arch"));
    info.dim = static_cast<int>(io::parse_int(field("dim"), "dim"));
    info.seed = std::stoull(field("seed"));
    info.patch_mode = parse_patch_mode(field("patch-mode"));
    info.interp = parse_interp(field("interp"));
    info.object_patch = static_cast<int>(io::parse_int(field("object-patch"), "object-patch"));
    info.grasp_patches.palm = static_cast<int>(io::parse_int(field("palm-patch"), "palm-patch"));
    info.grasp_patches.finger = static_cast<int>(io::parse_int(field("finger-patch"), "finger-patch"));
    const auto layer_count = io::parse_int(field("layers"), "layers");
    std::vector<LayerSpec> specs;
    for (long long i = 0; i < layer_count; ++i) specs.push_back(parse_layer_spec(io::read_line(in, where)));
    Graph graph(std::move(specs));
    const auto param_count = io::parse_int(field("params"), "params");
    if (param_count != static_cast<long long>(graph.params().size())) {
        throw FormatError(where + ": parameter count does not match the layer list");
    }
    for (auto& p : graph.params()) {
        tok = io::split_ws(io::read_line(in, where));
        if (tok.size() < 3 || tok[0] != "param" || tok[1] != p.name()) {
            throw FormatError(where + ": expected record for parameter '" + p.name() + "'");
        }
        std::vector<int> dims;
        const auto rank = io::parse_int(tok[2], "rank");
        if (static_cast<long long>(tok.size()) != 3 + rank) throw FormatError(where + ": bad shape for " + p.name());
        for (long long d = 0; d < rank; ++d) dims.push_back(static_cast<int>(io::parse_int(tok[3 + d], "dim")));
        if (dims != p.dims()) throw FormatError(where + ": shape mismatch for parameter '" + p.name() + "'");
        io::get_f32_array(in, p.values());
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError(where + ": trailing data");
    return GraspModel(info, std::move(graph));
}

}  // namespace graspinf
