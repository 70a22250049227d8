#include "graspinf/graph.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "graspinf/errors.hpp"

namespace graspinf {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

constexpr std::pair<LayerKind, std::string_view> kKindNames[] = {
    {LayerKind::input, "input"},
    {LayerKind::dense, "dense"},
    {LayerKind::conv2d, "conv2d"},
    {LayerKind::maxpool2d, "maxpool2d"},
    {LayerKind::relu, "relu"},
    {LayerKind::dropout, "dropout"},
    {LayerKind::tile_concat, "tile-concat"},
    {LayerKind::logistic, "logistic"},
    {LayerKind::linear_heads, "linear-heads"},
    {LayerKind::affine, "affine"},
};

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_double(values[i]);
    }
    return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find(sep, start);
        const auto end = pos == std::string_view::npos ? text.size() : pos;
        out.emplace_back(text.substr(start, end - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

int parse_int(std::string_view text, std::string_view key) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw FormatError("layer spec: bad integer for '" + std::string(key) + "': " + std::string(text));
    }
    return v;
}

double parse_double(std::string_view text, std::string_view key) {
    std::string s(text);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw FormatError("layer spec: bad number for '" + std::string(key) + "': " + s);
    }
    return v;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

LayerKind parse_layer_kind(std::string_view text) {
    for (const auto& [k, name] : kKindNames) {
        if (name == text) return k;
    }
    throw FormatError("unknown layer kind: " + std::string(text));
}

std::string to_text(const LayerSpec& spec) {
    std::ostringstream os;
    os << "name=" << spec.name << " kind=" << to_string(spec.kind);
    if (!spec.inputs.empty()) {
        os << " in=";
        for (std::size_t i = 0; i < spec.inputs.size(); ++i) os << (i ? "," : "") << spec.inputs[i];
    }
    switch (spec.kind) {
        case LayerKind::input:
            os << " shape=" << spec.shape.c << "x" << spec.shape.h << "x" << spec.shape.w;
            break;
        case LayerKind::dense:
        case LayerKind::linear_heads:
            os << " units=" << spec.units;
            break;
        case LayerKind::conv2d:
            os << " filters=" << spec.filters << " kernel=" << spec.kernel << " stride=" << spec.stride
               << " padding=" << spec.padding;
            break;
        case LayerKind::maxpool2d:
            os << " window=" << spec.window;
            break;
        case LayerKind::dropout:
            os << " keep=" << format_double(spec.keep_prob);
            break;
        case LayerKind::affine:
            os << " scale=" << join_doubles(spec.scale) << " shift=" << join_doubles(spec.shift);
            break;
        default:
            break;
    }
    return os.str();
}

LayerSpec parse_layer_spec(std::string_view line) {
    LayerSpec spec;
    bool have_name = false;
    bool have_kind = false;
    std::istringstream is{std::string(line)};
    std::string token;
    while (is >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw FormatError("layer spec: expected key=value, got '" + token + "'");
        const std::string key = token.substr(0, eq);
        const std::string_view value = std::string_view(token).substr(eq + 1);
        if (key == "name") {
            spec.name = value;
            have_name = true;
        } else if (key == "kind") {
            spec.kind = parse_layer_kind(value);
            have_kind = true;
        } else if (key == "in") {
            spec.inputs = split(value, ',');
        } else if (key == "shape") {
            const auto parts = split(value, 'x');
            if (parts.size() != 3) throw FormatError("layer spec: shape must be CxHxW");
            spec.shape = {parse_int(parts[0], key), parse_int(parts[1], key), parse_int(parts[2], key)};
        } else if (key == "units") {
            spec.units = parse_int(value, key);
        } else if (key == "filters") {
            spec.filters = parse_int(value, key);
        } else if (key == "kernel") {
            spec.kernel = parse_int(value, key);
        } else if (key == "stride") {
            spec.stride = parse_int(value, key);
        } else if (key == "padding") {
            spec.padding = parse_int(value, key);
        } else if (key == "window") {
            spec.window = parse_int(value, key);
        } else if (key == "keep") {
            spec.keep_prob = parse_double(value, key);
        } else if (key == "scale" || key == "shift") {
            std::vector<double> values;
            for (const auto& part : split(value, ',')) values.push_back(parse_double(part, key));
            (key == "scale" ? spec.scale : spec.shift) = std::move(values);
        } else {
            throw FormatError("layer spec: unknown key '" + key + "'");
        }
    }
    if (!have_name || !have_kind) throw FormatError("layer spec: missing name or kind in '" + std::string(line) + "'");
    return spec;
}

namespace layers {

LayerSpec input(std::string name, Shape3 shape) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = LayerKind::input;
    s.shape = shape;
    return s;
}

LayerSpec dense(std::string name, std::string in, int units) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = LayerKind::dense;
    s.inputs = {std::move(in)};
    s.units = units;
    return s;
}

LayerSpec conv2d(std::string name, std::string in, int filters, int kernel, int padding, int stride) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = LayerKind::conv2d;
    s.inputs = {std::move(in)};
    s.filters = filters;
    s.kernel = kernel;
    s.padding = padding;
    s.stride = stride;
    return s;
}

LayerSpec maxpool2d(std::string name, std::string in, int window) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = LayerKind::maxpool2d;
    s.inputs = {std::move(in)};
    s.window = window;
    return s;
}

LayerSpec relu(std::string name, std::string in) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = LayerKind::relu;
    s.inputs = {std::move(in)};
    return s;
}

LayerSpec dropout(std::string name, std::string in, double keep_prob) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = LayerKind::dropout;
    s.inputs = {std::move(in)};
    s.keep_prob = keep_prob;
    return s;
}

LayerSpec tile_concat(std::string name, std::string map, std::string vec) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = LayerKind::tile_concat;
    s.inputs = {std::move(map), std::move(vec)};
    return s;
}

LayerSpec logistic(std::string name, std::string in) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = LayerKind::logistic;
    s.inputs = {std::move(in)};
    return s;
}

LayerSpec linear_heads(std::string name, std::string in, int heads) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = LayerKind::linear_heads;
    s.inputs = {std::move(in)};
    s.units = heads;
    return s;
}

LayerSpec affine(std::string name, std::string in, std::vector<double> scale, std::vector<double> shift) {
    LayerSpec s;
    s.name = std::move(name);
    s.kind = LayerKind::affine;
    s.inputs = {std::move(in)};
    s.scale = std::move(scale);
    s.shift = std::move(shift);
    return s;
}

}  // namespace layers

// ---------------------------------------------------------------------------
// Construction and shape inference
// ---------------------------------------------------------------------------

Graph::Graph(std::vector<LayerSpec> specs) : specs_(std::move(specs)) {
    if (specs_.empty()) throw ShapeError("graph has no layers");
    infer_shapes();
}

void Graph::infer_shapes() {
    std::unordered_map<std::string, std::size_t> by_name;
    nodes_.assign(specs_.size(), Node{});

    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const LayerSpec& s = specs_[i];
        Node& node = nodes_[i];
        const std::string where = "layer '" + s.name + "' (" + std::string(to_string(s.kind)) + ")";
        auto fail = [&](const std::string& why) { throw ShapeError(where + ": " + why); };

        if (s.name.empty()) fail("empty name");
        if (by_name.count(s.name)) fail("duplicate layer name");

        const std::size_t arity = s.kind == LayerKind::input ? 0 : (s.kind == LayerKind::tile_concat ? 2 : 1);
        if (s.inputs.size() != arity) {
            fail("expects " + std::to_string(arity) + " input(s), got " + std::to_string(s.inputs.size()));
        }
        for (const auto& in : s.inputs) {
            const auto it = by_name.find(in);
            if (it == by_name.end()) fail("input '" + in + "' is not an earlier layer or slot");
            node.in.push_back(it->second);
            node.slot_mask |= nodes_[it->second].slot_mask;
            node.param_upstream = node.param_upstream || nodes_[it->second].param_upstream;
        }

        const Shape3 x = arity > 0 ? nodes_[node.in[0]].out : Shape3{};
        auto add_params = [&](std::vector<int> wdims, int bias_len) {
            node.weight = static_cast<int>(params_.size());
            params_.emplace_back(s.name + ".weight", std::move(wdims));
            node.bias = static_cast<int>(params_.size());
            params_.emplace_back(s.name + ".bias", std::vector<int>{bias_len});
            node.param_upstream = true;
        };

        switch (s.kind) {
            case LayerKind::input:
                if (s.shape.c <= 0 || s.shape.h <= 0 || s.shape.w <= 0) fail("non-positive slot shape");
                if (slots_.size() >= 32) fail("too many input slots");
                node.out = s.shape;
                node.slot_mask = 1u << slots_.size();
                slots_.push_back(i);
                break;
            case LayerKind::dense:
            case LayerKind::linear_heads:
            case LayerKind::logistic: {
                const int units = s.kind == LayerKind::logistic ? 1 : s.units;
                if (units <= 0) fail("units must be positive");
                const int n = static_cast<int>(x.size());
                add_params({units, n}, units);
                node.out = {units, 1, 1};
                break;
            }
            case LayerKind::conv2d: {
                if (s.filters <= 0 || s.kernel <= 0 || s.stride <= 0 || s.padding < 0) {
                    fail("filters/kernel/stride must be positive and padding non-negative");
                }
                const int hp = x.h + 2 * s.padding;
                const int wp = x.w + 2 * s.padding;
                if (hp < s.kernel || wp < s.kernel) {
                    fail("kernel " + std::to_string(s.kernel) + " larger than padded input " + to_string(x));
                }
                add_params({s.filters, x.c, s.kernel, s.kernel}, s.filters);
                node.out = {s.filters, (hp - s.kernel) / s.stride + 1, (wp - s.kernel) / s.stride + 1};
                break;
            }
            case LayerKind::maxpool2d:
                if (s.window <= 0) fail("window must be positive");
                if (x.h < s.window || x.w < s.window) fail("window larger than input " + to_string(x));
                node.out = {x.c, x.h / s.window, x.w / s.window};
                break;
            case LayerKind::relu:
                node.out = x;
                break;
            case LayerKind::dropout:
                if (!(s.keep_prob > 0.0 && s.keep_prob <= 1.0)) fail("keep probability must be in (0, 1]");
                node.out = x;
                break;
            case LayerKind::affine:
                if (s.scale.size() != static_cast<std::size_t>(x.c) || s.shift.size() != static_cast<std::size_t>(x.c)) {
                    fail("scale/shift length must equal channel count " + std::to_string(x.c));
                }
                node.out = x;
                break;
            case LayerKind::tile_concat: {
                const Shape3 v = nodes_[node.in[1]].out;
                if (!v.is_vector()) fail("second input must be a vector, got " + to_string(v));
                node.out = {x.c + v.c, x.h, x.w};
                break;
            }
        }
        by_name.emplace(s.name, i);
    }
    if (slots_.empty()) throw ShapeError("graph declares no input slot");
    if (specs_.back().kind == LayerKind::input) throw ShapeError("graph output must be a layer, not an input slot");
}

std::size_t Graph::node_index(std::string_view name) const {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        if (specs_[i].name == name) return i;
    }
    throw std::out_of_range("no layer named '" + std::string(name) + "'");
}

std::size_t Graph::slot_index(std::string_view name) const {
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        if (specs_[slots_[k]].name == name) return k;
    }
    throw std::out_of_range("no input slot named '" + std::string(name) + "'");
}

std::size_t Graph::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

ParamGradients Graph::zero_gradients() const {
    ParamGradients g(params_.size());
    for (std::size_t k = 0; k < params_.size(); ++k) g[k].assign(params_[k].size(), 0.0);
    return g;
}

void Graph::xavier_init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& node = nodes_[i];
        if (node.weight < 0) continue;
        ParamVector& w = params_[node.weight];
        const auto& d = w.dims();
        double fan_in = 0.0;
        double fan_out = 0.0;
        if (d.size() == 4) {  // conv: F, C, k, k
            fan_in = static_cast<double>(d[1]) * d[2] * d[3];
            fan_out = static_cast<double>(d[0]) * d[2] * d[3];
        } else {
            fan_in = d[1];
            fan_out = d[0];
        }
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : w.values()) v = dist(rng);
        auto b = params_[node.bias].values();
        std::fill(b.begin(), b.end(), 0.0);
    }
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

void Graph::check_inputs(std::span<const GridTensor> inputs) const {
    if (inputs.size() != slots_.size()) {
        throw ShapeError("graph expects " + std::to_string(slots_.size()) + " input(s), got " +
                         std::to_string(inputs.size()));
    }
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        const Shape3 want = nodes_[slots_[k]].out;
        if (!(inputs[k].shape() == want)) {
            throw ShapeError("input slot '" + specs_[slots_[k]].name + "': expected shape " + to_string(want) +
                             ", got " + to_string(inputs[k].shape()));
        }
        if (!inputs[k].all_finite()) {
            throw NumericError("input slot '" + specs_[slots_[k]].name + "' contains non-finite values");
        }
    }
}

void Graph::prepare(Workspace& ws) const {
    if (ws.owner_ == this && ws.act_.size() == nodes_.size()) return;
    ws.owner_ = this;
    ws.has_forward_ = false;
    ws.act_.clear();
    ws.grad_.clear();
    for (const Node& node : nodes_) {
        ws.act_.emplace_back(node.out);
        ws.grad_.emplace_back(node.out);
    }
    ws.cols_.assign(nodes_.size(), {});
    ws.argmax_.assign(nodes_.size(), {});
    ws.mask_.assign(nodes_.size(), {});
    ws.need_.assign(nodes_.size(), false);
}

void Graph::run_node(Workspace& ws, std::size_t i, Mode mode, std::mt19937_64* rng) const {
    const LayerSpec& s = specs_[i];
    const Node& node = nodes_[i];
    GridTensor& y = ws.act_[i];

    switch (s.kind) {
        case LayerKind::input:
            break;
        case LayerKind::dense:
        case LayerKind::linear_heads: {
            const GridTensor& x = ws.act_[node.in[0]];
            const auto& w = params_[node.weight];
            CMapMat W(w.values().data(), w.dims()[0], w.dims()[1]);
            CMapVec xv(x.data().data(), static_cast<Eigen::Index>(x.size()));
            CMapVec b(params_[node.bias].values().data(), w.dims()[0]);
            MapVec yv(y.data().data(), w.dims()[0]);
            yv.noalias() = W * xv;
            yv += b;
            break;
        }
        case LayerKind::logistic: {
            const GridTensor& x = ws.act_[node.in[0]];
            CMapVec w(params_[node.weight].values().data(), static_cast<Eigen::Index>(x.size()));
            CMapVec xv(x.data().data(), static_cast<Eigen::Index>(x.size()));
            y[0] = sigmoid(w.dot(xv) + params_[node.bias].values()[0]);
            break;
        }
        case LayerKind::conv2d: {
            const GridTensor& x = ws.act_[node.in[0]];
            const int C = x.channels(), H = x.height(), W = x.width();
            const int k = s.kernel, st = s.stride, pad = s.padding;
            const int Ho = node.out.h, Wo = node.out.w;
            const std::size_t N = static_cast<std::size_t>(Ho) * Wo;
            const std::size_t K = static_cast<std::size_t>(C) * k * k;
            auto& col = ws.cols_[i];
            col.resize(K * N);
            for (int c = 0; c < C; ++c) {
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        double* row = col.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * N;
                        for (int oy = 0; oy < Ho; ++oy) {
                            const int iy = oy * st + ky - pad;
                            double* dst = row + static_cast<std::size_t>(oy) * Wo;
                            if (iy < 0 || iy >= H) {
                                std::fill(dst, dst + Wo, 0.0);
                                continue;
                            }
                            for (int ox = 0; ox < Wo; ++ox) {
                                const int ix = ox * st + kx - pad;
                                dst[ox] = (ix >= 0 && ix < W) ? x.at(c, iy, ix) : 0.0;
                            }
                        }
                    }
                }
            }
            CMapMat Wm(params_[node.weight].values().data(), s.filters, static_cast<Eigen::Index>(K));
            CMapMat colm(col.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(N));
            MapMat Y(y.data().data(), s.filters, static_cast<Eigen::Index>(N));
            Y.noalias() = Wm * colm;
            Y.colwise() += CMapVec(params_[node.bias].values().data(), s.filters);
            break;
        }
        case LayerKind::maxpool2d: {
            const GridTensor& x = ws.act_[node.in[0]];
            const int win = s.window;
            auto& arg = ws.argmax_[i];
            arg.resize(y.size());
            std::size_t o = 0;
            for (int c = 0; c < node.out.c; ++c) {
                for (int oy = 0; oy < node.out.h; ++oy) {
                    for (int ox = 0; ox < node.out.w; ++ox, ++o) {
                        // Strict '>' in row-major scan: ties go to the first cell.
                        int best_y = oy * win, best_x = ox * win;
                        double best = x.at(c, best_y, best_x);
                        for (int dy = 0; dy < win; ++dy) {
                            for (int dx = 0; dx < win; ++dx) {
                                const double v = x.at(c, oy * win + dy, ox * win + dx);
                                if (v > best) {
                                    best = v;
                                    best_y = oy * win + dy;
                                    best_x = ox * win + dx;
                                }
                            }
                        }
                        y[o] = best;
                        arg[o] = (c * x.height() + best_y) * x.width() + best_x;
                    }
                }
            }
            break;
        }
        case LayerKind::relu: {
            const GridTensor& x = ws.act_[node.in[0]];
            for (std::size_t j = 0; j < y.size(); ++j) y[j] = x[j] > 0.0 ? x[j] : 0.0;
            break;
        }
        case LayerKind::dropout: {
            const GridTensor& x = ws.act_[node.in[0]];
            auto& mask = ws.mask_[i];
            if (mode == Mode::eval || s.keep_prob >= 1.0) {
                mask.clear();
                std::copy(x.data().begin(), x.data().end(), y.data().begin());
            } else {
                std::bernoulli_distribution keep(s.keep_prob);
                mask.resize(y.size());
                const double inv = 1.0 / s.keep_prob;
                for (std::size_t j = 0; j < y.size(); ++j) {
                    mask[j] = keep(*rng) ? inv : 0.0;
                    y[j] = x[j] * mask[j];
                }
            }
            break;
        }
        case LayerKind::affine: {
            const GridTensor& x = ws.act_[node.in[0]];
            for (int c = 0; c < x.channels(); ++c) {
                auto src = x.channel(c);
                auto dst = y.channel(c);
                for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] * s.scale[c] + s.shift[c];
            }
            break;
        }
        case LayerKind::tile_concat: {
            const GridTensor& map = ws.act_[node.in[0]];
            const GridTensor& vec = ws.act_[node.in[1]];
            std::copy(map.data().begin(), map.data().end(), y.data().begin());
            for (int c = 0; c < vec.channels(); ++c) {
                auto dst = y.channel(map.channels() + c);
                std::fill(dst.begin(), dst.end(), vec[static_cast<std::size_t>(c)]);
            }
            break;
        }
    }
}

const GridTensor& Graph::forward(Workspace& ws, std::span<const GridTensor> inputs, Mode mode,
                                 std::uint64_t dropout_seed) const {
    check_inputs(inputs);
    prepare(ws);
    ws.has_forward_ = false;
    std::mt19937_64 rng(dropout_seed);
    for (std::size_t k = 0; k < slots_.size(); ++k) ws.act_[slots_[k]] = inputs[k];
    for (std::size_t i = 0; i < nodes_.size(); ++i) run_node(ws, i, mode, &rng);
    if (!ws.act_.back().all_finite()) throw NumericError("forward produced a non-finite output");
    ws.mode_ = mode;
    ws.has_forward_ = true;
    return ws.act_.back();
}

const GridTensor& Graph::forward_update(Workspace& ws, std::span<const GridTensor> inputs,
                                        unsigned changed_slots) const {
    if (ws.owner_ != this || !ws.has_forward_) throw StateError("forward_update called before a full forward pass");
    if (ws.mode_ != Mode::eval) throw StateError("forward_update requires a cached eval-mode forward");
    check_inputs(inputs);
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        if (changed_slots & (1u << k)) ws.act_[slots_[k]] = inputs[k];
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (specs_[i].kind != LayerKind::input && (nodes_[i].slot_mask & changed_slots)) {
            run_node(ws, i, Mode::eval, nullptr);
        }
    }
    if (!ws.act_.back().all_finite()) throw NumericError("forward produced a non-finite output");
    return ws.act_.back();
}

double Graph::forward_scalar(Workspace& ws, std::span<const GridTensor> inputs, Mode mode,
                             std::uint64_t dropout_seed) const {
    if (output_shape().size() != 1) throw ShapeError("forward_scalar on a graph with non-scalar output");
    return forward(ws, inputs, mode, dropout_seed)[0];
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

void Graph::back_node(Workspace& ws, std::size_t i, ParamGradients* grads) const {
    const LayerSpec& s = specs_[i];
    const Node& node = nodes_[i];
    const GridTensor& dy = ws.grad_[i];
    const GridTensor& y = ws.act_[i];
    const bool need_dx = !node.in.empty() && ws.need_[node.in[0]];

    switch (s.kind) {
        case LayerKind::input:
            break;
        case LayerKind::dense:
        case LayerKind::linear_heads: {
            const GridTensor& x = ws.act_[node.in[0]];
            const auto& w = params_[node.weight];
            const Eigen::Index out = w.dims()[0], n = w.dims()[1];
            CMapVec dyv(dy.data().data(), out);
            CMapVec xv(x.data().data(), n);
            if (grads) {
                MapMat dW((*grads)[node.weight].data(), out, n);
                dW.noalias() += dyv * xv.transpose();
                MapVec((*grads)[node.bias].data(), out) += dyv;
            }
            if (need_dx) {
                CMapMat W(w.values().data(), out, n);
                MapVec(ws.grad_[node.in[0]].data().data(), n).noalias() += W.transpose() * dyv;
            }
            break;
        }
        case LayerKind::logistic: {
            const GridTensor& x = ws.act_[node.in[0]];
            const double p = y[0];
            const double dz = dy[0] * p * (1.0 - p);
            const Eigen::Index n = static_cast<Eigen::Index>(x.size());
            if (grads) {
                MapVec((*grads)[node.weight].data(), n) += dz * CMapVec(x.data().data(), n);
                (*grads)[node.bias][0] += dz;
            }
            if (need_dx) {
                MapVec(ws.grad_[node.in[0]].data().data(), n) += dz * CMapVec(params_[node.weight].values().data(), n);
            }
            break;
        }
        case LayerKind::conv2d: {
            const GridTensor& x = ws.act_[node.in[0]];
            const int C = x.channels(), H = x.height(), W = x.width();
            const int k = s.kernel, st = s.stride, pad = s.padding;
            const int Ho = node.out.h, Wo = node.out.w;
            const Eigen::Index N = static_cast<Eigen::Index>(Ho) * Wo;
            const Eigen::Index K = static_cast<Eigen::Index>(C) * k * k;
            CMapMat DY(dy.data().data(), s.filters, N);
            if (grads) {
                CMapMat colm(ws.cols_[i].data(), K, N);
                MapMat((*grads)[node.weight].data(), s.filters, K).noalias() += DY * colm.transpose();
                MapVec((*grads)[node.bias].data(), s.filters) += DY.rowwise().sum();
            }
            if (need_dx) {
                CMapMat Wm(params_[node.weight].values().data(), s.filters, K);
                const RowMat dcol = Wm.transpose() * DY;
                GridTensor& dx = ws.grad_[node.in[0]];
                for (int c = 0; c < C; ++c) {
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) {
                            const double* row = dcol.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * N;
                            for (int oy = 0; oy < Ho; ++oy) {
                                const int iy = oy * st + ky - pad;
                                if (iy < 0 || iy >= H) continue;
                                for (int ox = 0; ox < Wo; ++ox) {
                                    const int ix = ox * st + kx - pad;
                                    if (ix >= 0 && ix < W) dx.at(c, iy, ix) += row[oy * Wo + ox];
                                }
                            }
                        }
                    }
                }
            }
            break;
        }
        case LayerKind::maxpool2d:
            if (need_dx) {
                GridTensor& dx = ws.grad_[node.in[0]];
                const auto& arg = ws.argmax_[i];
                for (std::size_t o = 0; o < dy.size(); ++o) dx[static_cast<std::size_t>(arg[o])] += dy[o];
            }
            break;
        case LayerKind::relu:
            if (need_dx) {
                GridTensor& dx = ws.grad_[node.in[0]];
                for (std::size_t j = 0; j < dy.size(); ++j) {
                    if (y[j] > 0.0) dx[j] += dy[j];
                }
            }
            break;
        case LayerKind::dropout:
            if (need_dx) {
                GridTensor& dx = ws.grad_[node.in[0]];
                const auto& mask = ws.mask_[i];
                if (mask.empty()) {
                    for (std::size_t j = 0; j < dy.size(); ++j) dx[j] += dy[j];
                } else {
                    for (std::size_t j = 0; j < dy.size(); ++j) dx[j] += dy[j] * mask[j];
                }
            }
            break;
        case LayerKind::affine:
            if (need_dx) {
                GridTensor& dx = ws.grad_[node.in[0]];
                for (int c = 0; c < dy.channels(); ++c) {
                    auto src = dy.channel(c);
                    auto dst = dx.channel(c);
                    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j] * s.scale[c];
                }
            }
            break;
        case LayerKind::tile_concat: {
            const int c1 = nodes_[node.in[0]].out.c;
            if (need_dx) {
                GridTensor& dmap = ws.grad_[node.in[0]];
                const std::size_t n = dmap.size();
                for (std::size_t j = 0; j < n; ++j) dmap[j] += dy[j];
            }
            if (ws.need_[node.in[1]]) {
                GridTensor& dvec = ws.grad_[node.in[1]];
                for (int c = 0; c < dvec.channels(); ++c) {
                    double sum = 0.0;
                    for (double v : dy.channel(c1 + c)) sum += v;
                    dvec[static_cast<std::size_t>(c)] += sum;
                }
            }
            break;
        }
    }
}

void Graph::backward(Workspace& ws, const GridTensor& upstream, ParamGradients* grads, unsigned wanted_slots) const {
    if (ws.owner_ != this || !ws.has_forward_) throw StateError("backward called without a preceding forward pass");
    if (!(upstream.shape() == output_shape())) {
        throw ShapeError("upstream gradient shape " + to_string(upstream.shape()) + " does not match output " +
                         to_string(output_shape()));
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        ws.need_[i] = grads ? nodes_[i].param_upstream : (nodes_[i].slot_mask & wanted_slots) != 0;
        if (ws.need_[i]) ws.grad_[i].fill(0.0);
    }
    if (grads) {
        grads->resize(params_.size());
        for (std::size_t k = 0; k < params_.size(); ++k) (*grads)[k].assign(params_[k].size(), 0.0);
    }
    if (!ws.need_.back()) return;
    ws.grad_.back() = upstream;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (ws.need_[i]) back_node(ws, i, grads);
    }
}

void Graph::backward_weights(Workspace& ws, const GridTensor& upstream, ParamGradients& grads) const {
    backward(ws, upstream, &grads, 0);
}

void Graph::backward_weights(Workspace& ws, double upstream, ParamGradients& grads) const {
    if (output_shape().size() != 1) throw ShapeError("scalar upstream gradient on a graph with non-scalar output");
    backward_weights(ws, GridTensor(output_shape(), upstream), grads);
}

ParamGradients Graph::backward_weights(Workspace& ws, double upstream) const {
    ParamGradients g;
    backward_weights(ws, upstream, g);
    return g;
}

std::vector<GridTensor> Graph::backward_inputs(Workspace& ws, const GridTensor& upstream, unsigned wanted_slots) const {
    if (ws.owner_ == this && ws.has_forward_ && ws.mode_ != Mode::eval) {
        throw StateError("backward_inputs requires an eval-mode forward pass");
    }
    backward(ws, upstream, nullptr, wanted_slots);
    std::vector<GridTensor> out(slots_.size());
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        if (wanted_slots & (1u << k)) out[k] = ws.grad_[slots_[k]];
    }
    return out;
}

std::vector<GridTensor> Graph::backward_inputs(Workspace& ws, double upstream, unsigned wanted_slots) const {
    if (output_shape().size() != 1) throw ShapeError("scalar upstream gradient on a graph with non-scalar output");
    return backward_inputs(ws, GridTensor(output_shape(), upstream), wanted_slots);
}

}  // namespace graspinf
