#include "graspinf/dataset.hpp"

#include <fstream>
#include <sstream>

#include "graspinf/errors.hpp"
#include "graspinf/io.hpp"
#include "graspinf/parallel.hpp"
#include "graspinf/rng.hpp"

namespace graspinf {

namespace {

constexpr std::string_view kMagic = "graspinf-dataset";
constexpr int kVersion = 1;
constexpr std::uint64_t kTrialStream = 0x7472696a;  // "trij"

}  // namespace

std::size_t Dataset::positives() const noexcept {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.label == 1 ? 1 : 0;
    return n;
}

double Dataset::positive_rate() const noexcept {
    return samples.empty() ? 0.0 : static_cast<double>(positives()) / static_cast<double>(samples.size());
}

std::vector<std::size_t> Dataset::positive_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].label == 1) out.push_back(i);
    }
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.seed = seed;
    out.family_pool = family_pool;
    out.world = world;
    out.samples.reserve(indices.size());
    for (std::size_t i : indices) out.samples.push_back(samples.at(i));
    return out;
}

Dataset Dataset::positives_only() const {
    const auto idx = positive_indices();
    return subset(idx);
}

GraspConfig explore(const GraspConfig& init, std::mt19937_64& rng, const world::WorldConfig& cfg) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    GraspConfig g = init;
    if (unit(rng) >= cfg.explore_keep) {
        g[theta::gx] += cfg.explore_translation * sym(rng);
        g[theta::gy] += cfg.explore_translation * sym(rng);
        g[theta::psi] += cfg.explore_angle * sym(rng);
        g[theta::opening] += cfg.explore_opening * sym(rng);
    }
    return project(g, world::world_bounds());
}

Dataset collect_dataset(std::size_t n, std::uint64_t seed, std::span<const world::Family> families,
                        const world::WorldConfig& cfg, unsigned workers) {
    if (n == 0) throw std::invalid_argument("collect_dataset: n must be at least 1");
    Dataset ds;
    ds.seed = seed;
    ds.world = cfg;
    for (const auto& f : families) ds.family_pool.push_back(f.id);
    ds.samples.resize(n);
    parallel_for(n, workers, [&](std::size_t i) {
        std::mt19937_64 rng(derive_seed(seed, kTrialStream, i));
        world::Scene scene = world::generate_scene(rng, families, cfg, static_cast<std::uint32_t>(i));
        const auto inits = world::heuristic_inits(scene.obs, rng, cfg);
        const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, inits.size() - 1)(rng);
        // Stored at float32 precision, so the label is computed on exactly what is saved.
        const GraspConfig g = world::quantize(explore(inits[pick], rng, cfg));
        GraspSample& s = ds.samples[i];
        s.label = world::oracle_execute(scene.shape, g, cfg).success ? 1 : 0;
        s.shape = scene.shape;
        s.obs = std::move(scene.obs);
        s.theta = g;
    });
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    if (ds.samples.empty()) throw std::invalid_argument("save_dataset: empty dataset");
    const Shape3 shape = ds.samples.front().obs.grid.shape();
    const std::size_t dim = ds.samples.front().theta.size();
    for (const auto& s : ds.samples) {
        if (!(s.obs.grid.shape() == shape) || s.theta.size() != dim) {
            throw FormatError("save_dataset: samples have inconsistent shapes");
        }
    }
    io::write_atomically(path, true, [&](std::ostream& out) {
        out << kMagic << ' ' << kVersion << '\n';
        out << "grid " << shape.c << ' ' << shape.h << ' ' << shape.w << '\n';
        out << "dim " << dim << '\n';
        out << "count " << ds.samples.size() << '\n';
        out << "seed " << ds.seed << '\n';
        out << "families";
        for (auto id : ds.family_pool) out << ' ' << id;
        out << '\n';
        for (const auto& [key, value] : world::world_params(ds.world)) {
            out << "world " << key << ' ' << io::format_double(value) << '\n';
        }
        out << "records\n";
        for (const auto& s : ds.samples) {
            io::put_f32(out, static_cast<float>(s.shape.cx));
            io::put_f32(out, static_cast<float>(s.shape.cy));
            io::put_f32(out, static_cast<float>(s.shape.phi));
            io::put_f32(out, static_cast<float>(s.shape.a));
            io::put_f32(out, static_cast<float>(s.shape.b));
            io::put_f32(out, static_cast<float>(static_cast<int>(s.shape.kind)));
            io::put_u32(out, s.shape.shape_id);
            io::put_u32(out, s.shape.family_id);
            io::put_f32_array(out, s.obs.grid.data());
            io::put_f32_array(out, s.theta.span());
            io::put_u8(out, static_cast<std::uint8_t>(s.label));
        }
    });
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open dataset '" + path.string() + "'");
    auto expect = [&](const std::vector<std::string>& tok, std::string_view key, std::size_t count) {
        if (tok.empty() || tok[0] != key || (count != 0 && tok.size() != count)) {
            throw FormatError("dataset '" + path.string() + "': expected '" + std::string(key) + "' line");
        }
    };
    auto tok = io::split_ws(io::read_line(in, "dataset header"));
    if (tok.size() != 2 || tok[0] != kMagic) throw FormatError("'" + path.string() + "' is not a dataset file");
    if (io::parse_int(tok[1], "dataset version") != kVersion) {
        throw FormatError("dataset '" + path.string() + "': unsupported version " + tok[1]);
    }
    tok = io::split_ws(io::read_line(in, "grid"));
    expect(tok, "grid", 4);
    const Shape3 shape{static_cast<int>(io::parse_int(tok[1], "grid")), static_cast<int>(io::parse_int(tok[2], "grid")),
                       static_cast<int>(io::parse_int(tok[3], "grid"))};
    tok = io::split_ws(io::read_line(in, "dim"));
    expect(tok, "dim", 2);
    const auto dim = static_cast<std::size_t>(io::parse_int(tok[1], "dim"));
    tok = io::split_ws(io::read_line(in, "count"));
    expect(tok, "count", 2);
    const auto count = static_cast<std::size_t>(io::parse_int(tok[1], "count"));
    tok = io::split_ws(io::read_line(in, "seed"));
    expect(tok, "seed", 2);

    Dataset ds;
    ds.seed = std::stoull(tok[1]);
    tok = io::split_ws(io::read_line(in, "families"));
    expect(tok, "families", 0);
    for (std::size_t i = 1; i < tok.size(); ++i) {
        ds.family_pool.push_back(static_cast<std::uint32_t>(io::parse_int(tok[i], "family id")));
    }
    for (;;) {
        tok = io::split_ws(io::read_line(in, "dataset header"));
        if (tok.size() == 1 && tok[0] == "records") break;
        expect(tok, "world", 3);
        if (!world::set_world_param(ds.world, tok[1], io::parse_double(tok[2], tok[1]))) {
            throw FormatError("dataset '" + path.string() + "': unknown world parameter '" + tok[1] + "'");
        }
    }
    if (shape.size() == 0 || dim == 0) throw FormatError("dataset '" + path.string() + "': empty record shape");

    ds.samples.resize(count);
    std::vector<double> theta(dim);
    for (std::size_t i = 0; i < count; ++i) {
        GraspSample& s = ds.samples[i];
        s.shape.cx = io::get_f32(in);
        s.shape.cy = io::get_f32(in);
        s.shape.phi = io::get_f32(in);
        s.shape.a = io::get_f32(in);
        s.shape.b = io::get_f32(in);
        const float kind = io::get_f32(in);
        if (!(kind == 0.0f || kind == 1.0f || kind == 2.0f)) {
            throw FormatError("dataset '" + path.string() + "': record " + std::to_string(i) + " has invalid shape kind");
        }
        s.shape.kind = static_cast<world::ShapeKind>(static_cast<int>(kind));
        s.shape.shape_id = io::get_u32(in);
        s.shape.family_id = io::get_u32(in);
        s.obs.grid = GridTensor(shape);
        io::get_f32_array(in, s.obs.grid.data());
        io::get_f32_array(in, theta);
        s.theta = GraspConfig(theta);
        const std::uint8_t label = io::get_u8(in);
        if (label > 1) throw FormatError("dataset '" + path.string() + "': record " + std::to_string(i) + " has label " +
                                         std::to_string(label));
        s.label = label;
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError("dataset '" + path.string() + "': trailing data after " + std::to_string(count) + " records");
    }
    return ds;
}

}  // namespace graspinf
