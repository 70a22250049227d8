#include "graspinf/io.hpp"

#include <bit>
#include <charconv>
#include <fstream>

#include "graspinf/errors.hpp"

namespace graspinf::io {

void put_u32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

std::uint32_t get_u32(std::istream& in) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw FormatError("unexpected end of binary data");
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

std::uint8_t get_u8(std::istream& in) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw FormatError("unexpected end of binary data");
    return static_cast<std::uint8_t>(c);
}

void put_f32_array(std::ostream& out, std::span<const double> values) {
    std::string buf(values.size() * 4, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
        for (int b = 0; b < 4; ++b) buf[4 * i + b] = static_cast<char>((u >> (8 * b)) & 0xff);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void get_f32_array(std::istream& in, std::span<double> values) {
    std::string buf(values.size() * 4, '\0');
    if (!in.read(buf.data(), static_cast<std::streamsize>(buf.size()))) {
        throw FormatError("unexpected end of binary data");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[4 * i + b])) << (8 * b);
        values[i] = std::bit_cast<float>(u);
    }
}

void write_atomically(const std::filesystem::path& path, bool binary,
                      const std::function<void(std::ostream&)>& fill) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        try {
            fill(out);
        } catch (...) {
            out.close();
            std::filesystem::remove(tmp);
            throw;
        }
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw Error("write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

std::string read_line(std::istream& in, std::string_view what) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("unexpected end of file while reading " + std::string(what));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.emplace_back(line.substr(start, i - start));
    }
    return out;
}

double parse_double(std::string_view text, std::string_view what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw FormatError("invalid number '" + std::string(text) + "' for " + std::string(what));
    }
    return v;
}

long long parse_int(std::string_view text, std::string_view what) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw FormatError("invalid integer '" + std::string(text) + "' for " + std::string(what));
    }
    return v;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

}  // namespace graspinf::io
