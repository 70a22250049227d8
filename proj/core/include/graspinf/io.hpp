#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace graspinf::io {

// Little-endian scalar encoding, independent of host byte order.
void put_u32(std::ostream& out, std::uint32_t v);
void put_f32(std::ostream& out, float v);
void put_u8(std::ostream& out, std::uint8_t v);
std::uint32_t get_u32(std::istream& in);
float get_f32(std::istream& in);
std::uint8_t get_u8(std::istream& in);

void put_f32_array(std::ostream& out, std::span<const double> values);
void get_f32_array(std::istream& in, std::span<double> values);

/// Writes through `fill` into `<path>.tmp` and renames it over `path` only after the
/// stream was flushed without error; on failure the temporary is removed and the
/// previous file, if any, is left untouched.
void write_atomically(const std::filesystem::path& path, bool binary,
                      const std::function<void(std::ostream&)>& fill);

/// Reads one '\n'-terminated line; throws FormatError at end of file.
std::string read_line(std::istream& in, std::string_view what);

/// Splits on runs of ASCII whitespace.
std::vector<std::string> split_ws(std::string_view line);

/// Strict numeric parsing: the whole token must be consumed.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace graspinf::io
