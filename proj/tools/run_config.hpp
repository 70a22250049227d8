#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace graspinf::cli {

/// Bad command-line or config-file input. Maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat settings merged from defaults <- config file <- command-line flags, with the
/// source of every value kept for the resolved-config echo.
class RunConfig {
public:
    void declare(const std::string& key, const std::string& default_value, const std::string& help);
    [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) != 0; }

    /// `key=value` lines; blank lines and '#' comments are ignored. Unknown keys are rejected.
    void load_file(const std::filesystem::path& path);
    void set_flag(const std::string& key, const std::string& value);

    [[nodiscard]] const std::string& str(const std::string& key) const;
    [[nodiscard]] double real(const std::string& key) const;
    [[nodiscard]] long long integer(const std::string& key) const;
    [[nodiscard]] bool boolean(const std::string& key) const;
    [[nodiscard]] std::vector<std::string> list(const std::string& key) const;
    [[nodiscard]] const std::string& source(const std::string& key) const;
    [[nodiscard]] const std::string& help(const std::string& key) const { return entry(key).help; }

    /// Keys sharing `prefix`, with the prefix stripped.
    [[nodiscard]] std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    void echo(std::ostream& out) const;

private:
    struct Entry {
        std::string value;
        std::string source;
        std::string help;
    };
    const Entry& entry(const std::string& key) const;

    std::map<std::string, Entry> entries_;
    std::vector<std::string> order_;
};

}  // namespace graspinf::cli
