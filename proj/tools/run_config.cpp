#include "run_config.hpp"

#include <charconv>
#include <fstream>

namespace graspinf::cli {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::declare(const std::string& key, const std::string& default_value, const std::string& help) {
    if (!entries_.count(key)) order_.push_back(key);
    entries_[key] = Entry{default_value, "default", help};
}

const RunConfig::Entry& RunConfig::entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw std::logic_error("undeclared setting '" + key + "'");
    return it->second;
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path.string() + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw UsageError(where + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        if (!entries_.count(key)) throw UsageError(where + ": unknown key '" + key + "'");
        entries_[key].value = trim(line.substr(eq + 1));
        entries_[key].source = "file " + where;
    }
}

void RunConfig::set_flag(const std::string& key, const std::string& value) {
    if (!entries_.count(key)) throw UsageError("unknown setting '" + key + "'");
    entries_[key].value = value;
    entries_[key].source = "flag";
}

const std::string& RunConfig::str(const std::string& key) const { return entry(key).value; }

double RunConfig::real(const std::string& key) const {
    const std::string& v = str(key);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw UsageError("setting '" + key + "': '" + v + "' is not a number");
    }
    return out;
}

long long RunConfig::integer(const std::string& key) const {
    const std::string& v = str(key);
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw UsageError("setting '" + key + "': '" + v + "' is not an integer");
    }
    return out;
}

bool RunConfig::boolean(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw UsageError("setting '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
    std::vector<std::string> out;
    const std::string& v = str(key);
    std::size_t start = 0;
    while (start <= v.size()) {
        const auto pos = v.find(',', start);
        const auto end = pos == std::string::npos ? v.size() : pos;
        if (auto item = trim(v.substr(start, end - start)); !item.empty()) out.push_back(item);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

const std::string& RunConfig::source(const std::string& key) const { return entry(key).source; }

std::vector<std::string> RunConfig::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& k : order_) {
        if (k.rfind(prefix, 0) == 0) out.push_back(k.substr(prefix.size()));
    }
    return out;
}

void RunConfig::echo(std::ostream& out) const {
    out << "# resolved config\n";
    for (const auto& k : order_) {
        const Entry& e = entries_.at(k);
        out << "#   " << k << '=' << e.value << "  (" << e.source << ")\n";
    }
}

}  // namespace graspinf::cli
