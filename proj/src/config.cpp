#include "npbandit/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "npbandit/errors.hpp"

namespace npbandit {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

const std::string& require(const KeyValues& config, const std::string& key) {
    const auto it = config.find(key);
    if (it == config.end()) throw ConfigError(fmt::format("missing required key '{}'", key));
    return it->second;
}

double to_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double value = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("key '{}': '{}' is not a number", key, text));
    }
}

std::int64_t to_int(const std::string& key, const std::string& text) {
    std::int64_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(fmt::format("key '{}': '{}' is not an integer", key, text));
    }
    return value;
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
    KeyValues out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", line_no));
        if (!out.emplace(key, value).second) {
            throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
        }
    }
    return out;
}

KeyValues load_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
    return parse_key_values(in);
}

void reject_unknown_keys(const KeyValues& config, const std::vector<std::string>& allowed) {
    for (const auto& [key, value] : config) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(fmt::format("unknown config key '{}'", key));
        }
    }
}

double get_double(const KeyValues& config, const std::string& key) {
    return to_double(key, require(config, key));
}

double get_double(const KeyValues& config, const std::string& key, double fallback) {
    const auto it = config.find(key);
    return it == config.end() ? fallback : to_double(key, it->second);
}

std::int64_t get_int(const KeyValues& config, const std::string& key) {
    return to_int(key, require(config, key));
}

std::int64_t get_int(const KeyValues& config, const std::string& key, std::int64_t fallback) {
    const auto it = config.find(key);
    return it == config.end() ? fallback : to_int(key, it->second);
}

std::string get_string(const KeyValues& config, const std::string& key) { return require(config, key); }

std::string get_string(const KeyValues& config, const std::string& key, const std::string& fallback) {
    const auto it = config.find(key);
    return it == config.end() ? fallback : it->second;
}

KeyValues with_prefix(const KeyValues& config, const std::string& prefix) {
    KeyValues out;
    for (const auto& [key, value] : config) {
        if (key.size() > prefix.size() && key.compare(0, prefix.size(), prefix) == 0) {
            out.emplace(key.substr(prefix.size()), value);
        }
    }
    return out;
}

std::vector<std::int64_t> parse_int_list(const std::string& text) {
    std::vector<std::int64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        if (const auto dots = item.find(".."); dots != std::string::npos) {
            const auto lo = to_int("range", trim(item.substr(0, dots)));
            const auto hi = to_int("range", trim(item.substr(dots + 2)));
            if (hi < lo) throw ConfigError(fmt::format("empty range '{}'", item));
            for (auto v = lo; v <= hi; ++v) out.push_back(v);
        } else {
            out.push_back(to_int("list", item));
        }
    }
    return out;
}

std::string canonical_text(const KeyValues& config) {
    std::string out;
    for (const auto& [key, value] : config) out += fmt::format("{}={}\n", key, value);
    return out;
}

std::string config_hash(const KeyValues& config) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char c : canonical_text(config)) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", hash);
}

}  // namespace npbandit
