#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace npbandit {

using KeyValues = std::map<std::string, std::string>;

/// Flat `key = value` text, one pair per line. `#` starts a comment.
/// Duplicate keys and lines without `=` are ConfigErrors.
KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::filesystem::path& path);

/// Throws ConfigError naming the first key not in `allowed`.
void reject_unknown_keys(const KeyValues& config, const std::vector<std::string>& allowed);

double get_double(const KeyValues& config, const std::string& key);
double get_double(const KeyValues& config, const std::string& key, double fallback);
std::int64_t get_int(const KeyValues& config, const std::string& key);
std::int64_t get_int(const KeyValues& config, const std::string& key, std::int64_t fallback);
std::string get_string(const KeyValues& config, const std::string& key);
std::string get_string(const KeyValues& config, const std::string& key, const std::string& fallback);

/// Entries whose key starts with `prefix`, with the prefix stripped.
KeyValues with_prefix(const KeyValues& config, const std::string& prefix);

/// Comma separated list of integers; `a..b` expands to the inclusive range.
std::vector<std::int64_t> parse_int_list(const std::string& text);

/// The config rendered as sorted `key=value` lines.
std::string canonical_text(const KeyValues& config);
/// FNV-1a 64-bit hash of canonical_text, as 16 hex digits.
std::string config_hash(const KeyValues& config);

}  // namespace npbandit
