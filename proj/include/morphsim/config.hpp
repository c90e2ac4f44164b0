#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "morphsim/math.hpp"

namespace morphsim {

/// Flat key/value configuration. Text form is one `key = value` per line;
/// `#` starts a comment. Vectors are written as two space-separated numbers.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::string_view text);
ConfigMap load_config_file(const std::string& path);
/// Canonical text: sorted keys, one per line.
std::string format_config(const ConfigMap& cfg);

/// 64-bit FNV-1a over the canonical text.
std::uint64_t config_hash(const ConfigMap& cfg);
std::string hash_hex(std::uint64_t h);

// Value codecs. Doubles use the shortest round-trip representation.
std::string format_double(double v);
std::string format_vec2(const Vec2& v);
double parse_double(const std::string& key, const std::string& value);
int parse_int(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);
Vec2 parse_vec2(const std::string& key, const std::string& value);

}  // namespace morphsim
