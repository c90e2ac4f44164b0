#include "morphsim/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "morphsim/errors.hpp"

namespace morphsim {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double_token(std::string_view tok, double& out) {
    if (tok == "inf" || tok == "+inf") {
        out = std::numeric_limits<double>::infinity();
        return true;
    }
    if (tok == "-inf") {
        out = -std::numeric_limits<double>::infinity();
        return true;
    }
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return res.ec == std::errc() && res.ptr == tok.data() + tok.size() && std::isfinite(out);
}

}  // namespace

ConfigMap parse_config(std::string_view text) {
    ConfigMap cfg;
    int line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected `key = value`");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (!cfg.emplace(key, value).second) {
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key " + key);
        }
    }
    return cfg;
}

ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const ConfigMap& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg) out += k + " = " + v + "\n";
    return out;
}

std::uint64_t config_hash(const ConfigMap& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : format_config(cfg)) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_vec2(const Vec2& v) { return format_double(v.x()) + " " + format_double(v.y()); }

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    if (!parse_double_token(trim(value), out)) throw ConfigError(key + ": expected a number, got '" + value + "'");
    return out;
}

int parse_int(const std::string& key, const std::string& value) {
    const std::string_view tok = trim(value);
    int out = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string_view tok = trim(value);
    if (tok == "true" || tok == "1") return true;
    if (tok == "false" || tok == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

Vec2 parse_vec2(const std::string& key, const std::string& value) {
    std::string_view s = trim(value);
    const auto sp = s.find_first_of(" \t");
    double x = 0.0, y = 0.0;
    if (sp == std::string_view::npos || !parse_double_token(trim(s.substr(0, sp)), x) ||
        !parse_double_token(trim(s.substr(sp)), y)) {
        throw ConfigError(key + ": expected two numbers, got '" + value + "'");
    }
    return {x, y};
}

}  // namespace morphsim
