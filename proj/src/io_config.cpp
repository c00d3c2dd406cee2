#include "resokit/io/config.hpp"

#include "resokit/error.hpp"

#include <cmath>
#include <fstream>
#include <istream>

namespace resokit::io {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

Config Config::parse(std::istream& in) {
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value'", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError("empty key", lineno);
        if (cfg.has(key))
            throw ParseError("duplicate key '" + key + "'", lineno);
        cfg.values_[key] = value;
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config '" + path.string() + "'");
    return parse(in);
}

std::optional<std::string> Config::string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        return std::nullopt;
    return it->second;
}

std::optional<double> Config::number(const std::string& key) const {
    const auto s = string(key);
    if (!s)
        return std::nullopt;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(*s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s->size() || !std::isfinite(v))
        throw ParseError("'" + key + "' is not a number: '" + *s + "'");
    return v;
}

double Config::number_or(const std::string& key, double fallback) const {
    return number(key).value_or(fallback);
}

double Config::require_number(const std::string& key) const {
    const auto v = number(key);
    if (!v)
        throw UsageError("missing required setting '" + key + "'");
    return *v;
}

std::string Config::string_or(const std::string& key, const std::string& fallback) const {
    return string(key).value_or(fallback);
}

bool Config::flag_or(const std::string& key, bool fallback) const {
    const auto s = string(key);
    if (!s)
        return fallback;
    if (*s == "true" || *s == "1" || *s == "yes" || *s == "on")
        return true;
    if (*s == "false" || *s == "0" || *s == "no" || *s == "off")
        return false;
    throw ParseError("'" + key + "' is not a boolean: '" + *s + "'");
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0)
        throw UsageError("expected key=value, got '" + text + "'");
    return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

} // namespace resokit::io
