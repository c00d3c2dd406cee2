#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace resokit::io {

/// Flat `key = value` configuration. '#' starts a comment; keys are unique.
class Config {
public:
    static Config parse(std::istream& in);
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::optional<std::string> string(const std::string& key) const;
    /// Throws ParseError when present but not a finite number.
    std::optional<double> number(const std::string& key) const;
    double number_or(const std::string& key, double fallback) const;
    /// Throws UsageError when absent.
    double require_number(const std::string& key) const;
    std::string string_or(const std::string& key, const std::string& fallback) const;
    bool flag_or(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Splits "key=value"; throws UsageError without '='.
std::pair<std::string, std::string> split_assignment(const std::string& text);

} // namespace resokit::io
