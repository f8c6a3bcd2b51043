#ifndef ATDL_CONFIG_HPP
#define ATDL_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace atdl {

/// Flat key-value configuration with [section] headers. Lines are
/// `key = value`; `#` starts a comment; keys are addressed as
/// "section.key". Values never depend on the environment, so a config file
/// plus seeds pins a run completely.
class Config {
public:
    static Config parse_file(const std::string &path);
    static Config parse_string(const std::string &text, const std::string &origin = "<string>");

    bool has(const std::string &key) const;
    std::vector<std::string> keys_in(const std::string &section) const;

    std::string get_string(const std::string &key) const;
    std::string get_string(const std::string &key, const std::string &fallback) const;
    double get_double(const std::string &key) const;
    double get_double(const std::string &key, double fallback) const;
    std::uint64_t get_u64(const std::string &key) const;
    std::uint64_t get_u64(const std::string &key, std::uint64_t fallback) const;
    bool get_bool(const std::string &key, bool fallback) const;

    /// Comma-separated numeric lists.
    std::vector<double> get_doubles(const std::string &key) const;
    std::vector<std::size_t> get_sizes(const std::string &key) const;

    /// FNV-1a hash of the parsed key-value pairs (formatting-insensitive).
    std::uint64_t hash() const;

private:
    std::map<std::string, std::string> values_;
    std::string origin_;
};

std::vector<std::string> split_list(const std::string &text, char sep = ',');

} // namespace atdl

#endif
