#include "atdl/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "atdl/errors.hpp"

namespace atdl {

namespace {

std::string trim(const std::string &s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

} // namespace

std::vector<std::string> split_list(const std::string &text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

Config Config::parse_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path);
}

Config Config::parse_string(const std::string &text, const std::string &origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::stringstream ss(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ArgumentError(origin + ":" + std::to_string(line_no) +
                                    ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ArgumentError(origin + ":" + std::to_string(line_no) +
                                ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ArgumentError(origin + ":" + std::to_string(line_no) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (cfg.values_.count(full))
            throw ArgumentError(origin + ":" + std::to_string(line_no) + ": duplicate key " +
                                full);
        cfg.values_[full] = value;
    }
    return cfg;
}

bool Config::has(const std::string &key) const { return values_.count(key) > 0; }

std::vector<std::string> Config::keys_in(const std::string &section) const {
    std::vector<std::string> out;
    const std::string prefix = section + ".";
    for (const auto &[k, v] : values_)
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
}

std::string Config::get_string(const std::string &key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ArgumentError(origin_ + ": missing key " + key);
    return it->second;
}

std::string Config::get_string(const std::string &key, const std::string &fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string &key) const {
    const std::string v = get_string(key);
    try {
        std::size_t used = 0;
        const double parsed = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return parsed;
    } catch (const std::exception &) {
        throw ArgumentError(origin_ + ": key " + key + " is not a number: '" + v + "'");
    }
}

double Config::get_double(const std::string &key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string &key) const {
    const std::string v = get_string(key);
    try {
        std::size_t used = 0;
        const unsigned long long parsed = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return parsed;
    } catch (const std::exception &) {
        throw ArgumentError(origin_ + ": key " + key + " is not an integer: '" + v + "'");
    }
}

std::uint64_t Config::get_u64(const std::string &key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

bool Config::get_bool(const std::string &key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string v = get_string(key);
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ArgumentError(origin_ + ": key " + key + " is not a boolean: '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string &key) const {
    std::vector<double> out;
    for (const std::string &item : split_list(get_string(key))) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception &) {
            throw ArgumentError(origin_ + ": key " + key + " has a non-numeric item '" + item +
                                "'");
        }
    }
    if (out.empty()) throw ArgumentError(origin_ + ": key " + key + " lists no values");
    return out;
}

std::vector<std::size_t> Config::get_sizes(const std::string &key) const {
    std::vector<std::size_t> out;
    for (const std::string &item : split_list(get_string(key))) {
        try {
            out.push_back(std::stoull(item));
        } catch (const std::exception &) {
            throw ArgumentError(origin_ + ": key " + key + " has a non-integer item '" + item +
                                "'");
        }
    }
    if (out.empty()) throw ArgumentError(origin_ + ": key " + key + " lists no values");
    return out;
}

std::uint64_t Config::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const std::string &s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        h ^= 0x1e;
        h *= 0x100000001b3ull;
    };
    for (const auto &[k, v] : values_) {
        mix(k);
        mix(v);
    }
    return h;
}

} // namespace atdl
