#ifndef SOFTSEG_CONFIG_HPP
#define SOFTSEG_CONFIG_HPP

// Plain-text `key = value` configuration files with '#' comments. Unknown
// keys are rejected with their line number; command-line flags override
// file values by assigning after parse.

#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "softseg/io.hpp"

namespace softseg {

struct ConfigFile {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        const auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values.find(key);
        if (it == values.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw IoError("config: value of '" + key + "' is not a number: " + it->second);
        }
    }

    long get_int(const std::string& key, long fallback) const {
        const auto it = values.find(key);
        if (it == values.end()) return fallback;
        try {
            std::size_t pos = 0;
            const long v = std::stol(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw IoError("config: value of '" + key + "' is not an integer: " + it->second);
        }
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

inline ConfigFile parse_config(std::istream& in, const std::set<std::string>& known_keys) {
    ConfigFile cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw IoError("config line " + std::to_string(line_no) + ": empty key");
        if (known_keys.count(key) == 0)
            throw IoError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        cfg.values[key] = value;
    }
    return cfg;
}

inline ConfigFile parse_config_file(const std::string& path,
                                    const std::set<std::string>& known_keys) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return parse_config(in, known_keys);
}

}  // namespace softseg

#endif  // SOFTSEG_CONFIG_HPP
