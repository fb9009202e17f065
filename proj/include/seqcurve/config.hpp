#ifndef SEQCURVE_CONFIG_HPP
#define SEQCURVE_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqcurve {

// Flat TOML-style key = value file: comments with '#', optional quotes on
// strings, one key per line, versioned via a required `schema = 1` entry.
class Config {
public:
    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        Config c = from_string(buf.str(), path);
        c.digest_ = fnv1a(buf.str());
        return c;
    }

    static Config from_string(const std::string& text, const std::string& name = "<string>") {
        Config c;
        c.digest_ = fnv1a(text);
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = strip(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                         ": expected key = value");
            std::string key = strip(line.substr(0, eq));
            std::string value = strip(line.substr(eq + 1));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
                value = value.substr(1, value.size() - 2);
            if (key.empty())
                throw std::runtime_error(name + ":" + std::to_string(lineno) + ": empty key");
            c.kv_[key] = value;
        }
        if (c.get_int("schema", -1) != 1)
            throw std::runtime_error(name + ": config must declare schema = 1");
        return c;
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback = "") const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) throw std::runtime_error("config: missing required key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : parse_double(key, it->second);
    }

    long long get_int(const std::string& key, long long fallback) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument(it->second);
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("config: key '" + key + "' is not an integer: " + it->second);
        }
    }

    // comma-separated list of reals
    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        const auto it = kv_.find(key);
        if (it == kv_.end()) return out;
        std::istringstream in(it->second);
        std::string tok;
        while (std::getline(in, tok, ','))
            out.push_back(parse_double(key, strip(tok)));
        return out;
    }

    std::uint64_t digest() const { return digest_; }

private:
    static std::string strip(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static double parse_double(const std::string& key, const std::string& value) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("config: key '" + key + "' is not a number: " + value);
        }
    }

    static std::uint64_t fnv1a(const std::string& s) {
        std::uint64_t h = 14695981039346656037ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

    std::map<std::string, std::string> kv_;
    std::uint64_t digest_ = 0;
};

} // namespace seqcurve

#endif
