// SPDX-License-Identifier: Apache-2.0

#include "pear/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pear::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text) {
    KeyValues kv;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected 'key = value', got '" + t + "'");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
        }
        kv.values_[key] = value;
    }
    return kv;
}

KeyValues KeyValues::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const std::string& KeyValues::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw std::runtime_error("config: missing key '" + key + "'");
    }
    return it->second;
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValues::get_double(const std::string& key) const {
    try {
        std::size_t pos = 0;
        const double v = std::stod(get(key), &pos);
        if (pos != get(key).size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::logic_error&) {
        throw std::runtime_error("config: key '" + key + "' is not a number: '" + get(key) + "'");
    }
}

std::int64_t KeyValues::get_int(const std::string& key) const {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(get(key), &pos);
        if (pos != get(key).size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::logic_error&) {
        throw std::runtime_error("config: key '" + key + "' is not an integer: '" + get(key) + "'");
    }
}

std::uint64_t KeyValues::get_uint(const std::string& key) const {
    const std::int64_t v = get_int(key);
    if (v < 0) throw std::runtime_error("config: key '" + key + "' must be non-negative");
    return static_cast<std::uint64_t>(v);
}

std::vector<std::size_t> KeyValues::get_uint_list(const std::string& key) const {
    std::vector<std::size_t> out;
    std::istringstream is(get(key));
    std::string tok;
    while (std::getline(is, tok, ',')) {
        const std::string t = trim(tok);
        if (t.empty()) continue;
        try {
            out.push_back(static_cast<std::size_t>(std::stoull(t)));
        } catch (const std::logic_error&) {
            throw std::runtime_error("config: key '" + key + "' has non-integer entry '" + t + "'");
        }
    }
    if (out.empty()) throw std::runtime_error("config: key '" + key + "' is an empty list");
    return out;
}

std::string KeyValues::to_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
    return os.str();
}

}  // namespace pear::config
