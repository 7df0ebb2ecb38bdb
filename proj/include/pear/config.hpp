// SPDX-License-Identifier: Apache-2.0
//
// Flat key-value config text: one `key = value` per line, `#` comments,
// blank lines ignored. Shared by the synth-data config, the train config,
// and the checkpoint's embedded config block.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pear::config {

class KeyValues {
public:
    static KeyValues parse(const std::string& text);
    static KeyValues load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key) const;
    // Comma-separated unsigned list.
    std::vector<std::size_t> get_uint_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::map<std::string, std::string>& entries() const { return values_; }
    std::string to_text() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace pear::config
