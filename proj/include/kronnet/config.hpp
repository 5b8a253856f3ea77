// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

namespace kronnet::cfg {

inline constexpr const char* kVersion = "1.0.0";

/// Raised for malformed configs, unknown keys, bad values; the CLI maps
/// it to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key=value text with [section] headers. Grammar:
///   file     := line*
///   line     := section | pair | comment | blank
///   section  := '[' name ']'
///   pair     := key '=' value      (value runs to end of line, trimmed)
///   comment  := '#' ...
/// Keys are addressed as "section.key". Insertion order is preserved so a
/// printed config re-parses to the identical object.
class Config {
public:
    void set(const std::string& dotted_key, const std::string& value);
    bool has(const std::string& dotted_key) const;

    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_num(const std::string& key) const;
    long get_int(const std::string& key) const;
    bool get_flag(const std::string& key) const;
    std::vector<std::uint64_t> get_seed_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;
    std::vector<std::string> get_str_list(const std::string& key) const;

    std::string print() const;
    /// FNV-1a of the printed form; stamped into run CSVs.
    std::uint64_t hash() const;

    static Config parse(const std::string& text);
    static Config parse_file(const std::string& path);

    const std::vector<std::pair<std::string, std::string>>& entries() const { return order_; }

private:
    std::map<std::string, std::string> values_;
    std::vector<std::pair<std::string, std::string>> order_;
};

/// Canonical config for a named experiment, every field defaulted to the
/// corresponding published setting (artifact choices are marked in the
/// manifest comments).
Config default_experiment_config(const std::string& name);

std::vector<std::string> known_experiments();

} // namespace kronnet::cfg
