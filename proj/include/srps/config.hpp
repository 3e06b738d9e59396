#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "srps/scenario.hpp"

namespace srps::app {

// Bad command-line input: unknown key, malformed value, empty list.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Config file problem with a 1-based position.
class ConfigParseError : public std::runtime_error {
public:
    ConfigParseError(std::string source, std::size_t line, std::size_t column, const std::string& msg);
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

enum class ValueKind { Integer, Real, Boolean, Choice, List };

struct KeyInfo {
    std::string name;
    ValueKind kind;
    std::string doc;
};

// Every accepted scenario key, in documentation order.
const std::vector<KeyInfo>& config_keys();
const KeyInfo* find_key(std::string_view name);
bool is_numeric(const KeyInfo& k);

// Applies one key; throws UsageError naming the key on an unknown key or bad value.
void apply_setting(sim::ScenarioConfig& c, std::string_view key, std::string_view value);
// Current value rendered as it would appear in a config file.
std::string get_setting(const sim::ScenarioConfig& c, std::string_view key);

// Flat `key = value` lines, `#` comments. Unknown or repeated keys are errors.
sim::ScenarioConfig parse_config(std::string_view text, sim::ScenarioConfig base = {},
                                 const std::string& source = "config");
sim::ScenarioConfig load_config(const std::string& path, sim::ScenarioConfig base = {});

// Splits `key=value`; throws UsageError when there is no '='.
std::pair<std::string, std::string> split_assignment(std::string_view kv);

// "0..4" (integer range, inclusive) or "a,b,c". Empty input is a usage error.
std::vector<std::string> expand_values(std::string_view spec);

}  // namespace srps::app
