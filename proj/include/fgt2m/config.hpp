#pragma once

#include "fgt2m/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace fgt2m {

// Flat dotted-key configuration with a fixed known-key registry. Unknown
// keys are rejected both in files and CLI overrides. Every key has a
// documented default (see `known_keys`).
class RunConfig {
public:
    using Value = std::variant<bool, std::int64_t, double, std::string>;

    struct KeySpec {
        std::string key;
        Value default_value;
        std::string doc;
    };

    RunConfig(); // all defaults

    static const std::vector<KeySpec>& known_keys();

    void load_file(const std::filesystem::path& path); // JSON object with flat keys
    void apply_override(const std::string& assignment); // "key=value"
    // FGT2M_SEED (when set) overrides data.seed, train.seed and eval.seed.
    void apply_env(const char* env_value);

    bool get_bool(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    double get_double(const std::string& key) const; // accepts int-typed values
    std::string get_string(const std::string& key) const;

    void set(const std::string& key, Value v);

    std::string dump() const; // JSON, sorted keys

private:
    const Value& at(const std::string& key) const;
    std::map<std::string, Value> values_;
};

} // namespace fgt2m
