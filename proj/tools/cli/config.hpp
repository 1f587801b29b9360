#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "semistab/mode_algebra.hpp"

namespace semistab::cli {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitValidation = 4;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Strict view of a JSON object: every key must be consumed before done().
class Reader {
public:
    Reader(const json& j, std::string path);

    bool has(const std::string& key) const;
    double num(const std::string& key);
    double num(const std::string& key, double fallback);
    int integer(const std::string& key, int fallback);
    std::string str(const std::string& key);
    std::string str(const std::string& key, const std::string& fallback);
    std::vector<double> nums(const std::string& key);
    Reader obj(const std::string& key);
    const json& raw(const std::string& key);
    std::string where(const std::string& key) const;
    void done() const;

private:
    const json& at(const std::string& key);

    const json* j_;
    std::string path_;
    std::set<std::string> seen_;
};

json parse_config_text(const std::string& text);
json load_config(const std::string& path);
// Checks schema_version and returns a reader over the remaining keys.
Reader top_level(const json& cfg);

// Named positive tolerances; overrides from the config block and from KEY=VAL strings.
class Tolerances {
public:
    explicit Tolerances(std::map<std::string, double> defaults) : v_(std::move(defaults)) {}

    void apply_block(Reader r);
    void apply_overrides(const std::vector<std::string>& kv);
    void set(const std::string& key, double value, const std::string& origin);
    double operator[](const std::string& key) const { return v_.at(key); }
    const std::map<std::string, double>& values() const { return v_; }
    json to_json() const;

private:
    std::map<std::string, double> v_;
};

// A characteristic-function model: raw coefficients or a physical S / TT map.
struct Model {
    std::string kind = "coeffs";
    PrototypeCoefficients k;
    PhysicalParams p;
    double alpha1_S = 0.0;
    double b2 = 0.0;

    double m() const { return p.m; }
    PrototypeCoefficients coeffs() const;
    Model with(const std::string& param, double value) const;
    json to_json() const;
    static std::vector<std::string> sweepable(const std::string& kind);
};

Model parse_model(Reader r);

struct Sweep {
    std::string parameter;
    std::vector<double> values;
};

std::optional<Sweep> parse_sweep(Reader r, const Model& model);

// Overrides of the default search box, applied per mass.
struct SearchSpec {
    std::map<std::string, double> overrides;
    SearchBox box(double m) const;
};

SearchSpec parse_search(Reader r);

json zero_to_json(const Zero& z);
json coeffs_to_json(const PrototypeCoefficients& k);

}  // namespace semistab::cli
