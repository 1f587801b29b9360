#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "semistab/cosmology.hpp"

namespace semistab::cli {

Reader::Reader(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
}

std::string Reader::where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
}

bool Reader::has(const std::string& key) const { return j_->contains(key); }

const json& Reader::at(const std::string& key) {
    if (!j_->contains(key)) throw ConfigError(where(key) + ": missing");
    seen_.insert(key);
    return (*j_)[key];
}

double Reader::num(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where(key) + ": not finite");
    return x;
}

double Reader::num(const std::string& key, double fallback) {
    return has(key) ? num(key) : fallback;
}

int Reader::integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    return v.get<int>();
}

std::string Reader::str(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
}

std::string Reader::str(const std::string& key, const std::string& fallback) {
    return has(key) ? str(key) : fallback;
}

std::vector<double> Reader::nums(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

Reader Reader::obj(const std::string& key) { return Reader(at(key), where(key)); }

const json& Reader::raw(const std::string& key) { return at(key); }

void Reader::done() const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
        if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
    }
}

json parse_config_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

Reader top_level(const json& cfg) {
    Reader r(cfg, "");
    const json& v = r.raw("schema_version");
    if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
        throw ConfigError("schema_version: expected " + std::to_string(kSchemaVersion));
    return r;
}

void Tolerances::set(const std::string& key, double value, const std::string& origin) {
    if (!v_.count(key)) throw ConfigError(origin + ": unknown tolerance '" + key + "'");
    if (!(value > 0.0) || !std::isfinite(value))
        throw ConfigError(origin + ": tolerance '" + key + "' must be positive");
    v_[key] = value;
}

void Tolerances::apply_block(Reader r) {
    std::vector<std::string> keys;
    for (const auto& [k, v] : v_) keys.push_back(k);
    for (const auto& k : keys) {
        if (r.has(k)) set(k, r.num(k), r.where(k));
    }
    r.done();
}

void Tolerances::apply_overrides(const std::vector<std::string>& kv) {
    for (const auto& s : kv) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--tol-override '" + s + "': expected KEY=VAL");
        const std::string key = s.substr(0, eq), val = s.substr(eq + 1);
        double x = 0.0;
        std::size_t used = 0;
        try {
            x = std::stod(val, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != val.size())
            throw ConfigError("--tol-override '" + s + "': value is not a number");
        set(key, x, "--tol-override");
    }
}

json Tolerances::to_json() const {
    json j = json::object();
    for (const auto& [k, v] : v_) j[k] = v;
    return j;
}

PrototypeCoefficients Model::coeffs() const {
    if (kind == "S") return s_mode_coefficients(p, alpha1_S, b2);
    if (kind == "TT") return tt_mode_coefficients(p, b2);
    return k;
}

std::vector<std::string> Model::sweepable(const std::string& kind) {
    if (kind == "S") return {"m", "xi", "G", "mu", "alpha1_S", "b2"};
    if (kind == "TT") return {"m", "xi", "G", "mu", "b2"};
    return {"m", "a1", "a2", "b0", "b1", "b2"};
}

Model Model::with(const std::string& param, double v) const {
    Model o = *this;
    if (param == "m") o.p.m = v;
    else if (param == "xi") o.p.xi = v;
    else if (param == "G") o.p.G = v;
    else if (param == "mu") o.p.mu = v;
    else if (param == "alpha1_S") o.alpha1_S = v;
    else if (param == "a1") o.k.a1 = v;
    else if (param == "a2") o.k.a2 = v;
    else if (param == "b0") o.k.b0 = v;
    else if (param == "b1") o.k.b1 = v;
    else if (param == "b2") {
        if (kind == "coeffs") o.k.b2 = v;
        else o.b2 = v;
    } else {
        throw ConfigError("sweep parameter '" + param + "' is not defined");
    }
    return o;
}

json coeffs_to_json(const PrototypeCoefficients& k) {
    return json{{"a1", k.a1}, {"a2", k.a2}, {"b0", k.b0}, {"b1", k.b1}, {"b2", k.b2}};
}

json Model::to_json() const {
    json j{{"kind", kind}, {"m", p.m}};
    if (kind == "coeffs") {
        j["coeffs"] = coeffs_to_json(k);
        return j;
    }
    j["xi"] = p.xi;
    j["G"] = p.G;
    j["mu"] = p.mu;
    if (kind == "S") j["alpha1_S"] = alpha1_S;
    j["b2"] = b2;
    j["coeffs"] = coeffs_to_json(coeffs());
    return j;
}

Model parse_model(Reader r) {
    Model md;
    md.kind = r.str("kind", "coeffs");
    if (md.kind != "coeffs" && md.kind != "S" && md.kind != "TT")
        throw ConfigError(r.where("kind") + ": expected coeffs, S or TT");
    md.p.m = r.num("m", 1.0);
    if (md.kind == "coeffs") {
        md.k.a1 = r.num("a1", 0.0);
        md.k.a2 = r.num("a2", 0.0);
        md.k.b0 = r.num("b0", 0.0);
        md.k.b1 = r.num("b1", 0.0);
        md.k.b2 = r.num("b2", 0.0);
    } else {
        md.p.xi = r.num("xi", 1.0);
        md.p.G = r.num("G", 1.0);
        md.p.mu = r.num("mu", 1.0);
        md.b2 = r.num("b2", 0.0);
        if (md.kind == "S") md.alpha1_S = r.num("alpha1_S", fixed_linear_constants().alpha1_S);
    }
    r.done();
    try {
        md.p.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    return md;
}

std::optional<Sweep> parse_sweep(Reader r, const Model& model) {
    Sweep s;
    s.parameter = r.str("parameter");
    s.values = r.nums("values");
    r.done();
    const auto allowed = Model::sweepable(model.kind);
    if (std::find(allowed.begin(), allowed.end(), s.parameter) == allowed.end())
        throw ConfigError("sweep.parameter: '" + s.parameter + "' cannot be swept for model kind " +
                          model.kind);
    if (s.values.empty()) return std::nullopt;
    for (double v : s.values) {
        try {
            model.with(s.parameter, v).p.validate();
        } catch (const DomainError& e) {
            throw ConfigError(std::string("sweep.values: ") + e.what());
        }
    }
    return s;
}

SearchSpec parse_search(Reader r) {
    SearchSpec s;
    for (const char* k : {"real_lo", "real_hi", "re_lo", "re_hi", "im_lo", "im_hi"}) {
        if (r.has(k)) s.overrides[k] = r.num(k);
    }
    r.done();
    return s;
}

SearchBox SearchSpec::box(double m) const {
    SearchBox b = SearchBox::defaults(m);
    for (const auto& [k, v] : overrides) {
        if (k == "real_lo") b.real_lo = v;
        else if (k == "real_hi") b.real_hi = v;
        else if (k == "re_lo") b.re_lo = v;
        else if (k == "re_hi") b.re_hi = v;
        else if (k == "im_lo") b.im_lo = v;
        else if (k == "im_hi") b.im_hi = v;
    }
    if (!(b.real_lo < b.real_hi) || !(b.re_lo < b.re_hi) || !(b.im_lo > 0.0 && b.im_lo < b.im_hi))
        throw ConfigError("search: empty box");
    return b;
}

json zero_to_json(const Zero& z) {
    const char* cls = z.cls == ZeroClass::real_negative ? "real_negative"
                      : z.cls == ZeroClass::real_nonneg ? "real_nonneg"
                                                         : "complex_pair_member";
    return json{{"re", z.gamma.real()}, {"im", z.gamma.imag()}, {"class", cls},
                {"residual", z.residual}};
}

}  // namespace semistab::cli
