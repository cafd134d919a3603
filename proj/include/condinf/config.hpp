#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "condinf/errors.hpp"
#include "condinf/gci.hpp"
#include "condinf/mc.hpp"

// Line-oriented config format: "section.key = value", '#' starts a comment,
// blank lines ignored. A document either describes one scenario (optionally
// swept over a parameter) or a GCI sweep. The digest hashes the resolved
// document, so key order, comments, and whitespace never change it.

namespace condinf {

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
    int column = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline bool valid_key(const std::string& k) {
    bool dot = false;
    if (k.empty() || k.front() == '.' || k.back() == '.') return false;
    for (char c : k) {
        if (c == '.') {
            if (dot) return false;  // exactly one section separator
            dot = true;
        } else if (!(std::islower(static_cast<unsigned char>(c)) ||
                     std::isdigit(static_cast<unsigned char>(c)) || c == '_')) {
            return false;
        }
    }
    return dot;
}

inline std::vector<ConfigEntry> tokenize(const std::string& text) {
    std::vector<ConfigEntry> entries;
    std::map<std::string, int> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos
                                                                     : eol - pos);
        ++line_no;
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;

        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key = value", line_no, 1);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!valid_key(key))
            throw ParseError("bad key '" + key + "'", line_no, 1);
        if (value.empty())
            throw ParseError("empty value for '" + key + "'", line_no,
                             static_cast<int>(eq) + 2);
        auto it = seen.find(key);
        if (it != seen.end())
            throw ParseError("duplicate key '" + key + "' (first on line " +
                                 std::to_string(it->second) + ")",
                             line_no, 1);
        seen[key] = line_no;
        entries.push_back({key, value, line_no, 1});
    }
    return entries;
}

inline double parse_double(const ConfigEntry& e) {
    const char* s = e.value.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0' || !std::isfinite(v))
        throw ValidationError(e.key, "expected a finite number, got '" + e.value + "'");
    return v;
}

inline std::int64_t parse_int(const ConfigEntry& e) {
    const double v = parse_double(e);
    if (v != std::floor(v) || std::abs(v) > 9.0e15)
        throw ValidationError(e.key, "expected an integer, got '" + e.value + "'");
    return static_cast<std::int64_t>(v);
}

inline std::uint64_t parse_uint(const ConfigEntry& e) {
    const std::int64_t v = parse_int(e);
    if (v < 0) throw ValidationError(e.key, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

inline bool parse_bool(const ConfigEntry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    throw ValidationError(e.key, "expected true or false, got '" + e.value + "'");
}

inline std::vector<double> parse_list(const ConfigEntry& e) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= e.value.size()) {
        std::size_t comma = e.value.find(',', pos);
        if (comma == std::string::npos) comma = e.value.size();
        const std::string piece = trim(e.value.substr(pos, comma - pos));
        if (piece.empty()) throw ValidationError(e.key, "empty list entry");
        ConfigEntry sub{e.key, piece, e.line, e.column};
        out.push_back(parse_double(sub));
        pos = comma + 1;
    }
    if (out.empty()) throw ValidationError(e.key, "expected a list of numbers");
    return out;
}

// shortest representation that parses back to the same double
inline std::string render_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

// integers print as integers so sweep labels and digests stay tidy
inline std::string render_number(double v) {
    if (v == std::floor(v) && std::abs(v) < 9.0e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    return render_double(v);
}

}  // namespace detail

// A parsed document: either one or more scenarios (sweep expansion applied)
// or a GCI sweep.
struct ConfigDocument {
    bool is_gci = false;
    std::vector<ScenarioConfig> scenarios;
    GciSweepConfig gci;
    std::string sweep_param;           // empty when no sweep
    std::vector<double> sweep_values;  // empty when no sweep
};

namespace detail {

inline void apply_sweep_value(ScenarioConfig& sc, const std::string& param, double v) {
    if (param == "dgp.rho") {
        sc.dgp.rho = v;
    } else if (param == "mc.n") {
        if (v != std::floor(v) || v < 1.0)
            throw ValidationError("sweep.values", "mc.n sweep needs positive integers");
        sc.n = static_cast<std::size_t>(v);
    } else if (param == "mc.seed") {
        if (v != std::floor(v) || v < 0.0)
            throw ValidationError("sweep.values", "mc.seed sweep needs non-negative integers");
        sc.seed = static_cast<std::uint64_t>(v);
    } else if (param == "inference.alpha") {
        sc.alpha_inference = v;
    } else if (param == "dgp.violation") {
        sc.dgp.violation = v;
    } else {
        throw ValidationError("sweep.param",
                              "must be one of dgp.rho, mc.n, mc.seed, inference.alpha, "
                              "dgp.violation");
    }
}

inline ScenarioConfig build_scenario(const std::vector<ConfigEntry>& entries,
                                     std::string* sweep_param,
                                     std::vector<double>* sweep_values) {
    ScenarioConfig sc;
    bool have_family = false;
    bool have_mode = false;
    for (const auto& e : entries) {
        const std::string& k = e.key;
        if (k == "mc.scenario_id") {
            sc.scenario_id = e.value;
        } else if (k == "mc.reps") {
            sc.reps = static_cast<std::size_t>(parse_uint(e));
        } else if (k == "mc.n") {
            sc.n = static_cast<std::size_t>(parse_uint(e));
        } else if (k == "mc.seed") {
            sc.seed = parse_uint(e);
        } else if (k == "mc.mode") {
            have_mode = true;
            if (e.value == "finite_sample") sc.mode = InferenceMode::FiniteSample;
            else if (e.value == "exact_limit") sc.mode = InferenceMode::ExactLimit;
            else throw ValidationError(k, "expected finite_sample or exact_limit");
        } else if (k == "dgp.family") {
            have_family = true;
            if (e.value == "did") sc.dgp.family = DgpFamily::Did;
            else if (e.value == "iv") sc.dgp.family = DgpFamily::Iv;
            else if (e.value == "gmm") sc.dgp.family = DgpFamily::Gmm;
            else if (e.value == "linear_constant") sc.dgp.family = DgpFamily::LinearConstant;
            else if (e.value == "gaussian_direct") sc.dgp.family = DgpFamily::GaussianDirect;
            else throw ValidationError(k, "unknown family '" + e.value + "'");
        } else if (k == "dgp.rho") {
            sc.dgp.rho = parse_double(e);
        } else if (k == "dgp.null_mode") {
            sc.dgp.null_mode = parse_bool(e);
        } else if (k == "dgp.violation") {
            sc.dgp.violation = parse_double(e);
        } else if (k == "dgp.effect") {
            sc.dgp.did_effect = parse_double(e);
        } else if (k == "dgp.pre_periods") {
            sc.dgp.pre_periods = static_cast<int>(parse_int(e));
        } else if (k == "dgp.grid_size") {
            sc.dgp.grid_size = static_cast<int>(parse_int(e));
        } else if (k == "dgp.p") {
            sc.dgp.gd_p = static_cast<int>(parse_int(e));
        } else if (k == "dgp.q") {
            const int v = static_cast<int>(parse_int(e));
            sc.dgp.gd_q = v;
            sc.dgp.gmm_q = v;
        } else if (k == "inference.alpha") {
            sc.alpha_inference = parse_double(e);
        } else if (k == "inference.b0") {
            sc.b0 = parse_list(e);
        } else if (k == "tests.alpha") {
            sc.alpha_spec = parse_list(e);
        } else if (k == "tests.crit_draws") {
            sc.crit_draws = static_cast<std::size_t>(parse_uint(e));
        } else if (k == "tests.crit_method") {
            if (e.value == "plugin") sc.crit_method = CritMethod::Plugin;
            else if (e.value == "multiplier") sc.crit_method = CritMethod::Multiplier;
            else throw ValidationError(k, "expected plugin or multiplier");
        } else if (k == "tests.kind") {
            if (e.value == "f") sc.direct_kind = SpecTestKind::F;
            else if (e.value == "cvm") sc.direct_kind = SpecTestKind::CvM;
            else throw ValidationError(k, "expected f or cvm");
        } else if (k == "sweep.param") {
            *sweep_param = e.value;
        } else if (k == "sweep.values") {
            *sweep_values = parse_list(e);
        } else {
            throw ValidationError(k, "unknown key");
        }
    }
    if (!have_family) throw ValidationError("dgp.family", "required");
    if (!have_mode)
        sc.mode = sc.dgp.family == DgpFamily::GaussianDirect ? InferenceMode::ExactLimit
                                                             : InferenceMode::FiniteSample;
    return sc;
}

inline GciSweepConfig build_gci(const std::vector<ConfigEntry>& entries) {
    GciSweepConfig g;
    for (const auto& e : entries) {
        const std::string& k = e.key;
        if (k == "gci.cases") g.cases = parse_uint(e);
        else if (k == "gci.dim_max") g.dim_max = static_cast<std::size_t>(parse_uint(e));
        else if (k == "gci.draws") g.draws = parse_uint(e);
        else if (k == "gci.seed") g.seed = parse_uint(e);
        else throw ValidationError(k, "unknown key");
    }
    return g;
}

}  // namespace detail

inline ConfigDocument parse_config(const std::string& text) {
    const std::vector<ConfigEntry> entries = detail::tokenize(text);
    if (entries.empty()) throw ValidationError("", "empty config");

    bool any_gci = false, any_other = false;
    for (const auto& e : entries)
        (e.key.rfind("gci.", 0) == 0 ? any_gci : any_other) = true;
    if (any_gci && any_other)
        throw ValidationError("", "config mixes gci.* keys with scenario keys");

    ConfigDocument doc;
    if (any_gci) {
        doc.is_gci = true;
        doc.gci = detail::build_gci(entries);
        validate_gci_sweep(doc.gci);
        return doc;
    }

    const ScenarioConfig base =
        detail::build_scenario(entries, &doc.sweep_param, &doc.sweep_values);
    if (doc.sweep_param.empty() != doc.sweep_values.empty())
        throw ValidationError("sweep.param", "sweep.param and sweep.values go together");
    if (doc.sweep_param.empty()) {
        doc.scenarios.push_back(base);
    } else {
        for (double v : doc.sweep_values) {
            ScenarioConfig sc = base;
            detail::apply_sweep_value(sc, doc.sweep_param, v);
            sc.scenario_id =
                base.scenario_id + "[" + doc.sweep_param + "=" + detail::render_number(v) + "]";
            doc.scenarios.push_back(sc);
        }
    }
    for (const auto& sc : doc.scenarios) validate_scenario(sc);
    return doc;
}

// Canonical serialization of the resolved document; defaults are
// materialized, keys sorted, numbers rendered losslessly.
inline std::string canonical_config(const ConfigDocument& doc) {
    std::map<std::string, std::string> kv;
    if (doc.is_gci) {
        kv["gci.cases"] = std::to_string(doc.gci.cases);
        kv["gci.dim_max"] = std::to_string(doc.gci.dim_max);
        kv["gci.draws"] = std::to_string(doc.gci.draws);
        kv["gci.seed"] = std::to_string(doc.gci.seed);
    } else {
        const ScenarioConfig& sc = doc.scenarios.front();
        kv["mc.scenario_id"] = doc.sweep_param.empty()
                                   ? sc.scenario_id
                                   : sc.scenario_id.substr(0, sc.scenario_id.find('['));
        kv["mc.reps"] = std::to_string(sc.reps);
        kv["mc.n"] = std::to_string(sc.n);
        kv["mc.seed"] = std::to_string(sc.seed);
        kv["mc.mode"] = to_string(sc.mode);
        kv["dgp.family"] = to_string(sc.dgp.family);
        kv["dgp.rho"] = detail::render_double(sc.dgp.rho);
        kv["dgp.null_mode"] = sc.dgp.null_mode ? "true" : "false";
        kv["dgp.violation"] = detail::render_double(sc.dgp.violation);
        kv["dgp.effect"] = detail::render_double(sc.dgp.did_effect);
        kv["dgp.pre_periods"] = std::to_string(sc.dgp.pre_periods);
        kv["dgp.grid_size"] = std::to_string(sc.dgp.grid_size);
        kv["dgp.p"] = std::to_string(sc.dgp.gd_p);
        kv["dgp.q"] = std::to_string(sc.dgp.family == DgpFamily::Gmm ? sc.dgp.gmm_q
                                                                     : sc.dgp.gd_q);
        kv["inference.alpha"] = detail::render_double(sc.alpha_inference);
        std::string b0;
        for (double v : resolved_b0(sc)) b0 += (b0.empty() ? "" : ",") + detail::render_double(v);
        kv["inference.b0"] = b0;
        std::string as;
        for (double v : resolved_alpha_spec(sc))
            as += (as.empty() ? "" : ",") + detail::render_double(v);
        kv["tests.alpha"] = as;
        kv["tests.crit_draws"] = std::to_string(sc.crit_draws);
        kv["tests.crit_method"] = to_string(sc.crit_method);
        kv["tests.kind"] = to_string(sc.direct_kind);
        if (!doc.sweep_param.empty()) {
            kv["sweep.param"] = doc.sweep_param;
            std::string sv;
            for (double v : doc.sweep_values)
                sv += (sv.empty() ? "" : ",") + detail::render_double(v);
            kv["sweep.values"] = sv;
        }
    }
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

// FNV-1a 64 of the canonical form.
inline std::uint64_t config_digest(const ConfigDocument& doc) {
    const std::string canon = canonical_config(doc);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string digest_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace condinf
