#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "condinf/errors.hpp"
#include "condinf/gci.hpp"
#include "condinf/mc.hpp"

// Report serialization. CSV and the aligned table render at six significant
// digits; JSON keeps full precision and round-trips exactly. Serialization is
// deterministic (sorted keys, fixed column order), so identical reports yield
// identical bytes.

namespace condinf {

namespace detail {

inline std::string sig6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::vector<std::vector<std::string>> scenario_cells(
    const std::vector<MCReport>& reports) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"scenario_id", "rho", "n", "R", "pass_rate", "cond_reject",
                    "cond_reject_lo", "cond_reject_hi", "cond_cover", "cond_cover_lo",
                    "cond_cover_hi", "uncond_reject", "uncond_cover", "invalid_count"});
    for (const auto& r : reports)
        rows.push_back({r.scenario_id, sig6(r.rho), std::to_string(r.n),
                        std::to_string(r.reps), sig6(r.pass_rate), sig6(r.cond_reject.rate),
                        sig6(r.cond_reject.lo), sig6(r.cond_reject.hi), sig6(r.cond_cover.rate),
                        sig6(r.cond_cover.lo), sig6(r.cond_cover.hi), sig6(r.uncond_reject),
                        sig6(r.uncond_cover), std::to_string(r.invalid_count)});
    return rows;
}

inline std::vector<std::vector<std::string>> gci_cells(const std::vector<GciReport>& reports) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back(
        {"case_id", "dim", "draws", "p_joint", "p_e", "p_f", "margin", "se_margin"});
    for (const auto& r : reports)
        rows.push_back({r.case_id, std::to_string(r.dim), std::to_string(r.draws),
                        sig6(r.p_joint), sig6(r.p_e), sig6(r.p_f), sig6(r.margin),
                        sig6(r.se_margin)});
    return rows;
}

inline std::string cells_to_csv(const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline std::string cells_to_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i)
            width[i] = std::max(width[i], row[i].size());
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += "  ";
            out += row[i];
            if (i + 1 < row.size()) out.append(width[i] - row[i].size(), ' ');
        }
        out += '\n';
    }
    return out;
}

}  // namespace detail

enum class ReportFormat { Table, Csv, Json };

inline ReportFormat parse_format(const std::string& s) {
    if (s == "table") return ReportFormat::Table;
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    throw ValidationError("format", "expected table, csv, or json");
}

inline nlohmann::json to_json(const MCReport& r) {
    nlohmann::json j;
    j["scenario_id"] = r.scenario_id;
    j["family"] = r.family;
    j["rho"] = r.rho;
    j["n"] = r.n;
    j["reps"] = r.reps;
    j["reps_valid"] = r.reps_valid;
    j["reps_passed"] = r.reps_passed;
    j["invalid_count"] = r.invalid_count;
    j["pass_rate"] = r.pass_rate;
    j["cond_reject"] = {{"rate", r.cond_reject.rate}, {"lo", r.cond_reject.lo},
                        {"hi", r.cond_reject.hi}};
    j["cond_cover"] = {{"rate", r.cond_cover.rate}, {"lo", r.cond_cover.lo},
                       {"hi", r.cond_cover.hi}};
    j["uncond_reject"] = r.uncond_reject;
    j["uncond_cover"] = r.uncond_cover;
    if (!r.critical_values.empty()) j["critical_values"] = r.critical_values;
    return j;
}

inline MCReport mc_report_from_json(const nlohmann::json& j) {
    MCReport r;
    r.scenario_id = j.at("scenario_id").get<std::string>();
    r.family = j.at("family").get<std::string>();
    r.rho = j.at("rho").get<double>();
    r.n = j.at("n").get<std::uint64_t>();
    r.reps = j.at("reps").get<std::uint64_t>();
    r.reps_valid = j.at("reps_valid").get<std::uint64_t>();
    r.reps_passed = j.at("reps_passed").get<std::uint64_t>();
    r.invalid_count = j.at("invalid_count").get<std::uint64_t>();
    r.pass_rate = j.at("pass_rate").get<double>();
    r.cond_reject = {j.at("cond_reject").at("rate").get<double>(),
                     j.at("cond_reject").at("lo").get<double>(),
                     j.at("cond_reject").at("hi").get<double>()};
    r.cond_cover = {j.at("cond_cover").at("rate").get<double>(),
                    j.at("cond_cover").at("lo").get<double>(),
                    j.at("cond_cover").at("hi").get<double>()};
    r.uncond_reject = j.at("uncond_reject").get<double>();
    r.uncond_cover = j.at("uncond_cover").get<double>();
    if (j.contains("critical_values"))
        r.critical_values = j.at("critical_values").get<std::vector<double>>();
    return r;
}

inline nlohmann::json to_json(const GciReport& r) {
    nlohmann::json j;
    j["case_id"] = r.case_id;
    j["dim"] = r.dim;
    j["draws"] = r.draws;
    j["p_joint"] = r.p_joint;
    j["p_e"] = r.p_e;
    j["p_f"] = r.p_f;
    j["margin"] = r.margin;
    j["se_margin"] = r.se_margin;
    return j;
}

inline GciReport gci_report_from_json(const nlohmann::json& j) {
    GciReport r;
    r.case_id = j.at("case_id").get<std::string>();
    r.dim = j.at("dim").get<std::size_t>();
    r.draws = j.at("draws").get<std::uint64_t>();
    r.p_joint = j.at("p_joint").get<double>();
    r.p_e = j.at("p_e").get<double>();
    r.p_f = j.at("p_f").get<double>();
    r.margin = j.at("margin").get<double>();
    r.se_margin = j.at("se_margin").get<double>();
    return r;
}

inline std::string emit_report(const std::vector<MCReport>& reports, ReportFormat format) {
    if (format == ReportFormat::Json) {
        nlohmann::json j;
        j["type"] = "scenario_reports";
        j["reports"] = nlohmann::json::array();
        for (const auto& r : reports) j["reports"].push_back(to_json(r));
        return j.dump(2) + "\n";
    }
    const auto cells = detail::scenario_cells(reports);
    return format == ReportFormat::Csv ? detail::cells_to_csv(cells)
                                       : detail::cells_to_table(cells);
}

inline std::string emit_gci_report(const std::vector<GciReport>& reports,
                                   ReportFormat format) {
    if (format == ReportFormat::Json) {
        nlohmann::json j;
        j["type"] = "gci_reports";
        j["reports"] = nlohmann::json::array();
        for (const auto& r : reports) j["reports"].push_back(to_json(r));
        return j.dump(2) + "\n";
    }
    const auto cells = detail::gci_cells(reports);
    return format == ReportFormat::Csv ? detail::cells_to_csv(cells)
                                       : detail::cells_to_table(cells);
}

inline std::vector<MCReport> parse_scenario_reports(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    std::vector<MCReport> out;
    for (const auto& item : j.at("reports")) out.push_back(mc_report_from_json(item));
    return out;
}

inline std::vector<GciReport> parse_gci_reports(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    std::vector<GciReport> out;
    for (const auto& item : j.at("reports")) out.push_back(gci_report_from_json(item));
    return out;
}

struct RunManifest {
    std::string tool = "condinf";
    std::string version;
    std::string config_digest;
    std::size_t workers = 1;
    std::string started_at;
    std::string finished_at;
};

inline std::string iso8601_utc_now() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string manifest_json(const RunManifest& m) {
    nlohmann::json j;
    j["tool"] = m.tool;
    j["version"] = m.version;
    j["config_digest"] = m.config_digest;
    j["workers"] = m.workers;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    return j.dump();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace condinf
