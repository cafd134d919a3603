#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "condinf/report.hpp"

using namespace condinf;

namespace {

const char* kScenarioHeader =
    "scenario_id,rho,n,R,pass_rate,cond_reject,cond_reject_lo,cond_reject_hi,"
    "cond_cover,cond_cover_lo,cond_cover_hi,uncond_reject,uncond_cover,invalid_count\n";

MCReport sample_report() {
    MCReport r;
    r.scenario_id = "demo";
    r.family = "did";
    r.rho = 0.123456789;
    r.n = 2000;
    r.reps = 1000;
    r.reps_valid = 998;
    r.reps_passed = 950;
    r.invalid_count = 2;
    r.pass_rate = 0.95;
    r.cond_reject = {0.0482105263157894, 0.036, 0.061};
    r.cond_cover = {0.951578947368421, 0.937, 0.963};
    r.uncond_reject = 1.0 / 3.0;
    r.uncond_cover = 0.9519038076152304;
    r.critical_values = {3.84};
    return r;
}

}  // namespace

TEST_CASE("empty report lists emit just the header") {
    REQUIRE(emit_report({}, ReportFormat::Csv) == kScenarioHeader);
    REQUIRE(emit_gci_report({}, ReportFormat::Csv) ==
            "case_id,dim,draws,p_joint,p_e,p_f,margin,se_margin\n");
}

TEST_CASE("csv rows use six significant digits") {
    const std::string csv = emit_report({sample_report()}, ReportFormat::Csv);
    REQUIRE(csv.find(kScenarioHeader) == 0);
    REQUIRE(csv.find("demo,0.123457,2000,1000,0.95,") != std::string::npos);
    REQUIRE(csv.find("0.0482105") != std::string::npos);
    REQUIRE(csv.find("0.951579") != std::string::npos);
}

TEST_CASE("csv escaping quotes ids with separators") {
    MCReport r = sample_report();
    r.scenario_id = "odd,\"id\"";
    const std::string csv = emit_report({r}, ReportFormat::Csv);
    REQUIRE(csv.find("\"odd,\"\"id\"\"\"") != std::string::npos);
}

TEST_CASE("table format aligns and keeps all columns") {
    const std::string table = emit_report({sample_report()}, ReportFormat::Table);
    REQUIRE(table.find("scenario_id") != std::string::npos);
    REQUIRE(table.find("uncond_cover") != std::string::npos);
    REQUIRE(table.find("demo") != std::string::npos);
    REQUIRE(table.find(',') == std::string::npos);
}

TEST_CASE("scenario json round-trips at full precision") {
    const MCReport orig = sample_report();
    const std::string payload = emit_report({orig}, ReportFormat::Json);
    const std::vector<MCReport> parsed = parse_scenario_reports(payload);
    REQUIRE(parsed.size() == 1);
    const MCReport& r = parsed[0];
    REQUIRE(r.scenario_id == orig.scenario_id);
    REQUIRE(r.family == orig.family);
    REQUIRE(r.rho == orig.rho);
    REQUIRE(r.n == orig.n);
    REQUIRE(r.reps == orig.reps);
    REQUIRE(r.reps_valid == orig.reps_valid);
    REQUIRE(r.reps_passed == orig.reps_passed);
    REQUIRE(r.invalid_count == orig.invalid_count);
    REQUIRE(r.pass_rate == orig.pass_rate);
    REQUIRE(r.cond_reject.rate == orig.cond_reject.rate);
    REQUIRE(r.cond_reject.lo == orig.cond_reject.lo);
    REQUIRE(r.cond_reject.hi == orig.cond_reject.hi);
    REQUIRE(r.cond_cover.rate == orig.cond_cover.rate);
    REQUIRE(r.uncond_reject == orig.uncond_reject);
    REQUIRE(r.uncond_cover == orig.uncond_cover);
    REQUIRE(r.critical_values == orig.critical_values);
}

TEST_CASE("gci json round-trips at full precision") {
    GciReport g;
    g.case_id = "case7";
    g.dim = 4;
    g.draws = 100000;
    g.p_joint = 0.6180339887498949;
    g.p_e = 0.7071067811865476;
    g.p_f = 0.8414709848078965;
    g.margin = g.p_joint - g.p_e * g.p_f;
    g.se_margin = 0.0012345678901234;
    const std::string payload = emit_gci_report({g}, ReportFormat::Json);
    const std::vector<GciReport> parsed = parse_gci_reports(payload);
    REQUIRE(parsed.size() == 1);
    REQUIRE(parsed[0].case_id == g.case_id);
    REQUIRE(parsed[0].dim == g.dim);
    REQUIRE(parsed[0].draws == g.draws);
    REQUIRE(parsed[0].p_joint == g.p_joint);
    REQUIRE(parsed[0].p_e == g.p_e);
    REQUIRE(parsed[0].p_f == g.p_f);
    REQUIRE(parsed[0].margin == g.margin);
    REQUIRE(parsed[0].se_margin == g.se_margin);
}

TEST_CASE("json payloads are typed") {
    REQUIRE(emit_report({}, ReportFormat::Json).find("scenario_reports") != std::string::npos);
    REQUIRE(emit_gci_report({}, ReportFormat::Json).find("gci_reports") != std::string::npos);
}

TEST_CASE("format parsing") {
    REQUIRE(parse_format("table") == ReportFormat::Table);
    REQUIRE(parse_format("csv") == ReportFormat::Csv);
    REQUIRE(parse_format("json") == ReportFormat::Json);
    REQUIRE_THROWS_AS(parse_format("yaml"), ValidationError);
}

TEST_CASE("manifest serializes every field") {
    RunManifest m;
    m.version = "0.1.0";
    m.config_digest = "00112233445566aa";
    m.workers = 4;
    m.started_at = "2026-01-02T03:04:05Z";
    m.finished_at = "2026-01-02T03:04:09Z";
    const std::string j = manifest_json(m);
    REQUIRE(j.find("\"tool\":\"condinf\"") != std::string::npos);
    REQUIRE(j.find("\"version\":\"0.1.0\"") != std::string::npos);
    REQUIRE(j.find("00112233445566aa") != std::string::npos);
    REQUIRE(j.find("\"workers\":4") != std::string::npos);
    REQUIRE(j.find("2026-01-02T03:04:05Z") != std::string::npos);

    const std::string now = iso8601_utc_now();
    REQUIRE(now.size() == 20);
    REQUIRE(now.back() == 'Z');
    REQUIRE(now[4] == '-');
    REQUIRE(now[10] == 'T');
}

TEST_CASE("write_file round trip and failure") {
    const std::string path = "test_report_tmp.txt";
    write_file(path, "hello\nworld\n");
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    REQUIRE(ss.str() == "hello\nworld\n");
    std::remove(path.c_str());
    REQUIRE_THROWS_AS(write_file("no_such_dir_xyz/file.txt", "x"), IoError);
}
