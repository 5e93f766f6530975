#include <filesystem>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "qtrap/error.hpp"
#include "qtrap/report.hpp"
#include "qtrap/telemetry_io.hpp"

namespace fs = std::filesystem;
using namespace qtrap;
using nlohmann::json;

namespace {

std::vector<TelemetryRecord> fixtures() {
    return load_telemetry_files(expand_inputs({fs::path(QTRAP_DATA_DIR) / "fixtures"})).records;
}

ReportOptions quiet() {
    ReportOptions o;
    o.include_meta = false;
    return o;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("fixture report covers every ladder") {
    const auto b = build_report(fixtures(), quiet());
    CHECK(b.ladders.size() == 6);
    CHECK(b.unanchored.empty());
    CHECK(b.refused.empty());
    const json j = json::parse(render_json(b));
    CHECK(j["schema_version"] == kReportSchemaVersion);
    CHECK_FALSE(j.contains("meta"));
    CHECK(j["summary"]["divergent"] == 6);
    CHECK(j["provenance"]["policy"] == "linear");
    CHECK(j["provenance"]["weights"]["trust"] == 0.34);
    CHECK(j["ladders"].size() == 6);
    const auto& first = j["ladders"][0];
    CHECK(first["model"] == "mistral-7b-instruct");
    CHECK(first["hardware"] == "a100");
    CHECK(first["rungs"].size() == 3);
    CHECK(first["rungs"][0]["precision_bits"] == 4);
    CHECK(first["rungs"][0].contains("cor"));
    CHECK(first["rungs"][0]["si"].contains("geometric"));
    CHECK_FALSE(first["rungs"][2].contains("si_deficit"));
}

TEST_CASE("meta block carries version and timestamp") {
    auto o = quiet();
    o.include_meta = true;
    o.generated_at = "2026-01-01T00:00:00Z";
    const json j = json::parse(render_json(build_report(fixtures(), o)));
    CHECK(j["meta"]["tool_version"] == tool_version());
    CHECK(j["meta"]["generated_at"] == "2026-01-01T00:00:00Z");
}

TEST_CASE("trust-only weights project onto the trust column") {
    auto o = quiet();
    o.weights = {1.0, 0.0, 0.0, Policy::linear};
    for (const auto& lr : build_report(fixtures(), o).ladders) {
        for (const auto& r : lr.verdict.rungs) CHECK(r.si.si == r.pillars.trust.value);
    }
}

TEST_CASE("report order does not depend on input order") {
    auto records = fixtures();
    const std::string a = render_json(build_report(records, quiet()));
    std::reverse(records.begin(), records.end());
    CHECK(render_json(build_report(records, quiet())) == a);
}

TEST_CASE("an empty record set yields an empty report with a warning") {
    const auto b = build_report({}, quiet());
    CHECK(b.ladders.empty());
    REQUIRE(b.warnings.size() == 1);
    const json j = json::parse(render_json(b));
    CHECK(j["summary"]["records"] == 0);
    CHECK(render_markdown(b).find("No telemetry records") != std::string::npos);
    for (const auto& t : render_csv_series(b)) CHECK(t.rows.empty());
}

TEST_CASE("unscoreable anchors are refused, not fatal") {
    auto records = fixtures();
    for (auto& r : records) {
        if (r.config.hardware == "l4" && r.config.model.rfind("qwen", 0) == 0 && r.config.precision_bits == 16) {
            r.accuracy = 0.0;
        }
    }
    records.push_back(oracle::make_record("lonely", "cpu", 4, 1, "t", 10, 1.0, 1, 0.1, 1.0, TdpAnchor{10.0}));
    const auto b = build_report(records, quiet());
    CHECK(b.ladders.size() == 5);
    REQUIRE(b.refused.size() == 1);
    CHECK(b.refused[0].key.hardware == "l4");
    REQUIRE(b.unanchored.size() == 1);
    CHECK(b.unanchored[0].key.model == "lonely");
}

TEST_CASE("markdown carries the SI deficit table") {
    const std::string md = render_markdown(build_report(fixtures(), quiet()));
    CHECK(md.find("## SI deficit") != std::string::npos);
    CHECK(md.find("| mistral-7b-instruct | h100 | gsm8k | 1 | 4 | 0.9138 | 0.7005 | 0.4458 | 0.6889 | 0.3111 |") !=
          std::string::npos);
}

TEST_CASE("csv series have the documented headers") {
    const auto tables = render_csv_series(build_report(fixtures(), quiet()));
    REQUIRE(tables.size() == 5);
    CHECK(tables[0].name == "tps_by_precision");
    CHECK(tables[0].to_csv().rfind("model,hardware,task,batch_size,precision_bits,tokens_per_second\n", 0) == 0);
    CHECK(tables[1].name == "energy_by_precision");
    CHECK(tables[1].to_csv().rfind(
              "model,hardware,task,batch_size,precision_bits,joules_per_query,power_kind\n", 0) == 0);
    CHECK(tables[2].name == "pillars");
    CHECK(tables[2].to_csv().rfind("model,hardware,task,batch_size,precision_bits,trust,econ,energy,si_linear,"
                                   "si_geometric,gradient_sign\n",
                                   0) == 0);
    CHECK(tables[3].name == "cor_by_batch");
    CHECK(tables[3].to_csv().rfind("model,hardware,task,precision_bits,batch_size,cor,dominance\n", 0) == 0);
    CHECK(tables[4].name == "accuracy_by_batch");
    CHECK(tables[4].to_csv().rfind("model,hardware,task,precision_bits,batch_size,accuracy\n", 0) == 0);
    CHECK(tables[0].rows.size() == 18);
    CHECK(tables[2].rows.size() == 18);
    CHECK(tables[3].rows.size() == 12);
}

TEST_CASE("csv cells with commas and quotes are escaped") {
    SeriesTable t{"x", {"a", "b"}, {{"plain", "with, \"comma\""}}};
    CHECK(t.to_csv() == "a,b\nplain,\"with, \"\"comma\"\"\"\n");
}

TEST_CASE("simulated telemetry is reported like measured telemetry") {
    const auto sim = simulate(load_scenario(std::string(QTRAP_DATA_DIR) + "/scenarios/bstar64.json"));
    auto o = quiet();
    o.fit_energy = true;
    const auto b = build_report(sim.records, o);
    CHECK(b.ladders.size() == 9);
    REQUIRE(b.fits.size() == 1);
    REQUIRE(b.fits[0].fit.has_value());
    CHECK(oracle::relative_error(b.fits[0].fit->params.phi(8), 0.125) < 1e-6);
    const auto cor = render_csv_series(b)[3];
    CHECK(cor.rows.size() == 18);
    CHECK(cor.rows[0][3] == "4");
    CHECK(cor.rows[0][4] == "1");
    CHECK(cor.rows[1][4] == "2");
    CHECK(json::parse(render_json(b))["fits"][0]["fit"]["condition"] == "ok");
}

TEST_CASE("critical batch report and parameter parsing") {
    const auto p = parse_energy_params(R"({"gamma_static": 1, "alpha_mem": 1, "phi": {"4": 0.25, "8": 0.125}})");
    const json j = json::parse(bstar_to_json(p));
    CHECK(j["rungs"][0]["precision_bits"] == 4);
    CHECK(j["rungs"][0]["critical_batch"] == 48.0);
    CHECK(j["rungs"][1]["critical_batch"] == 64.0);
    CHECK(j["rungs"][1]["smallest_integer_batch_above"] == 65);

    const auto sim = simulate(load_scenario(std::string(QTRAP_DATA_DIR) + "/scenarios/fit_grid.json"));
    const auto fit = fit_energy_model(sim.records);
    const auto round = parse_energy_params(fit_to_json(fit, assess_fit_coverage(sim.records, 16)));
    CHECK(round.phi(4) == fit.params.phi(4));

    CHECK_THROWS_AS(parse_energy_params(R"({"alpha_mem": 1, "phi": {"4": 1}, "beta": 2})"), ValidationError);
    CHECK_THROWS_AS(parse_energy_params(R"({"alpha_mem": 1, "phi": {"four": 1}})"), ValidationError);
    CHECK_THROWS_AS(parse_energy_params(R"({"alpha_mem": 1, "phi": {"4": 1, "8": 2}})"), ValidationError);
    CHECK_THROWS_AS(parse_energy_params("{"), ValidationError);
}

TEST_CASE("theorem report JSON") {
    const auto r = verify_theorems(load_scenario(std::string(QTRAP_DATA_DIR) + "/scenarios/bstar64.json"));
    const json j = json::parse(theorems_to_json(r));
    CHECK(j["all_passed"] == true);
    CHECK(j["checks"].size() == 4);
    CHECK(j["checks"][0]["id"] == "T3");
}

}
