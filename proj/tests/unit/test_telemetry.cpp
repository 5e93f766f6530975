#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "qtrap/error.hpp"
#include "qtrap/telemetry.hpp"
#include "qtrap/telemetry_io.hpp"

namespace fs = std::filesystem;
using namespace qtrap;

namespace {

const fs::path kFixtures = fs::path(QTRAP_DATA_DIR) / "fixtures";
const fs::path kTestData = fs::path(QTRAP_TEST_DATA_DIR);

TelemetryRecord sample_record() {
    return oracle::make_record("m", "gpu", 16, 1, "t", 611000, 1000.0, 100, 0.5, 10.0, TdpAnchor{300.0});
}

std::string with_field(const std::string& json, const std::string& from, const std::string& to) {
    std::string out = json;
    const auto pos = out.find(from);
    REQUIRE(pos != std::string::npos);
    out.replace(pos, from.size(), to);
    return out;
}

}  // namespace

TEST_SUITE("telemetry") {

TEST_CASE("derived throughput is tokens over duration") {
    const auto r = sample_record();
    CHECK(derived_tps(r).tokens_per_second == doctest::Approx(611.0).epsilon(1e-12));
    CHECK_FALSE(derived_tps(r).zero_tokens);

    auto zero = r;
    zero.total_tokens = 0;
    CHECK(derived_tps(zero).tokens_per_second == 0.0);
    CHECK(derived_tps(zero).zero_tokens);
}

TEST_CASE("validation names the violated field") {
    auto expect_field = [](TelemetryRecord r, const std::string& field) {
        try {
            validate(r);
            FAIL("expected a ValidationError for " << field);
        } catch (const ValidationError& e) {
            CHECK(e.field() == field);
        }
    };
    auto r = sample_record();
    CHECK_NOTHROW(validate(r));
    { auto x = r; x.duration_s = 0.0; expect_field(x, "duration_s"); }
    { auto x = r; x.accuracy = 1.2; expect_field(x, "accuracy"); }
    { auto x = r; x.sample_count = 0; expect_field(x, "sample_count"); }
    { auto x = r; x.config.batch_size = 0; expect_field(x, "batch_size"); }
    { auto x = r; x.peak_vram_gb = -1.0; expect_field(x, "peak_vram_gb"); }
    { auto x = r; x.power = TdpAnchor{0.0}; expect_field(x, "power.tdp_watts"); }
    { auto x = r; x.power = SampledTrace{{{0.0, 10.0}, {1.0, -1.0}}}; expect_field(x, "power.samples"); }
    { auto x = r; x.power = SampledTrace{{{1.0, 10.0}, {1.0, 12.0}}}; expect_field(x, "power.samples"); }
    { auto x = r; x.grid_gco2_per_kwh = -3.0; expect_field(x, "grid_gco2_per_kwh"); }
}

TEST_CASE("fixture corpus parses") {
    const auto loaded = load_telemetry_files(expand_inputs({kFixtures}));
    CHECK(loaded.records.size() == 18);
    CHECK(loaded.warnings.empty());
}

TEST_CASE("negative watts are rejected with the line cited") {
    try {
        load_telemetry(kTestData / "negative_watts.jsonl");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.line() == 2);
        CHECK(e.field() == "power.samples");
        CHECK(std::string(e.what()).find("negative_watts.jsonl:2") != std::string::npos);
    }
}

TEST_CASE("duplicate ConfigId cites both lines") {
    try {
        load_telemetry(kTestData / "duplicate_config.jsonl");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
}

TEST_CASE("unknown fields are rejected") {
    CHECK_THROWS_AS(load_telemetry(kTestData / "unknown_field.jsonl"), ValidationError);
}

TEST_CASE("an empty file loads with a warning") {
    const auto loaded = load_telemetry(kTestData / "empty.jsonl");
    CHECK(loaded.records.empty());
    CHECK(loaded.warnings.size() == 1);
}

TEST_CASE("missing paths are I/O errors") {
    CHECK_THROWS_AS(expand_inputs({kTestData / "does_not_exist.jsonl"}), IoError);
    CHECK_THROWS_AS(load_telemetry(kTestData / "does_not_exist.jsonl"), IoError);
}

TEST_CASE("malformed JSON lines are validation errors") {
    std::istringstream in("{\"model\": \n");
    CHECK_THROWS_AS(parse_jsonl(in, "inline"), ValidationError);
    const std::string line = to_jsonl_line(sample_record());
    CHECK_THROWS_AS(parse_record_json(with_field(line, "\"total_tokens\":611000", "\"total_tokens\":1.5")),
                    ValidationError);
    CHECK_THROWS_AS(parse_record_json(with_field(line, "\"kind\":\"tdp\"", "\"kind\":\"nvml\"")),
                    ValidationError);
}

TEST_CASE("CSV importer matches the JSONL reader") {
    std::istringstream csv(
        "model,hardware,precision_bits,batch_size,task,total_tokens,duration_s,sample_count,accuracy,"
        "peak_vram_gb,power_kind,power_value,grid_gco2_per_kwh\n"
        "m,gpu,16,1,t,611000,1000,100,0.5,10,tdp,300,\n"
        "m,gpu,4,1,t,304000,1000,100,0.45,4,joules,12.5,420\n");
    const auto loaded = parse_csv(csv, "inline.csv");
    REQUIRE(loaded.records.size() == 2);
    CHECK(loaded.records[0] == sample_record());
    CHECK(std::get<DirectJoules>(loaded.records[1].power).joules_per_query == 12.5);
    CHECK(loaded.records[1].grid_gco2_per_kwh.value() == 420.0);

    std::istringstream bad("model,hardware\nm,gpu\n");
    CHECK_THROWS_AS(parse_csv(bad, "bad.csv"), ValidationError);
}

TEST_CASE("JSONL round trip is lossless on random records") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TelemetryRecord> records;
    for (int i = 0; i < 200; ++i) {
        PowerEvidence power;
        switch (i % 3) {
            case 0: power = TdpAnchor{1.0 + 500.0 * u(rng)}; break;
            case 1: power = DirectJoules{1e4 * u(rng)}; break;
            default: {
                SampledTrace t;
                double ts = 0.0;
                for (int k = 0; k < 5; ++k) {
                    t.samples.push_back({ts, 400.0 * u(rng)});
                    ts += 0.1 + u(rng);
                }
                power = t;
            }
        }
        auto r = oracle::make_record("model-" + std::to_string(i % 7), "hw", 2 + i % 15, 1 + i, "task",
                                     static_cast<std::int64_t>(1e6 * u(rng)), 1.0 + 1e4 * u(rng),
                                     1 + static_cast<std::int64_t>(1000 * u(rng)), u(rng), 0.1 + 80 * u(rng),
                                     power);
        if (i % 4 == 0) r.grid_gco2_per_kwh = 800.0 * u(rng);
        if (i % 5 == 0) r.source = "origin \"quoted\", with comma";
        if (i % 6 == 0) r.warnings = {"fell back to tdp"};
        records.push_back(r);
    }
    std::ostringstream out;
    write_jsonl(out, records);
    std::istringstream in(out.str());
    const auto back = parse_jsonl(in, "roundtrip");
    REQUIRE(back.records.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(back.records[i] == records[i]);

    std::ostringstream again;
    write_jsonl(again, back.records);
    CHECK(again.str() == out.str());
}

TEST_CASE("multi-file loading is independent of argument order") {
    const auto files = expand_inputs({kFixtures});
    auto reversed = files;
    std::reverse(reversed.begin(), reversed.end());
    const auto a = load_telemetry_files(files);
    const auto b = load_telemetry_files(reversed);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i] == b.records[i]);
}

}
