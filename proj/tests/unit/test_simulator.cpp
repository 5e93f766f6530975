#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "qtrap/error.hpp"
#include "qtrap/simulator.hpp"
#include "qtrap/telemetry_io.hpp"

using namespace qtrap;

namespace {

SimScenario scenario(const std::string& name) {
    return load_scenario(std::string(QTRAP_DATA_DIR) + "/scenarios/" + name + ".json");
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("records follow the hop-chain and latency models") {
    const auto s = scenario("bstar64");
    const auto out = simulate(s);
    REQUIRE(out.records.size() == 27);
    CHECK(out.truth == s);
    for (const auto& r : out.records) {
        CHECK_NOTHROW(validate(r));
        const int p = r.config.precision_bits;
        const int b = r.config.batch_size;
        const auto lat = s.latency.at(p);
        CHECK(r.accuracy == std::pow(s.hop_success.at(p), s.hops_logical));
        CHECK(r.total_tokens == static_cast<std::int64_t>(s.n_queries) * s.hops_logical);
        CHECK(derived_tps(r).tokens_per_second == doctest::Approx(1.0 / (lat.a_comp_s + lat.a_cast_s / b)));
        CHECK(std::get<DirectJoules>(r.power).joules_per_query ==
              doctest::Approx(oracle::energy(1.0, 1.0, s.energy.phi(p), s.hops_logical, p, b)));
    }
    CHECK(out.records.front().config.precision_bits == 4);
    CHECK(out.records.front().config.batch_size == 1);
    CHECK(out.records.back().config.precision_bits == 16);
}

TEST_CASE("simulation is a pure function of the scenario") {
    auto s = scenario("fit_grid");
    const auto a = simulate(s);
    const auto b = simulate(s);
    CHECK(a.records == b.records);
    s.seed += 1;
    const auto c = simulate(s);
    CHECK(a.records != c.records);
}

TEST_CASE("batch order in the scenario does not change any cell") {
    auto s = scenario("fit_grid");
    const auto a = simulate(s);
    std::reverse(s.batches.begin(), s.batches.end());
    CHECK(simulate(s).records == a.records);
}

TEST_CASE("stochastic accuracy concentrates around q^K") {
    const auto s = scenario("fit_grid");
    for (const auto& r : simulate(s).records) {
        const double q = std::pow(s.hop_success.at(r.config.precision_bits), s.hops_logical);
        const double sigma = std::sqrt(q * (1.0 - q) / s.n_queries);
        CHECK(std::abs(r.accuracy - q) <= 5.0 * sigma);
    }
}

TEST_CASE("TDP energy source emits board power anchors") {
    auto s = scenario("bstar64");
    s.energy_source = EnergySource::tdp;
    s.tdp_watts = 350.0;
    for (const auto& r : simulate(s).records) CHECK(std::get<TdpAnchor>(r.power).tdp_watts == 350.0);
    s.tdp_watts = 0.0;
    CHECK_THROWS_AS(simulate(s), ValidationError);
}

TEST_CASE("scenario JSON round trip") {
    for (const std::string name : {"bstar64", "bstar1", "mistral_h100_calibrated", "fit_grid"}) {
        const auto s = scenario(name);
        CHECK(parse_scenario(scenario_to_json(s)) == s);
    }
}

TEST_CASE("scenario validation names the field") {
    auto expect = [](SimScenario s, const std::string& field) {
        try {
            s.validate();
            FAIL("expected ValidationError for " << field);
        } catch (const ValidationError& e) {
            CHECK(e.field() == field);
        }
    };
    const auto base = scenario("bstar64");
    { auto s = base; s.hop_success[4] = 0.0; expect(s, "hop_success"); }
    { auto s = base; s.hop_success[4] = 0.9999; expect(s, "hop_success"); }
    { auto s = base; s.latency[16].a_cast_s = 0.1; expect(s, "latency"); }
    { auto s = base; s.latency[8].a_comp_s = 0.0; expect(s, "latency"); }
    { auto s = base; s.batches.push_back(0); expect(s, "batches"); }
    { auto s = base; s.peak_vram_gb.erase(8); expect(s, "peak_vram_gb"); }
    { auto s = base; s.energy.phi_by_precision[8] = 0.5; expect(s, "energy"); }
    { auto s = base; s.energy.phi_by_precision.erase(4); expect(s, "energy.phi"); }

    CHECK_THROWS_AS(parse_scenario("{\"hops\": 1, \"colour\": 2}"), ValidationError);
    CHECK_THROWS_AS(parse_scenario("not json"), ValidationError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), IoError);
}

TEST_CASE("simulated records survive the JSONL round trip") {
    const auto out = simulate(scenario("fit_grid"));
    std::ostringstream buf;
    write_jsonl(buf, out.records);
    std::istringstream in(buf.str());
    CHECK(parse_jsonl(in).records == out.records);
}

}
