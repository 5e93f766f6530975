#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qtrap/error.hpp"
#include "qtrap/theorems.hpp"

using namespace qtrap;

namespace {

SimScenario scenario(const std::string& name) {
    return load_scenario(std::string(QTRAP_DATA_DIR) + "/scenarios/" + name + ".json");
}

CheckStatus status(const TheoremReport& r, const std::string& id) { return r.check(id).status; }

}  // namespace

TEST_SUITE("theorems") {

TEST_CASE("bundled critical-batch scenario passes every check") {
    const auto r = verify_theorems(scenario("bstar64"));
    CHECK(r.all_passed());
    CHECK(r.checks.size() == 4);
}

TEST_CASE("B* = 1 scenario crosses between the first two batches") {
    const auto r = verify_theorems(scenario("bstar1"));
    CHECK(status(r, "T3") == CheckStatus::pass);
    CHECK(status(r, "T4") == CheckStatus::inconclusive);
    CHECK_FALSE(r.any_failed());
}

TEST_CASE("grids that cannot exercise a check are inconclusive") {
    auto s = scenario("bstar64");
    s.energy_source = EnergySource::tdp;
    s.tdp_watts = 300.0;
    const auto tdp = verify_theorems(s);
    CHECK(status(tdp, "T3") == CheckStatus::inconclusive);
    CHECK_FALSE(tdp.any_failed());

    s = scenario("bstar64");
    s.batches = {1, 2, 4};
    CHECK(status(verify_theorems(s), "T3") == CheckStatus::inconclusive);

    s = scenario("bstar64");
    s.batches = {128, 256};
    CHECK(status(verify_theorems(s), "T3") == CheckStatus::inconclusive);
    CHECK(status(verify_theorems(s), "T4") == CheckStatus::inconclusive);

    s = scenario("bstar64");
    s.latency[4].a_comp_s = 0.02;
    const auto r = verify_theorems(s);
    CHECK(status(r, "T5a") == CheckStatus::pass);
    CHECK(r.check("T5a").details.front().find("not identifiable") != std::string::npos);
}

TEST_CASE("tampered output is caught") {
    const auto s = scenario("bstar64");
    auto out = simulate(s);
    for (auto& r : out.records) {
        if (r.config.precision_bits == 8 && r.config.batch_size == 16) r.duration_s *= 1.1;
        if (r.config.precision_bits == 4 && r.config.batch_size == 2) r.accuracy += 1e-6;
    }
    const auto rep = verify_theorems(s, out);
    CHECK(status(rep, "T5a") == CheckStatus::fail);
    CHECK(status(rep, "T5b") == CheckStatus::fail);

    auto shifted = simulate(s);
    for (auto& r : shifted.records) {
        if (r.config.precision_bits == 8 && r.config.batch_size == 256) {
            r.power = DirectJoules{std::get<DirectJoules>(r.power).joules_per_query * 2.0};
        }
    }
    CHECK(status(verify_theorems(s, shifted), "T3") == CheckStatus::pass);

    auto early = simulate(s);
    for (auto& r : early.records) {
        if (r.config.precision_bits == 8 && r.config.batch_size == 16) {
            r.power = DirectJoules{std::get<DirectJoules>(r.power).joules_per_query * 2.0};
        }
    }
    CHECK(status(verify_theorems(s, early), "T3") == CheckStatus::fail);

    auto missing = simulate(s);
    missing.records.pop_back();
    CHECK_THROWS_AS(verify_theorems(s, missing), AnalysisError);
}

TEST_CASE("randomized scenarios never fail a check") {
    std::mt19937_64 rng(2024);
    for (std::uint64_t i = 0; i < 25; ++i) {
        const auto s = oracle::random_scenario(rng, i);
        const auto r = verify_theorems(s);
        CAPTURE(i);
        for (const auto& c : r.checks) {
            CAPTURE(c.id);
            CHECK(c.status == CheckStatus::pass);
        }
    }
}

}
