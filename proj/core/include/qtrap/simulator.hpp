#pragma once

// Synthetic telemetry generator. Accuracy follows the hop-chain product
// q(p)^K, latency follows tau_comp = a_comp * B, tau_cast = a_cast per
// batch, and energy comes from the amortization functional or from a TDP
// anchor. Output records are ordinary telemetry.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qtrap/amortization.hpp"
#include "qtrap/telemetry.hpp"

namespace qtrap {

struct LatencyParams {
    double a_comp_s = 0.0;  // compute seconds per example per hop
    double a_cast_s = 0.0;  // casting seconds per batch per hop

    bool operator==(const LatencyParams&) const = default;
};

enum class AccuracyMode { deterministic, stochastic };
enum class EnergySource { functional, tdp };

const char* to_string(AccuracyMode m);
const char* to_string(EnergySource s);

struct SimScenario {
    std::string name = "scenario";
    std::string model = "simulated";
    std::string hardware = "sim-gpu";
    std::string task = "synthetic";

    EnergyParams energy;  // energy.hops is ignored; hops_logical is K
    std::map<int, LatencyParams> latency;
    std::map<int, double> hop_success;  // q(p) = 1 - eps(p)
    std::map<int, double> peak_vram_gb;
    int hops_logical = 1;
    std::vector<int> batches;
    std::vector<int> precisions;
    int n_queries = 1;
    double tdp_watts = 0.0;
    std::uint64_t seed = 0;
    AccuracyMode accuracy_mode = AccuracyMode::deterministic;
    EnergySource energy_source = EnergySource::functional;
    double energy_noise_rel = 0.0;  // sd of multiplicative noise on J/query

    /// Energy parameters with K = hops_logical.
    EnergyParams energy_params() const;

    /// Throws ValidationError naming the violated field.
    void validate() const;

    bool operator==(const SimScenario&) const = default;
};

struct SimOutput {
    std::vector<TelemetryRecord> records;  // ascending precision, then batch
    SimScenario truth;
};

/// Deterministic for a given scenario: each cell draws from its own stream
/// seeded by (seed, cell index).
SimOutput simulate(const SimScenario& scenario);

SimScenario parse_scenario(std::string_view json_text, const std::string& origin = "<scenario>");
SimScenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const SimScenario& scenario);

}  // namespace qtrap
