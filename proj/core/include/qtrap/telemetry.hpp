#pragma once

// Canonical in-memory telemetry model. Units are fixed: seconds, watts,
// joules, gigabytes, grams CO2e per kWh. Nothing here infers units.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qtrap {

/// Identity of one measured configuration.
struct ConfigId {
    std::string model;
    std::string hardware;
    int precision_bits = 16;
    int batch_size = 1;
    std::string task;

    auto operator<=>(const ConfigId&) const = default;
};

std::string to_string(const ConfigId& id);

/// Everything in a ConfigId except precision. Records sharing a key form
/// one precision ladder.
struct LadderKey {
    std::string model;
    std::string hardware;
    int batch_size = 1;
    std::string task;

    auto operator<=>(const LadderKey&) const = default;
};

LadderKey ladder_key(const ConfigId& id);
std::string to_string(const LadderKey& key);

struct PowerSample {
    double t_offset_s = 0.0;
    double watts = 0.0;

    bool operator==(const PowerSample&) const = default;
};

/// Sensor trace, e.g. NVML polling. Offsets are relative to run start.
struct SampledTrace {
    std::vector<PowerSample> samples;

    bool operator==(const SampledTrace&) const = default;
};

/// Board power anchor: the GPU is treated as fully committed for the run.
struct TdpAnchor {
    double tdp_watts = 0.0;

    bool operator==(const TdpAnchor&) const = default;
};

/// Energy per query measured elsewhere and passed through unchanged.
struct DirectJoules {
    double joules_per_query = 0.0;

    bool operator==(const DirectJoules&) const = default;
};

using PowerEvidence = std::variant<SampledTrace, TdpAnchor, DirectJoules>;

/// Schema tag of a power evidence variant: "trace", "tdp" or "joules".
const char* power_kind(const PowerEvidence& power);

struct TelemetryRecord {
    ConfigId config;
    std::int64_t total_tokens = 0;
    double duration_s = 0.0;
    std::int64_t sample_count = 1;
    double accuracy = 0.0;
    double peak_vram_gb = 0.0;
    PowerEvidence power = TdpAnchor{};
    // Absent means same-grid mode: carbon intensity cancels in every ratio.
    std::optional<double> grid_gco2_per_kwh;
    std::string source;
    std::vector<std::string> warnings;

    bool operator==(const TelemetryRecord&) const = default;
};

/// Throws ValidationError naming the first violated field.
void validate(const TelemetryRecord& record);

struct Throughput {
    double tokens_per_second = 0.0;
    bool zero_tokens = false;
};

/// total_tokens / duration_s. A record with no tokens yields 0 with the
/// zero_tokens flag set.
Throughput derived_tps(const TelemetryRecord& record);

}  // namespace qtrap
