#include "qtrap/telemetry.hpp"

#include <cmath>

#include "qtrap/error.hpp"

namespace qtrap {

std::string to_string(const ConfigId& id) {
    return id.model + "/" + id.hardware + "/" + id.task + "/p" + std::to_string(id.precision_bits) +
           "/B" + std::to_string(id.batch_size);
}

LadderKey ladder_key(const ConfigId& id) {
    return LadderKey{id.model, id.hardware, id.batch_size, id.task};
}

std::string to_string(const LadderKey& key) {
    return key.model + "/" + key.hardware + "/" + key.task + "/B" + std::to_string(key.batch_size);
}

const char* power_kind(const PowerEvidence& power) {
    struct Kind {
        const char* operator()(const SampledTrace&) const { return "trace"; }
        const char* operator()(const TdpAnchor&) const { return "tdp"; }
        const char* operator()(const DirectJoules&) const { return "joules"; }
    };
    return std::visit(Kind{}, power);
}

namespace {

void require(bool ok, const char* field, const std::string& message) {
    if (!ok) throw ValidationError(message, field);
}

void validate_power(const PowerEvidence& power) {
    if (const auto* trace = std::get_if<SampledTrace>(&power)) {
        require(!trace->samples.empty(), "power.samples", "trace must contain at least one sample");
        for (std::size_t i = 0; i < trace->samples.size(); ++i) {
            const auto& s = trace->samples[i];
            require(std::isfinite(s.t_offset_s) && std::isfinite(s.watts), "power.samples",
                    "non-finite sample at index " + std::to_string(i));
            require(s.watts >= 0.0, "power.samples",
                    "negative watts at index " + std::to_string(i));
            if (i > 0) {
                require(s.t_offset_s > trace->samples[i - 1].t_offset_s, "power.samples",
                        "timestamps must be strictly increasing (index " + std::to_string(i) + ")");
            }
        }
    } else if (const auto* tdp = std::get_if<TdpAnchor>(&power)) {
        require(std::isfinite(tdp->tdp_watts) && tdp->tdp_watts > 0.0, "power.tdp_watts",
                "must be finite and > 0");
    } else if (const auto* joules = std::get_if<DirectJoules>(&power)) {
        require(std::isfinite(joules->joules_per_query) && joules->joules_per_query >= 0.0,
                "power.joules_per_query", "must be finite and >= 0");
    }
}

}  // namespace

void validate(const TelemetryRecord& r) {
    require(!r.config.model.empty(), "model", "must be non-empty");
    require(!r.config.hardware.empty(), "hardware", "must be non-empty");
    require(!r.config.task.empty(), "task", "must be non-empty");
    require(r.config.precision_bits > 0, "precision_bits", "must be a positive integer");
    require(r.config.batch_size >= 1, "batch_size", "must be >= 1");
    require(r.total_tokens >= 0, "total_tokens", "must be >= 0");
    require(std::isfinite(r.duration_s) && r.duration_s > 0.0, "duration_s",
            "must be finite and > 0");
    require(r.sample_count >= 1, "sample_count", "must be >= 1");
    require(std::isfinite(r.accuracy) && r.accuracy >= 0.0 && r.accuracy <= 1.0, "accuracy",
            "must lie in [0, 1]");
    require(std::isfinite(r.peak_vram_gb) && r.peak_vram_gb > 0.0, "peak_vram_gb",
            "must be finite and > 0");
    if (r.grid_gco2_per_kwh) {
        require(std::isfinite(*r.grid_gco2_per_kwh) && *r.grid_gco2_per_kwh >= 0.0,
                "grid_gco2_per_kwh", "must be finite and >= 0");
    }
    validate_power(r.power);
}

Throughput derived_tps(const TelemetryRecord& record) {
    if (!(record.duration_s > 0.0)) {
        throw ValidationError("must be > 0 to derive throughput", "duration_s");
    }
    if (record.total_tokens == 0) return Throughput{0.0, true};
    return Throughput{static_cast<double>(record.total_tokens) / record.duration_s, false};
}

}  // namespace qtrap
