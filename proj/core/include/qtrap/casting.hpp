#pragma once

#include "qtrap/telemetry.hpp"

namespace qtrap {

/// Seconds per atomic hop (one generated token): 1 / TPS.
double latency_per_hop(double tokens_per_second);

/// Per-hop latency split under the assumption that the reference rung pays
/// no casting cost. tau_cast goes negative when the quantized rung outruns
/// the reference; that is reported, not clamped.
struct HopLatency {
    double tau_total_s = 0.0;
    double tau_comp_s = 0.0;
    double tau_cast_s = 0.0;
    bool negative_cast = false;
};

enum class CastingDominance {
    casting_dominant,  // cor > 1
    subordinate,       // 0 <= cor <= 1
    accelerated,       // cor < 0
};

const char* to_string(CastingDominance d);
CastingDominance classify_cor(double cor);

/// Casting overhead ratio tau_cast / tau_comp.
struct CorEstimate {
    double cor = 0.0;
    CastingDominance dominance = CastingDominance::subordinate;
    HopLatency latency;
};

/// Throughput-inferred COR = TPS_ref / TPS_p - 1. Both records must share
/// (model, hardware, batch, task); anything else throws AnalysisError.
CorEstimate estimate_cor(const TelemetryRecord& record, const TelemetryRecord& anchor);

/// Per-batch COR when casting is paid once per batch and compute scales
/// with batch: a_cast / (a_comp * B).
double cor_at_batch(double a_cast_s, double a_comp_s, double batch);

}  // namespace qtrap
