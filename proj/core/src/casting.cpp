#include "qtrap/casting.hpp"

#include <cmath>

#include "qtrap/error.hpp"

namespace qtrap {

double latency_per_hop(double tokens_per_second) {
    if (!std::isfinite(tokens_per_second) || tokens_per_second <= 0.0) {
        throw AnalysisError("latency per hop needs TPS > 0");
    }
    return 1.0 / tokens_per_second;
}

const char* to_string(CastingDominance d) {
    switch (d) {
        case CastingDominance::casting_dominant: return "casting_dominant";
        case CastingDominance::subordinate: return "subordinate";
        case CastingDominance::accelerated: return "accelerated";
    }
    return "unknown";
}

CastingDominance classify_cor(double cor) {
    if (std::isnan(cor)) throw AnalysisError("COR is NaN");
    if (cor > 1.0) return CastingDominance::casting_dominant;
    if (cor < 0.0) return CastingDominance::accelerated;
    return CastingDominance::subordinate;
}

CorEstimate estimate_cor(const TelemetryRecord& record, const TelemetryRecord& anchor) {
    if (ladder_key(record.config) != ladder_key(anchor.config)) {
        throw AnalysisError("COR requires a shared (model, hardware, batch, task) key; got " +
                            to_string(record.config) + " vs " + to_string(anchor.config));
    }
    const double tps = derived_tps(record).tokens_per_second;
    const double tps_ref = derived_tps(anchor).tokens_per_second;
    if (!(tps > 0.0) || !(tps_ref > 0.0)) throw AnalysisError("COR needs TPS > 0 on both rungs");

    CorEstimate out;
    out.cor = tps_ref / tps - 1.0;
    out.dominance = classify_cor(out.cor);
    out.latency.tau_total_s = latency_per_hop(tps);
    out.latency.tau_comp_s = latency_per_hop(tps_ref);
    out.latency.tau_cast_s = out.latency.tau_total_s - out.latency.tau_comp_s;
    out.latency.negative_cast = out.latency.tau_cast_s < 0.0;
    return out;
}

double cor_at_batch(double a_cast_s, double a_comp_s, double batch) {
    if (!(a_comp_s > 0.0)) throw AnalysisError("a_comp must be > 0");
    if (!(a_cast_s >= 0.0)) throw AnalysisError("a_cast must be >= 0");
    if (!(batch >= 1.0)) throw AnalysisError("batch size must be >= 1");
    return a_cast_s / (a_comp_s * batch);
}

}  // namespace qtrap
