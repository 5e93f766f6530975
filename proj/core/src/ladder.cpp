#include "qtrap/ladder.hpp"

#include "qtrap/error.hpp"

namespace qtrap {

const TelemetryRecord& PrecisionLadder::anchor() const {
    auto it = rungs.find(reference_bits);
    if (it == rungs.end()) {
        throw AnalysisError("ladder " + to_string(key) + " has no " + std::to_string(reference_bits) +
                            "-bit reference rung");
    }
    return it->second;
}

const char* to_string(UnladderedReason reason) {
    switch (reason) {
        case UnladderedReason::missing_reference: return "missing_reference";
        case UnladderedReason::single_rung: return "single_rung";
    }
    return "unknown";
}

LadderSet build_ladders(std::span<const TelemetryRecord> records, int reference_bits) {
    if (reference_bits <= 0) throw AnalysisError("reference precision must be a positive bit-width");

    std::map<LadderKey, std::map<int, TelemetryRecord>> groups;
    for (const auto& r : records) {
        auto& group = groups[ladder_key(r.config)];
        if (!group.emplace(r.config.precision_bits, r).second) {
            throw ValidationError("ambiguous telemetry: configuration " + to_string(r.config) +
                                  " appears more than once");
        }
    }

    LadderSet out;
    for (auto& [key, rungs] : groups) {
        const bool anchored = rungs.count(reference_bits) > 0;
        if (anchored && rungs.size() >= 2) {
            out.ladders.push_back(PrecisionLadder{key, std::move(rungs), reference_bits});
            continue;
        }
        UnladderedGroup g;
        g.key = key;
        g.reason = anchored ? UnladderedReason::single_rung : UnladderedReason::missing_reference;
        for (auto& [bits, rec] : rungs) {
            (void)bits;
            g.records.push_back(std::move(rec));
        }
        out.unanchored.push_back(std::move(g));
    }
    return out;
}

}  // namespace qtrap
