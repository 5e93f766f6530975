#pragma once

#include <map>
#include <span>
#include <vector>

#include "qtrap/telemetry.hpp"

namespace qtrap {

/// Records sharing (model, hardware, batch, task) and differing only in
/// precision, anchored at reference_bits.
struct PrecisionLadder {
    LadderKey key;
    std::map<int, TelemetryRecord> rungs;
    int reference_bits = 16;

    const TelemetryRecord& anchor() const;
};

enum class UnladderedReason { missing_reference, single_rung };

const char* to_string(UnladderedReason reason);

struct UnladderedGroup {
    LadderKey key;
    std::vector<TelemetryRecord> records;
    UnladderedReason reason = UnladderedReason::missing_reference;
};

struct LadderSet {
    std::vector<PrecisionLadder> ladders;       // ordered by key
    std::vector<UnladderedGroup> unanchored;    // ordered by key
};

/// Partitions records into ladders. Every input record lands in exactly one
/// ladder or one unanchored group. Throws ValidationError when two records
/// share a full ConfigId.
LadderSet build_ladders(std::span<const TelemetryRecord> records, int reference_bits = 16);

}  // namespace qtrap
