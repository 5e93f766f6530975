#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qtrap/ladder.hpp"
#include "qtrap/pillars.hpp"

namespace qtrap {

enum class Policy { linear, geometric };

const char* to_string(Policy policy);
Policy parse_policy(const std::string& name);

struct PolicyWeights {
    double trust = 0.34;
    double econ = 0.33;
    double energy = 0.33;
    Policy policy = Policy::linear;

    /// Throws AnalysisError unless all weights are >= 0 and sum to 1 (1e-9).
    void validate() const;
};

struct AggregateResult {
    double si = 0.0;
    bool bottleneck = false;  // geometric policy hit a zero pillar
};

/// linear: w . v. geometric: prod v_i^w_i, which is 0 (flagged) when any
/// pillar is 0. Negative pillars are rejected.
AggregateResult aggregate_si(const SustainabilityVector& v, const PolicyWeights& w);

/// a >= b componentwise with at least one strict inequality.
bool pareto_dominates(const SustainabilityVector& a, const SustainabilityVector& b);

/// (anchor_si - rung_si) / anchor_si.
double si_deficit(double anchor_si, double rung_si);

enum class GradientSign { divergent, conforming, mixed };

const char* to_string(GradientSign sign);

/// |delta SI| below this is a tie and never counts toward divergence.
inline constexpr double kSiTieTolerance = 1e-9;

struct RungScore {
    int bits = 0;
    PillarSet pillars;
    AggregateResult si;
    double si_linear = 0.0;
    double si_geometric = 0.0;
    // (SI(ref) - SI(p)) / (ref - p): slope of the secant to the anchor.
    // Absent on the reference rung.
    std::optional<double> slope_to_anchor;
};

struct RungFailure {
    int bits = 0;
    std::string reason;
};

struct TrapVerdict {
    LadderKey ladder_key;
    int reference_bits = 16;
    std::vector<RungScore> rungs;  // ascending precision, computable rungs only
    std::map<int, double> si_by_precision;
    // SI(p_{i+1}) - SI(p_i) over ascending precision.
    std::vector<double> adjacent_differences;
    bool monotone_in_precision = false;  // every adjacent difference > tolerance
    GradientSign gradient_sign = GradientSign::conforming;
    std::vector<int> dominated_rungs;  // Pareto-dominated by the anchor vector
    std::vector<RungFailure> failed;

    bool partial() const { return !failed.empty(); }
};

/// Scores every rung against the ladder anchor and classifies the SI
/// gradient along precision. The sign is read from each rung's secant to
/// the anchor: divergent when restoring any rung to the reference precision
/// raises SI, mixed when some rungs rise and others fall, conforming
/// otherwise (ties count as non-divergent).
TrapVerdict detect_trap(const PrecisionLadder& ladder, const PillarOptions& pillar_options = {},
                        const PolicyWeights& weights = {});

}  // namespace qtrap
