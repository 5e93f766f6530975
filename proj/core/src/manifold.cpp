#include "qtrap/manifold.hpp"

#include <cmath>

#include "qtrap/error.hpp"

namespace qtrap {

const char* to_string(Policy policy) { return policy == Policy::linear ? "linear" : "geometric"; }

Policy parse_policy(const std::string& name) {
    if (name == "linear") return Policy::linear;
    if (name == "geometric") return Policy::geometric;
    throw AnalysisError("unknown policy '" + name + "' (expected linear or geometric)");
}

void PolicyWeights::validate() const {
    for (double w : {trust, econ, energy}) {
        if (!std::isfinite(w) || w < 0.0) throw AnalysisError("policy weights must be finite and >= 0");
    }
    if (std::abs(trust + econ + energy - 1.0) > 1e-9) {
        throw AnalysisError("policy weights must sum to 1");
    }
}

AggregateResult aggregate_si(const SustainabilityVector& v, const PolicyWeights& w) {
    w.validate();
    const double comps[3] = {v.trust, v.econ, v.energy};
    const double weights[3] = {w.trust, w.econ, w.energy};
    for (double c : comps) {
        if (!std::isfinite(c)) throw AnalysisError("sustainability vector must be finite");
        if (c < 0.0) throw AnalysisError("sustainability vector has a negative pillar");
    }

    AggregateResult out;
    if (w.policy == Policy::linear) {
        for (int i = 0; i < 3; ++i) out.si += weights[i] * comps[i];
        return out;
    }
    for (double c : comps) {
        if (c == 0.0) {
            out.bottleneck = true;
            return out;
        }
    }
    // exp(sum w log v) keeps the product stable for tiny pillars.
    double log_si = 0.0;
    for (int i = 0; i < 3; ++i) log_si += weights[i] * std::log(comps[i]);
    out.si = std::exp(log_si);
    return out;
}

bool pareto_dominates(const SustainabilityVector& a, const SustainabilityVector& b) {
    const double av[3] = {a.trust, a.econ, a.energy};
    const double bv[3] = {b.trust, b.econ, b.energy};
    bool strict = false;
    for (int i = 0; i < 3; ++i) {
        if (!std::isfinite(av[i]) || !std::isfinite(bv[i])) {
            throw AnalysisError("Pareto comparison requires finite vectors");
        }
        if (av[i] < bv[i]) return false;
        if (av[i] > bv[i]) strict = true;
    }
    return strict;
}

double si_deficit(double anchor_si, double rung_si) {
    if (!(anchor_si > 0.0)) throw AnalysisError("SI deficit needs a positive anchor SI");
    return (anchor_si - rung_si) / anchor_si;
}

const char* to_string(GradientSign sign) {
    switch (sign) {
        case GradientSign::divergent: return "divergent";
        case GradientSign::conforming: return "conforming";
        case GradientSign::mixed: return "mixed";
    }
    return "unknown";
}

TrapVerdict detect_trap(const PrecisionLadder& ladder, const PillarOptions& pillar_options,
                        const PolicyWeights& weights) {
    weights.validate();
    if (ladder.rungs.size() < 2) throw AnalysisError("ladder " + to_string(ladder.key) + " has fewer than 2 rungs");

    TrapVerdict v;
    v.ladder_key = ladder.key;
    v.reference_bits = ladder.reference_bits;
    const TelemetryRecord& anchor = ladder.anchor();

    PolicyWeights linear = weights;
    linear.policy = Policy::linear;
    PolicyWeights geometric = weights;
    geometric.policy = Policy::geometric;

    for (const auto& [bits, rec] : ladder.rungs) {
        try {
            RungScore s;
            s.bits = bits;
            s.pillars = compute_pillars(rec, anchor, pillar_options);
            const auto vec = s.pillars.vector();
            s.si = aggregate_si(vec, weights);
            s.si_linear = aggregate_si(vec, linear).si;
            s.si_geometric = aggregate_si(vec, geometric).si;
            v.rungs.push_back(std::move(s));
        } catch (const Error& e) {
            if (bits == ladder.reference_bits) throw;
            v.failed.push_back(RungFailure{bits, e.what()});
        }
    }

    const RungScore* ref = nullptr;
    for (const auto& r : v.rungs) {
        if (r.bits == ladder.reference_bits) ref = &r;
        v.si_by_precision[r.bits] = r.si.si;
    }

    for (std::size_t i = 0; i + 1 < v.rungs.size(); ++i) {
        v.adjacent_differences.push_back(v.rungs[i + 1].si.si - v.rungs[i].si.si);
    }
    v.monotone_in_precision = !v.adjacent_differences.empty();
    for (double d : v.adjacent_differences) {
        if (!(d > kSiTieTolerance)) v.monotone_in_precision = false;
    }

    int rising = 0, falling = 0, compared = 0;
    for (auto& r : v.rungs) {
        if (r.bits == ladder.reference_bits) continue;
        const double delta = ref->si.si - r.si.si;
        // Orient by precision so rungs above the reference read the same way.
        const double dp = static_cast<double>(ladder.reference_bits - r.bits);
        r.slope_to_anchor = delta / dp;
        ++compared;
        const double oriented = dp > 0 ? delta : -delta;
        if (oriented > kSiTieTolerance) ++rising;
        else if (oriented < -kSiTieTolerance) ++falling;
        if (pareto_dominates(ref->pillars.vector(), r.pillars.vector())) v.dominated_rungs.push_back(r.bits);
    }
    if (compared > 0 && rising == compared) {
        v.gradient_sign = GradientSign::divergent;
    } else if (rising > 0 && falling > 0) {
        v.gradient_sign = GradientSign::mixed;
    } else {
        v.gradient_sign = GradientSign::conforming;
    }
    return v;
}

}  // namespace qtrap
