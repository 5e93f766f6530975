#include "qtrap/pillars.hpp"

#include <algorithm>
#include <cmath>

#include "qtrap/error.hpp"

namespace qtrap {

TrustOperatorRegistry::TrustOperatorRegistry() {
    ops_["accuracy"] = [](const TelemetryRecord& r) { return r.accuracy; };
}

void TrustOperatorRegistry::add(const std::string& name, TrustOperator op) {
    if (name.empty() || !op) throw AnalysisError("trust operator needs a name and a callable");
    ops_[name] = std::move(op);
}

bool TrustOperatorRegistry::contains(const std::string& name) const { return ops_.count(name) > 0; }

const TrustOperator& TrustOperatorRegistry::get(const std::string& name) const {
    auto it = ops_.find(name);
    if (it == ops_.end()) throw AnalysisError("unknown trust operator '" + name + "'");
    return it->second;
}

const TrustOperatorRegistry& TrustOperatorRegistry::builtin() {
    static const TrustOperatorRegistry registry;
    return registry;
}

TrustResult trust_index(const TelemetryRecord& record, const TelemetryRecord& anchor,
                        const TrustSpec& spec, const TrustOperatorRegistry& registry) {
    const auto& g = registry.get(spec.aggregation);
    const double ref = g(anchor);
    const double val = g(record);
    if (!std::isfinite(ref) || ref <= 0.0) {
        throw AnalysisError("trust anchor " + to_string(anchor.config) + " has G = " +
                            std::to_string(ref) + "; ratio undefined");
    }
    if (!std::isfinite(val) || val < 0.0) {
        throw AnalysisError("trust operator returned an invalid value for " + to_string(record.config));
    }
    TrustResult out;
    out.raw_ratio = val / ref;
    out.value = std::clamp(out.raw_ratio, 0.0, 1.0);
    out.clamped = out.value != out.raw_ratio;
    return out;
}

double weighted_harmonic_mean(double eta, double rho, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw AnalysisError("alpha_efficiency must lie in [0, 1]");
    if (!(eta > 0.0)) throw AnalysisError("economic bottleneck: throughput gain is zero");
    if (!(rho > 0.0)) throw AnalysisError("economic bottleneck: residency gain is zero");
    return 1.0 / (alpha / eta + (1.0 - alpha) / rho);
}

EconResult economic_index(const TelemetryRecord& record, const TelemetryRecord& anchor,
                          const EconWeights& weights) {
    const double tps = derived_tps(record).tokens_per_second;
    const double tps_ref = derived_tps(anchor).tokens_per_second;
    if (!(tps > 0.0)) {
        throw AnalysisError("economic bottleneck: zero throughput (TPS) for " + to_string(record.config));
    }
    if (!(tps_ref > 0.0)) {
        throw AnalysisError("economic bottleneck: zero anchor throughput (TPS) for " +
                            to_string(anchor.config));
    }
    if (!(record.peak_vram_gb > 0.0) || !(anchor.peak_vram_gb > 0.0)) {
        throw AnalysisError("economic bottleneck: zero peak VRAM");
    }
    EconResult out;
    out.eta = tps / tps_ref;
    out.rho = anchor.peak_vram_gb / record.peak_vram_gb;
    out.value = weighted_harmonic_mean(out.eta, out.rho, weights.alpha_efficiency);
    return out;
}

namespace {

struct TraceIntegral {
    double joules = 0.0;
    double covered_s = 0.0;
};

TraceIntegral integrate_trace(const SampledTrace& trace, double duration, IntegrationRule rule) {
    const auto& s = trace.samples;
    TraceIntegral out;
    if (s.empty()) return out;
    for (const auto& p : s) {
        if (p.watts < 0.0) throw ValidationError("negative watts in power trace", "power.samples");
    }

    if (rule == IntegrationRule::trapezoid) {
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
            const double t0 = s[i].t_offset_s, t1 = s[i + 1].t_offset_s;
            const double a = std::max(t0, 0.0), b = std::min(t1, duration);
            if (!(a < b)) continue;
            const double slope = (s[i + 1].watts - s[i].watts) / (t1 - t0);
            const double pa = s[i].watts + slope * (a - t0);
            const double pb = s[i].watts + slope * (b - t0);
            out.joules += 0.5 * (pa + pb) * (b - a);
        }
        out.covered_s = std::max(0.0, std::min(s.back().t_offset_s, duration) -
                                          std::max(s.front().t_offset_s, 0.0));
        return out;
    }

    // Rectangle: sample i holds until the next sample; the last sample holds
    // for the previous interval (or to the end of the run if it is alone).
    double covered_end = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double t0 = s[i].t_offset_s;
        double t1;
        if (i + 1 < s.size()) {
            t1 = s[i + 1].t_offset_s;
        } else if (s.size() > 1) {
            t1 = t0 + (t0 - s[i - 1].t_offset_s);
        } else {
            t1 = duration;
        }
        const double a = std::max(t0, 0.0), b = std::min(t1, duration);
        if (!(a < b)) continue;
        out.joules += s[i].watts * (b - a);
        covered_end = b;
    }
    out.covered_s = std::max(0.0, covered_end - std::max(s.front().t_offset_s, 0.0));
    return out;
}

}  // namespace

EnergyPerQuery energy_per_query(const TelemetryRecord& record, IntegrationRule rule) {
    EnergyPerQuery out;
    const double n = static_cast<double>(record.sample_count);
    if (!(n >= 1.0)) throw ValidationError("must be >= 1", "sample_count");

    if (const auto* trace = std::get_if<SampledTrace>(&record.power)) {
        const auto integral = integrate_trace(*trace, record.duration_s, rule);
        out.joules = integral.joules / n;
        out.covered_s = integral.covered_s;
        out.coverage_warning = integral.covered_s < 0.95 * record.duration_s;
    } else if (const auto* tdp = std::get_if<TdpAnchor>(&record.power)) {
        out.joules = tdp->tdp_watts * record.duration_s / n;
        out.covered_s = record.duration_s;
    } else if (const auto* dj = std::get_if<DirectJoules>(&record.power)) {
        out.joules = dj->joules_per_query;
        out.covered_s = record.duration_s;
    }
    return out;
}

const char* to_string(EnergyMode mode) {
    return mode == EnergyMode::same_grid_linear ? "same_grid_linear" : "cross_grid_log";
}

EnergyResult energy_index(const TelemetryRecord& record, const TelemetryRecord& anchor,
                          IntegrationRule rule) {
    const auto e = energy_per_query(record, rule);
    const auto e_ref = energy_per_query(anchor, rule);

    EnergyResult out;
    out.joules_per_query = e.joules;
    out.anchor_joules_per_query = e_ref.joules;
    out.coverage_warning = e.coverage_warning || e_ref.coverage_warning;

    if (!record.grid_gco2_per_kwh || !anchor.grid_gco2_per_kwh) {
        out.mode = EnergyMode::same_grid_linear;
        if (e.joules == 0.0) {
            out.s_si = 1.0;
            out.degenerate = true;
        } else {
            out.s_si = std::min(1.0, e_ref.joules / e.joules);
        }
        return out;
    }

    out.mode = EnergyMode::cross_grid_log;
    const double chi = e.joules * (*record.grid_gco2_per_kwh / 1000.0);
    const double chi_ref = e_ref.joules * (*anchor.grid_gco2_per_kwh / 1000.0);
    out.caes = chi;
    out.anchor_caes = chi_ref;
    if (chi == 0.0) {
        throw AnalysisError("carbon-adjusted energy of " + to_string(record.config) +
                            " is zero; log-ratio denominator vanishes");
    }
    out.s_si = std::min(1.0, std::log1p(chi_ref) / std::log1p(chi));
    return out;
}

std::vector<std::string> PillarSet::warnings() const {
    std::vector<std::string> w;
    if (trust.clamped) w.push_back("trust ratio " + std::to_string(trust.raw_ratio) + " clamped to [0, 1]");
    if (energy.coverage_warning) w.push_back("power trace covers less than 95% of the run");
    if (energy.degenerate) w.push_back("zero energy per query; S_SI set to 1");
    return w;
}

PillarSet compute_pillars(const TelemetryRecord& record, const TelemetryRecord& anchor,
                          const PillarOptions& options) {
    const auto& registry = options.registry ? *options.registry : TrustOperatorRegistry::builtin();
    PillarSet out;
    out.trust = trust_index(record, anchor, options.trust, registry);
    out.econ = economic_index(record, anchor, options.econ);
    out.energy = energy_index(record, anchor, options.rule);
    return out;
}

}  // namespace qtrap
