#pragma once

// Trust / economic / energy pillars of one configuration, each normalized
// against an anchor configuration (usually the full-precision rung).

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qtrap/telemetry.hpp"

namespace qtrap {

/// Canonical order is (trust, econ, energy) everywhere.
struct SustainabilityVector {
    double trust = 0.0;
    double econ = 0.0;
    double energy = 0.0;

    bool operator==(const SustainabilityVector&) const = default;
};

// ---------------------------------------------------------------- trust

/// Scalar task metric G(m) >= 0 extracted from a record.
using TrustOperator = std::function<double(const TelemetryRecord&)>;

/// Named trust operators. The builtin registry holds only "accuracy";
/// callers wanting other operators build their own registry.
class TrustOperatorRegistry {
public:
    TrustOperatorRegistry();

    void add(const std::string& name, TrustOperator op);
    bool contains(const std::string& name) const;
    const TrustOperator& get(const std::string& name) const;

    static const TrustOperatorRegistry& builtin();

private:
    std::map<std::string, TrustOperator> ops_;
};

struct TrustSpec {
    std::string aggregation = "accuracy";
    std::string task_topology;
};

struct TrustResult {
    double value = 0.0;      // clamped to [0, 1]
    double raw_ratio = 0.0;  // G(record) / G(anchor) before clamping
    bool clamped = false;
};

TrustResult trust_index(const TelemetryRecord& record, const TelemetryRecord& anchor,
                        const TrustSpec& spec = {},
                        const TrustOperatorRegistry& registry = TrustOperatorRegistry::builtin());

// ---------------------------------------------------------------- economic

struct EconWeights {
    double alpha_efficiency = 0.5;
};

struct EconResult {
    double value = 0.0;  // unbounded above: a quantized rung may beat its anchor
    double eta = 0.0;    // throughput gain TPS / TPS_ref
    double rho = 0.0;    // residency gain V_ref / V_peak
};

/// Weighted harmonic mean (alpha/eta + (1-alpha)/rho)^-1.
double weighted_harmonic_mean(double eta, double rho, double alpha);

EconResult economic_index(const TelemetryRecord& record, const TelemetryRecord& anchor,
                          const EconWeights& weights = {});

// ---------------------------------------------------------------- energy

enum class IntegrationRule { trapezoid, rectangle };

struct EnergyPerQuery {
    double joules = 0.0;
    bool coverage_warning = false;  // trace covers < 95% of the run duration
    double covered_s = 0.0;
};

/// Joules per query from whichever power evidence the record carries.
/// Traces are integrated over [0, duration_s]; rectangle holds each sample
/// for the sampling interval.
EnergyPerQuery energy_per_query(const TelemetryRecord& record,
                                IntegrationRule rule = IntegrationRule::trapezoid);

enum class EnergyMode { same_grid_linear, cross_grid_log };

const char* to_string(EnergyMode mode);

struct EnergyResult {
    double joules_per_query = 0.0;
    double anchor_joules_per_query = 0.0;
    // Carbon-adjusted energy score: J/query x kgCO2e/kWh. Set only in log mode.
    std::optional<double> caes;
    std::optional<double> anchor_caes;
    double s_si = 0.0;
    EnergyMode mode = EnergyMode::same_grid_linear;
    bool degenerate = false;  // record energy was zero
    bool coverage_warning = false;
};

/// Same-grid (either record lacks a carbon intensity): min(1, E_ref / E).
/// Cross-grid: min(1, log(1 + chi_ref) / log(1 + chi)).
EnergyResult energy_index(const TelemetryRecord& record, const TelemetryRecord& anchor,
                          IntegrationRule rule = IntegrationRule::trapezoid);

// ---------------------------------------------------------------- all three

struct PillarOptions {
    TrustSpec trust;
    EconWeights econ;
    IntegrationRule rule = IntegrationRule::trapezoid;
    const TrustOperatorRegistry* registry = nullptr;  // null means builtin
};

struct PillarSet {
    TrustResult trust;
    EconResult econ;
    EnergyResult energy;

    SustainabilityVector vector() const { return {trust.value, econ.value, energy.s_si}; }
    std::vector<std::string> warnings() const;
};

PillarSet compute_pillars(const TelemetryRecord& record, const TelemetryRecord& anchor,
                          const PillarOptions& options = {});

}  // namespace qtrap
