#pragma once

// Batch-amortized energy functional
//
//   E(p, B) = K * (gamma_static + alpha_mem * p / B + phi(p)),  phi(native) = 0
//
// with K atomic hops per query. Energy lives here; latency-space quantities
// (a_comp, a_cast) live in casting.hpp. Under constant power P the two are
// bridged by e_x = P * tau_x.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qtrap/pillars.hpp"
#include "qtrap/telemetry.hpp"

namespace qtrap {

struct EnergyParams {
    double gamma_static = 0.0;              // J per hop
    double alpha_mem = 0.0;                 // J per (bit * hop)
    std::map<int, double> phi_by_precision; // J per hop, casting overhead; never interpolated
    int native_bits = 16;
    double hops = 1.0;                      // K

    /// Casting overhead at `bits`; 0 at the native precision. Throws
    /// AnalysisError for a precision absent from the table.
    double phi(int bits) const;

    /// Nonnegativity, phi(native) = 0 and phi non-increasing in precision.
    void validate() const;

    bool operator==(const EnergyParams&) const = default;
};

/// Joules per query. batch must be > 0 (real-valued batches are accepted so
/// the functional can be probed at B*).
double energy_eval(const EnergyParams& params, int bits, double batch);

/// energy_eval(bits, B) - energy_eval(native, B). Positive means the
/// low-bit rung costs more per query than the native rung at this batch.
double quantization_energy_penalty(const EnergyParams& params, int bits, double batch);

struct CriticalBatch {
    double batch = 0.0;          // alpha (native - p) / phi(p)
    bool native_support = false; // phi(p) = 0: the rungs never cross

    /// Smallest integer batch strictly beyond the threshold.
    int smallest_integer_above() const;
};

/// Break-even batch where the casting overhead equals the bandwidth saving
/// alpha (native - p) / B. Requires bits < native_bits.
CriticalBatch critical_batch(const EnergyParams& params, int bits);

/// dE/dp at (bits, batch) with phi differenced forward to the next precision
/// in the table (backward from the top rung). A negative value means adding
/// precision lowers energy per query.
double energy_gradient_p(const EnergyParams& params, int bits, double batch);

enum class FitCondition { ok, underdetermined };

const char* to_string(FitCondition c);

struct FitCoverage {
    FitCondition condition = FitCondition::ok;
    std::size_t distinct_points = 0;
    std::size_t free_parameters = 0;
    std::size_t rank = 0;
    std::vector<int> precisions;
    std::vector<int> batches;
    std::string explanation;
};

struct FitOptions {
    int native_bits = 16;
    std::optional<double> hops;  // default: mean total_tokens / sample_count
    IntegrationRule rule = IntegrationRule::trapezoid;
};

struct EnergyModelFit {
    EnergyParams params;
    double residual_rms = 0.0;  // joules per query
    std::size_t n_points = 0;
    std::size_t distinct_points = 0;
    FitCondition condition = FitCondition::ok;
    bool hops_assumed = false;  // K taken from tokens per query
    bool phi_monotone = true;   // fitted phi is non-increasing in precision
};

/// Checks whether the (precision, batch) grid separates gamma, alpha and
/// every phi(p). Single-batch grids and grids without the native rung are
/// underdetermined.
FitCoverage assess_fit_coverage(std::span<const TelemetryRecord> records, int native_bits);

/// Nonnegative least-squares fit of (gamma, alpha, phi) to observed joules
/// per query, with phi(native) = 0 fixed. Records must share (model,
/// hardware, task). Throws AnalysisError when the grid is underdetermined.
EnergyModelFit fit_energy_model(std::span<const TelemetryRecord> records, const FitOptions& options = {});

}  // namespace qtrap
