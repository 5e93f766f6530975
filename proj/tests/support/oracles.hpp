#pragma once

// Test-only reference implementations. None of these call into qtrap
// numerics; they recompute the quantities the slow, obvious way.

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qtrap/simulator.hpp"
#include "qtrap/telemetry.hpp"

namespace oracle {

// Dense midpoint quadrature of the piecewise-linear interpolant of
// (t, watts) over [max(0, t_first), min(duration, t_last)].
double trace_integral(const std::vector<std::pair<double, double>>& samples, double duration,
                      int subdivisions = 200000);

struct NnlsSolution {
    std::vector<double> x;
    double residual_norm = 0.0;
};

// Exhaustive search over every passive set: solve the unconstrained least
// squares problem on the set's columns (Gaussian elimination on the normal
// equations), keep feasible candidates, return the best.
NnlsSolution brute_force_nnls(const std::vector<std::vector<double>>& a, const std::vector<double>& b);

// K (gamma + alpha p / B + phi)
double energy(double gamma, double alpha, double phi, double hops, int bits, double batch);

// Smallest B in [lo, hi] where the low-bit rung becomes strictly costlier
// than the native rung, located by a log-spaced scan refined by bisection.
double crossover_batch(double alpha, double phi, int bits, int native_bits, double lo = 1e-6, double hi = 1e9);

double weighted_arithmetic(double x, double y, double w);
double weighted_geometric(double x, double y, double w);
double weighted_harmonic(double x, double y, double w);

double relative_error(double got, double want);

qtrap::TelemetryRecord make_record(const std::string& model, const std::string& hardware, int bits, int batch,
                                   const std::string& task, std::int64_t tokens, double duration_s,
                                   std::int64_t samples, double accuracy, double vram_gb,
                                   qtrap::PowerEvidence power);

// Well-posed scenario with B*(8) and B*(4) drawn log-uniformly inside the
// batch grid 1..4096 and casting heavy enough that every ladder below
// min B* is casting-dominant.
qtrap::SimScenario random_scenario(std::mt19937_64& rng, std::uint64_t seed);

}  // namespace oracle
