#include "qtrap/amortization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "nnls.hpp"
#include "qtrap/error.hpp"

namespace qtrap {

namespace {

void check_evaluable(const EnergyParams& p) {
    if (!(p.gamma_static >= 0.0) || !(p.alpha_mem >= 0.0) || !std::isfinite(p.gamma_static) ||
        !std::isfinite(p.alpha_mem)) {
        throw AnalysisError("energy parameters gamma_static and alpha_mem must be finite and >= 0");
    }
    if (!(p.hops >= 0.0) || !std::isfinite(p.hops)) throw AnalysisError("hop count K must be >= 0");
    if (p.native_bits <= 0) throw AnalysisError("native precision must be positive");
    for (const auto& [bits, phi] : p.phi_by_precision) {
        if (!(phi >= 0.0) || !std::isfinite(phi)) {
            throw AnalysisError("phi(" + std::to_string(bits) + ") must be finite and >= 0");
        }
        if (bits == p.native_bits && phi != 0.0) throw AnalysisError("phi at the native precision must be 0");
    }
}

}  // namespace

double EnergyParams::phi(int bits) const {
    if (bits == native_bits) return 0.0;
    auto it = phi_by_precision.find(bits);
    if (it == phi_by_precision.end()) {
        throw AnalysisError("no casting overhead phi for " + std::to_string(bits) +
                            "-bit precision (phi is never interpolated)");
    }
    return it->second;
}

void EnergyParams::validate() const {
    check_evaluable(*this);
    std::map<int, double> table = phi_by_precision;
    table[native_bits] = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& [bits, phi] : table) {
        if (phi > prev) {
            throw AnalysisError("phi must be non-increasing in precision (violated at " +
                                std::to_string(bits) + " bits)");
        }
        prev = phi;
    }
}

double energy_eval(const EnergyParams& params, int bits, double batch) {
    check_evaluable(params);
    if (!(batch > 0.0) || !std::isfinite(batch)) throw AnalysisError("batch size must be > 0");
    if (bits <= 0) throw AnalysisError("precision must be positive");
    return params.hops * (params.gamma_static + params.alpha_mem * bits / batch + params.phi(bits));
}

double quantization_energy_penalty(const EnergyParams& params, int bits, double batch) {
    return energy_eval(params, bits, batch) - energy_eval(params, params.native_bits, batch);
}

int CriticalBatch::smallest_integer_above() const {
    if (native_support) return 1;
    return static_cast<int>(std::floor(batch)) + 1;
}

CriticalBatch critical_batch(const EnergyParams& params, int bits) {
    check_evaluable(params);
    if (bits >= params.native_bits) {
        throw AnalysisError("critical batch needs p < native precision (" + std::to_string(bits) +
                            " >= " + std::to_string(params.native_bits) + ")");
    }
    const double phi = params.phi(bits);
    if (phi == 0.0) return CriticalBatch{0.0, true};
    return CriticalBatch{params.alpha_mem * (params.native_bits - bits) / phi, false};
}

double energy_gradient_p(const EnergyParams& params, int bits, double batch) {
    check_evaluable(params);
    if (!(batch > 0.0)) throw AnalysisError("batch size must be > 0");
    std::set<int> grid;
    for (const auto& [b, phi] : params.phi_by_precision) {
        (void)phi;
        grid.insert(b);
    }
    grid.insert(params.native_bits);
    auto it = grid.find(bits);
    if (it == grid.end()) throw AnalysisError("no phi entry for " + std::to_string(bits) + "-bit precision");

    int other;
    if (auto next = std::next(it); next != grid.end()) {
        other = *next;
    } else if (it != grid.begin()) {
        other = *std::prev(it);
    } else {
        throw AnalysisError("phi gradient needs an adjacent precision");
    }
    const double dphi_dp = (params.phi(other) - params.phi(bits)) / static_cast<double>(other - bits);
    return params.hops * (params.alpha_mem / batch + dphi_dp);
}

const char* to_string(FitCondition c) { return c == FitCondition::ok ? "ok" : "underdetermined"; }

namespace {

struct Observation {
    int bits;
    int batch;
    double joules;
};

// Columns: gamma, alpha, then one indicator per non-native precision.
Eigen::MatrixXd design_matrix(const std::vector<std::pair<int, int>>& points,
                              const std::vector<int>& phi_bits) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(points.size()),
                                              static_cast<Eigen::Index>(2 + phi_bits.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto [bits, batch] = points[i];
        const auto r = static_cast<Eigen::Index>(i);
        a(r, 0) = 1.0;
        a(r, 1) = static_cast<double>(bits) / batch;
        for (std::size_t k = 0; k < phi_bits.size(); ++k) {
            if (phi_bits[k] == bits) a(r, static_cast<Eigen::Index>(2 + k)) = 1.0;
        }
    }
    return a;
}

std::vector<int> phi_precisions(const std::set<int>& precisions, int native_bits) {
    std::vector<int> out;
    for (int p : precisions) {
        if (p != native_bits) out.push_back(p);
    }
    return out;
}

}  // namespace

FitCoverage assess_fit_coverage(std::span<const TelemetryRecord> records, int native_bits) {
    std::set<std::pair<int, int>> distinct;
    std::set<int> precisions, batches;
    for (const auto& r : records) {
        distinct.emplace(r.config.precision_bits, r.config.batch_size);
        precisions.insert(r.config.precision_bits);
        batches.insert(r.config.batch_size);
    }
    FitCoverage c;
    c.precisions.assign(precisions.begin(), precisions.end());
    c.batches.assign(batches.begin(), batches.end());
    const auto phi_bits = phi_precisions(precisions, native_bits);
    c.free_parameters = 2 + phi_bits.size();
    c.distinct_points = distinct.size();

    if (!distinct.empty()) {
        const std::vector<std::pair<int, int>> pts(distinct.begin(), distinct.end());
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design_matrix(pts, phi_bits));
        c.rank = static_cast<std::size_t>(qr.rank());
    }

    std::vector<std::string> missing;
    if (batches.size() < 2) missing.push_back("a single batch size (alpha is not separable from gamma and phi)");
    if (!precisions.count(native_bits)) {
        missing.push_back("no native " + std::to_string(native_bits) +
                          "-bit rung (gamma is not separable from phi)");
    }
    if (precisions.size() < 2) missing.push_back("a single precision");
    if (c.distinct_points < c.free_parameters) {
        missing.push_back(std::to_string(c.distinct_points) + " distinct (precision, batch) points for " +
                          std::to_string(c.free_parameters) + " parameters");
    }
    if (c.rank < c.free_parameters && missing.empty()) {
        missing.push_back("design rank " + std::to_string(c.rank) + " below " +
                          std::to_string(c.free_parameters) + " parameters");
    }
    if (!missing.empty()) {
        c.condition = FitCondition::underdetermined;
        c.explanation = "underdetermined grid: ";
        for (std::size_t i = 0; i < missing.size(); ++i) {
            if (i) c.explanation += "; ";
            c.explanation += missing[i];
        }
    }
    return c;
}

EnergyModelFit fit_energy_model(std::span<const TelemetryRecord> records, const FitOptions& options) {
    if (records.empty()) throw AnalysisError("energy fit needs at least one record");
    const auto& first = records.front().config;
    for (const auto& r : records) {
        if (r.config.model != first.model || r.config.hardware != first.hardware || r.config.task != first.task) {
            throw AnalysisError("energy fit requires a shared (model, hardware, task); got " +
                                to_string(first) + " and " + to_string(r.config));
        }
    }

    const FitCoverage coverage = assess_fit_coverage(records, options.native_bits);
    if (coverage.condition == FitCondition::underdetermined) {
        throw AnalysisError("energy fit refused: " + coverage.explanation);
    }

    EnergyModelFit fit;
    double hops = 0.0;
    if (options.hops) {
        hops = *options.hops;
        if (!(hops > 0.0)) throw AnalysisError("hop count K must be > 0");
    } else {
        for (const auto& r : records) hops += static_cast<double>(r.total_tokens) / r.sample_count;
        hops /= static_cast<double>(records.size());
        if (!(hops > 0.0)) throw AnalysisError("cannot infer hop count K: no tokens recorded");
        fit.hops_assumed = true;
    }

    std::set<int> precisions;
    std::vector<std::pair<int, int>> points;
    Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        precisions.insert(r.config.precision_bits);
        points.emplace_back(r.config.precision_bits, r.config.batch_size);
        y[static_cast<Eigen::Index>(i)] = energy_per_query(r, options.rule).joules / hops;
    }
    const auto phi_bits = phi_precisions(precisions, options.native_bits);
    Eigen::MatrixXd a = design_matrix(points, phi_bits);

    // Unit-norm columns; positive scaling preserves the sign constraints.
    Eigen::VectorXd scale = a.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < a.cols(); ++j) a.col(j) /= scale[j];
    const auto solved = detail::nnls(a, y);
    if (!solved.converged) throw AnalysisError("energy fit did not converge");
    const Eigen::VectorXd x = solved.x.cwiseQuotient(scale);

    fit.params.gamma_static = x[0];
    fit.params.alpha_mem = x[1];
    for (std::size_t k = 0; k < phi_bits.size(); ++k) {
        fit.params.phi_by_precision[phi_bits[k]] = x[static_cast<Eigen::Index>(2 + k)];
    }
    fit.params.native_bits = options.native_bits;
    fit.params.hops = hops;

    double sq = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const double predicted = energy_eval(fit.params, points[i].first, points[i].second);
        const double observed = y[static_cast<Eigen::Index>(i)] * hops;
        sq += (predicted - observed) * (predicted - observed);
    }
    fit.residual_rms = std::sqrt(sq / static_cast<double>(records.size()));
    fit.n_points = records.size();
    fit.distinct_points = coverage.distinct_points;
    fit.condition = FitCondition::ok;
    try {
        fit.params.validate();
    } catch (const AnalysisError&) {
        fit.phi_monotone = false;
    }
    return fit;
}

}  // namespace qtrap
