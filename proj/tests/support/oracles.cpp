#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {

double trace_integral(const std::vector<std::pair<double, double>>& samples, double duration, int subdivisions) {
    if (samples.size() < 2) return 0.0;
    const double a = std::max(0.0, samples.front().first);
    const double b = std::min(duration, samples.back().first);
    if (!(a < b)) return 0.0;
    auto power_at = [&](double t) {
        for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
            const auto [t0, w0] = samples[i];
            const auto [t1, w1] = samples[i + 1];
            if (t >= t0 && t <= t1) return w0 + (w1 - w0) * (t - t0) / (t1 - t0);
        }
        return 0.0;
    };
    const double h = (b - a) / subdivisions;
    double sum = 0.0;
    for (int i = 0; i < subdivisions; ++i) sum += power_at(a + (i + 0.5) * h);
    return sum * h;
}

namespace {

// Solves m x = v in place by Gaussian elimination with partial pivoting.
bool solve(std::vector<std::vector<double>> m, std::vector<double> v, std::vector<double>& x) {
    const std::size_t n = v.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        }
        if (std::abs(m[piv][c]) < 1e-13) return false;
        std::swap(m[c], m[piv]);
        std::swap(v[c], v[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = m[r][c] / m[c][c];
            for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
            v[r] -= f * v[c];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = v[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= m[i][k] * x[k];
        x[i] = s / m[i][i];
    }
    return true;
}

double residual(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                const std::vector<double>& x) {
    double ss = 0.0;
    for (std::size_t r = 0; r < a.size(); ++r) {
        double ax = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) ax += a[r][c] * x[c];
        ss += (ax - b[r]) * (ax - b[r]);
    }
    return std::sqrt(ss);
}

}  // namespace

NnlsSolution brute_force_nnls(const std::vector<std::vector<double>>& a, const std::vector<double>& b) {
    const std::size_t n = a.empty() ? 0 : a.front().size();
    if (n > 20) throw std::invalid_argument("brute force NNLS is limited to 20 columns");
    NnlsSolution best{std::vector<double>(n, 0.0), residual(a, b, std::vector<double>(n, 0.0))};
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::size_t> cols;
        for (std::size_t c = 0; c < n; ++c) {
            if (mask & (1u << c)) cols.push_back(c);
        }
        const std::size_t k = cols.size();
        std::vector<std::vector<double>> ata(k, std::vector<double>(k, 0.0));
        std::vector<double> atb(k, 0.0);
        for (std::size_t r = 0; r < a.size(); ++r) {
            for (std::size_t i = 0; i < k; ++i) {
                atb[i] += a[r][cols[i]] * b[r];
                for (std::size_t j = 0; j < k; ++j) ata[i][j] += a[r][cols[i]] * a[r][cols[j]];
            }
        }
        std::vector<double> sub;
        if (!solve(ata, atb, sub)) continue;
        if (std::any_of(sub.begin(), sub.end(), [](double v) { return v < 0.0; })) continue;
        std::vector<double> x(n, 0.0);
        for (std::size_t i = 0; i < k; ++i) x[cols[i]] = sub[i];
        const double res = residual(a, b, x);
        if (res < best.residual_norm - 1e-12) best = {x, res};
    }
    return best;
}

double energy(double gamma, double alpha, double phi, double hops, int bits, double batch) {
    return hops * (gamma + alpha * bits / batch + phi);
}

double crossover_batch(double alpha, double phi, int bits, int native_bits, double lo, double hi) {
    auto gap = [&](double b) {
        return energy(0.0, alpha, phi, 1.0, bits, b) - energy(0.0, alpha, 0.0, 1.0, native_bits, b);
    };
    const int steps = 100000;
    const double ratio = std::pow(hi / lo, 1.0 / steps);
    double prev = lo;
    if (gap(prev) > 0.0) return lo;
    for (int i = 1; i <= steps; ++i) {
        const double cur = lo * std::pow(ratio, i);
        if (gap(cur) > 0.0) {
            double l = prev, h = cur;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (l + h);
                (gap(mid) > 0.0 ? h : l) = mid;
            }
            return 0.5 * (l + h);
        }
        prev = cur;
    }
    return std::numeric_limits<double>::infinity();
}

double weighted_arithmetic(double x, double y, double w) { return w * x + (1.0 - w) * y; }
double weighted_geometric(double x, double y, double w) { return std::pow(x, w) * std::pow(y, 1.0 - w); }
double weighted_harmonic(double x, double y, double w) { return 1.0 / (w / x + (1.0 - w) / y); }

double relative_error(double got, double want) {
    if (want == 0.0) return std::abs(got);
    return std::abs(got - want) / std::abs(want);
}

qtrap::TelemetryRecord make_record(const std::string& model, const std::string& hardware, int bits, int batch,
                                   const std::string& task, std::int64_t tokens, double duration_s,
                                   std::int64_t samples, double accuracy, double vram_gb,
                                   qtrap::PowerEvidence power) {
    qtrap::TelemetryRecord r;
    r.config = {model, hardware, bits, batch, task};
    r.total_tokens = tokens;
    r.duration_s = duration_s;
    r.sample_count = samples;
    r.accuracy = accuracy;
    r.peak_vram_gb = vram_gb;
    r.power = std::move(power);
    return r;
}

qtrap::SimScenario random_scenario(std::mt19937_64& rng, std::uint64_t seed) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(rng)); };

    qtrap::SimScenario s;
    s.name = "random-" + std::to_string(seed);
    s.seed = seed;
    s.hops_logical = 16 + static_cast<int>(u(rng) * 240);
    s.n_queries = 100;
    s.precisions = {4, 8, 16};
    for (int b = 1; b <= 4096; b *= 2) s.batches.push_back(b);

    s.energy.gamma_static = log_uniform(0.05, 5.0);
    s.energy.alpha_mem = log_uniform(0.001, 2.0);
    const double b8 = log_uniform(1.5, 2000.0);
    const double b4 = log_uniform(1.5, std::min(1.5 * b8, 2000.0));
    s.energy.phi_by_precision = {{4, s.energy.alpha_mem * 12.0 / b4},
                                 {8, s.energy.alpha_mem * 8.0 / b8},
                                 {16, 0.0}};

    const double a_comp = log_uniform(1e-4, 1e-2);
    const double cast8 = a_comp * 4096.0 * (1.0 + u(rng));
    s.latency = {{4, {a_comp, cast8 * (1.0 + u(rng))}}, {8, {a_comp, cast8}}, {16, {a_comp, 0.0}}};

    const double q16 = 1.0 - log_uniform(1e-5, 1e-3);
    const double q8 = q16 - log_uniform(1e-6, 1e-3);
    const double q4 = q8 - log_uniform(1e-6, 1e-3);
    s.hop_success = {{4, q4}, {8, q8}, {16, q16}};

    const double v16 = log_uniform(1.0, 80.0);
    s.peak_vram_gb = {{4, v16 / (2.0 + 2.0 * u(rng))}, {8, v16 / (1.2 + 0.8 * u(rng))}, {16, v16}};
    return s;
}

}  // namespace oracle
