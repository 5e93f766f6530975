#include "qtrap/theorems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "qtrap/casting.hpp"
#include "qtrap/error.hpp"
#include "qtrap/ladder.hpp"
#include "qtrap/manifold.hpp"

namespace qtrap {

const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::inconclusive: return "inconclusive";
    }
    return "unknown";
}

bool TheoremReport::any_failed() const {
    return std::any_of(checks.begin(), checks.end(), [](const auto& c) { return c.status == CheckStatus::fail; });
}

bool TheoremReport::all_passed() const {
    return !checks.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.status == CheckStatus::pass; });
}

const TheoremCheck& TheoremReport::check(const std::string& id) const {
    for (const auto& c : checks) {
        if (c.id == id) return c;
    }
    throw AnalysisError("no theorem check with id " + id);
}

namespace {

constexpr double kRelTol = 1e-9;

bool close(double a, double b, double rel = kRelTol) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

// Worst status wins, except that a single pass outranks inconclusive parts.
struct Tally {
    bool failed = false;
    bool passed = false;

    void add(CheckStatus s) {
        failed |= s == CheckStatus::fail;
        passed |= s == CheckStatus::pass;
    }
    CheckStatus status() const {
        if (failed) return CheckStatus::fail;
        return passed ? CheckStatus::pass : CheckStatus::inconclusive;
    }
};

using Grid = std::map<std::pair<int, int>, const TelemetryRecord*>;

Grid index_records(const SimOutput& output) {
    Grid grid;
    for (const auto& r : output.records) grid[{r.config.precision_bits, r.config.batch_size}] = &r;
    return grid;
}

double joules(const TelemetryRecord& r) { return std::get<DirectJoules>(r.power).joules_per_query; }

std::vector<int> sorted(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<int> low_bit_rungs(const SimScenario& s) {
    std::vector<int> out;
    for (int p : sorted(s.precisions)) {
        if (p < s.energy.native_bits) out.push_back(p);
    }
    return out;
}

bool has_native(const SimScenario& s) {
    return std::find(s.precisions.begin(), s.precisions.end(), s.energy.native_bits) != s.precisions.end();
}

TheoremCheck check_crossover(const SimScenario& s, const Grid& grid) {
    TheoremCheck c{"T3", "energy crossover at the critical batch", CheckStatus::inconclusive, {}};
    if (s.energy_source != EnergySource::functional) {
        c.details.push_back("energy comes from a TDP anchor; the functional is not observable");
        return c;
    }
    if (s.energy_noise_rel > 0.0) {
        c.details.push_back("energy noise is enabled; an exact crossover is not observable");
        return c;
    }
    if (!has_native(s)) {
        c.details.push_back("native precision is not on the grid");
        return c;
    }
    const EnergyParams params = s.energy_params();
    const std::vector<int> batches = sorted(s.batches);
    const int native = params.native_bits;
    Tally tally;
    for (int p : low_bit_rungs(s)) {
        const CriticalBatch cb = critical_batch(params, p);
        const std::string tag = std::to_string(p) + "-bit";
        if (cb.native_support) {
            c.details.push_back(tag + ": phi = 0, the rungs never cross");
            tally.add(CheckStatus::inconclusive);
            continue;
        }
        const double at_star = quantization_energy_penalty(params, p, cb.batch);
        const double scale = energy_eval(params, native, cb.batch);
        if (std::abs(at_star) > 1e-9 * std::max(1.0, scale)) {
            c.details.push_back(tag + ": functional differs by " + fmt(at_star) + " J at B* = " + fmt(cb.batch));
            tally.add(CheckStatus::fail);
            continue;
        }
        std::optional<std::size_t> first_positive;
        for (std::size_t j = 0; j < batches.size(); ++j) {
            const double ref = joules(*grid.at({native, batches[j]}));
            const double d = joules(*grid.at({p, batches[j]})) - ref;
            if (d > 1e-12 * std::max(1.0, ref)) {
                first_positive = j;
                break;
            }
        }
        const double bstar = cb.batch;
        const auto le = [](double a, double b) { return a <= b * (1.0 + kRelTol); };
        if (!first_positive) {
            if (le(batches.back(), bstar)) {
                c.details.push_back(tag + ": B* = " + fmt(bstar) + " lies beyond the largest batch");
                tally.add(CheckStatus::inconclusive);
            } else {
                c.details.push_back(tag + ": no crossover observed although B* = " + fmt(bstar) + " is on the grid");
                tally.add(CheckStatus::fail);
            }
            continue;
        }
        const std::size_t j = *first_positive;
        if (j == 0) {
            if (bstar < batches.front()) {
                c.details.push_back(tag + ": B* = " + fmt(bstar) + " lies below the smallest batch");
                tally.add(CheckStatus::inconclusive);
            } else {
                c.details.push_back(tag + ": low-bit rung already costlier at B = " +
                                    std::to_string(batches.front()) + " but B* = " + fmt(bstar));
                tally.add(CheckStatus::fail);
            }
            continue;
        }
        const double lo = batches[j - 1];
        const double hi = batches[j];
        if (le(lo, bstar) && le(bstar, hi)) {
            c.details.push_back(tag + ": crossover in [" + fmt(lo) + ", " + fmt(hi) + "], B* = " + fmt(bstar));
            tally.add(CheckStatus::pass);
        } else {
            c.details.push_back(tag + ": crossover in [" + fmt(lo) + ", " + fmt(hi) + "] misses B* = " + fmt(bstar));
            tally.add(CheckStatus::fail);
        }
    }
    c.status = tally.status();
    return c;
}

TheoremCheck check_trap_below_threshold(const SimScenario& s, const SimOutput& output) {
    TheoremCheck c{"T4", "divergent gradient below every critical batch", CheckStatus::inconclusive, {}};
    if (!has_native(s)) {
        c.details.push_back("native precision is not on the grid");
        return c;
    }
    const std::vector<int> low = low_bit_rungs(s);
    if (low.empty()) {
        c.details.push_back("no low-bit rung on the grid");
        return c;
    }
    const double q_native = s.hop_success.at(s.energy.native_bits);
    for (int p : low) {
        if (!(s.hop_success.at(p) < q_native)) {
            c.details.push_back(std::to_string(p) + "-bit hop fidelity is not strictly below native");
            return c;
        }
    }
    double threshold = std::numeric_limits<double>::infinity();
    if (s.energy_source == EnergySource::functional) {
        const EnergyParams params = s.energy_params();
        for (int p : low) {
            const CriticalBatch cb = critical_batch(params, p);
            if (!cb.native_support) threshold = std::min(threshold, cb.batch);
        }
    }
    const LadderSet ladders = build_ladders(output.records, s.energy.native_bits);
    Tally tally;
    for (const auto& ladder : ladders.ladders) {
        const int b = ladder.key.batch_size;
        if (!(b < threshold)) continue;
        const TrapVerdict v = detect_trap(ladder);
        const bool ok = v.gradient_sign == GradientSign::divergent && !v.partial();
        c.details.push_back("B = " + std::to_string(b) + ": " + to_string(v.gradient_sign));
        tally.add(ok ? CheckStatus::pass : CheckStatus::fail);
    }
    if (!tally.passed && !tally.failed) {
        c.details.push_back("no batch on the grid lies below min B* = " + fmt(threshold));
    }
    c.status = tally.status();
    return c;
}

TheoremCheck check_cor_scaling(const SimScenario& s, const Grid& grid) {
    TheoremCheck c{"T5a", "casting overhead amortizes with batch", CheckStatus::inconclusive, {}};
    if (!has_native(s)) {
        c.details.push_back("native precision is not on the grid");
        return c;
    }
    const int native = s.energy.native_bits;
    const std::vector<int> batches = sorted(s.batches);
    const LatencyParams ref = s.latency.at(native);
    Tally tally;
    for (int p : low_bit_rungs(s)) {
        const std::string tag = std::to_string(p) + "-bit";
        const LatencyParams lat = s.latency.at(p);
        if (lat.a_comp_s != ref.a_comp_s) {
            c.details.push_back(tag + ": compute cost differs from native, COR is not identifiable");
            tally.add(CheckStatus::inconclusive);
            continue;
        }
        std::map<int, double> cor;
        bool ok = true;
        for (int b : batches) {
            const double observed = estimate_cor(*grid.at({p, b}), *grid.at({native, b})).cor;
            const double model = cor_at_batch(lat.a_cast_s, lat.a_comp_s, b);
            cor[b] = observed;
            if (!close(observed, model, 1e-9)) {
                c.details.push_back(tag + " B = " + std::to_string(b) + ": COR " + fmt(observed) +
                                    " vs model " + fmt(model));
                ok = false;
            }
        }
        std::size_t pairs = 0;
        for (const auto& [b, v] : cor) {
            auto twice = cor.find(2 * b);
            if (twice == cor.end()) continue;
            ++pairs;
            if (!close(twice->second, v / 2.0, 1e-9)) {
                c.details.push_back(tag + ": COR at B = " + std::to_string(2 * b) + " is not half of B = " +
                                    std::to_string(b));
                ok = false;
            }
        }
        c.details.push_back(tag + ": " + std::to_string(batches.size()) + " batches, " + std::to_string(pairs) +
                            " doubling pairs" + (ok ? " consistent" : " inconsistent"));
        tally.add(ok ? CheckStatus::pass : CheckStatus::fail);
    }
    const bool strictly_decreasing_expected = s.energy_source == EnergySource::functional &&
                                              s.energy_noise_rel == 0.0 && s.energy.alpha_mem > 0.0;
    if (strictly_decreasing_expected && batches.size() > 1) {
        bool ok = true;
        for (int p : sorted(s.precisions)) {
            for (std::size_t j = 1; j < batches.size(); ++j) {
                if (!(joules(*grid.at({p, batches[j]})) < joules(*grid.at({p, batches[j - 1]})))) {
                    c.details.push_back(std::to_string(p) + "-bit: energy per query does not fall from B = " +
                                        std::to_string(batches[j - 1]) + " to " + std::to_string(batches[j]));
                    ok = false;
                }
            }
        }
        tally.add(ok ? CheckStatus::pass : CheckStatus::fail);
    }
    c.status = tally.status();
    return c;
}

TheoremCheck check_accuracy_invariance(const SimScenario& s, const Grid& grid) {
    TheoremCheck c{"T5b", "accuracy is independent of batch", CheckStatus::inconclusive, {}};
    Tally tally;
    const double n = s.n_queries;
    for (int p : sorted(s.precisions)) {
        const double expected = std::pow(s.hop_success.at(p), s.hops_logical);
        const std::string tag = std::to_string(p) + "-bit";
        bool ok = true;
        if (s.accuracy_mode == AccuracyMode::deterministic) {
            const double first = grid.at({p, sorted(s.batches).front()})->accuracy;
            for (int b : s.batches) {
                if (grid.at({p, b})->accuracy != first) {
                    c.details.push_back(tag + ": accuracy at B = " + std::to_string(b) + " differs");
                    ok = false;
                }
            }
            if (!close(first, expected, 1e-12)) {
                c.details.push_back(tag + ": accuracy " + fmt(first) + " vs q^K = " + fmt(expected));
                ok = false;
            }
        } else {
            const double sigma = std::sqrt(expected * (1.0 - expected) / n);
            const double band = std::max(4.0 * sigma, 0.5 / n);
            for (int b : s.batches) {
                const double acc = grid.at({p, b})->accuracy;
                if (std::abs(acc - expected) > band) {
                    c.details.push_back(tag + " B = " + std::to_string(b) + ": accuracy " + fmt(acc) +
                                        " outside q^K +/- " + fmt(band));
                    ok = false;
                }
            }
        }
        if (ok) c.details.push_back(tag + ": consistent across " + std::to_string(s.batches.size()) + " batches");
        tally.add(ok ? CheckStatus::pass : CheckStatus::fail);
    }
    c.status = tally.status();
    return c;
}

}  // namespace

TheoremReport verify_theorems(const SimScenario& scenario) {
    return verify_theorems(scenario, simulate(scenario));
}

TheoremReport verify_theorems(const SimScenario& scenario, const SimOutput& output) {
    scenario.validate();
    const Grid grid = index_records(output);
    for (int p : scenario.precisions) {
        for (int b : scenario.batches) {
            if (!grid.count({p, b})) {
                throw AnalysisError("simulated output lacks the cell (" + std::to_string(p) + "-bit, B = " +
                                    std::to_string(b) + ")");
            }
        }
    }
    TheoremReport report;
    report.checks.push_back(check_crossover(scenario, grid));
    report.checks.push_back(check_trap_below_threshold(scenario, output));
    report.checks.push_back(check_cor_scaling(scenario, grid));
    report.checks.push_back(check_accuracy_invariance(scenario, grid));
    return report;
}

}  // namespace qtrap
