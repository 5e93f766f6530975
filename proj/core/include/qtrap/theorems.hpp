#pragma once

#include <string>
#include <vector>

#include "qtrap/simulator.hpp"

namespace qtrap {

enum class CheckStatus { pass, fail, inconclusive };

const char* to_string(CheckStatus s);

struct TheoremCheck {
    std::string id;    // T3, T4, T5a, T5b
    std::string name;
    CheckStatus status = CheckStatus::inconclusive;
    std::vector<std::string> details;
};

struct TheoremReport {
    std::vector<TheoremCheck> checks;

    bool any_failed() const;
    bool all_passed() const;
    const TheoremCheck& check(const std::string& id) const;
};

/// Brute-force checks of the amortization results against a simulated grid:
///   T3  the empirical energy crossover between each low-bit rung and the
///       native rung sits within one batch-grid step of critical_batch, and
///       the functional is equal on both rungs at B*;
///   T4  every ladder at a batch below all thresholds is divergent when each
///       low-bit rung has strictly lower hop fidelity;
///   T5a throughput-inferred COR matches a_cast / (a_comp B) and halves when
///       B doubles; energy per query falls with B;
///   T5b accuracy does not depend on batch size.
/// A grid that cannot exercise a check yields inconclusive, not fail.
TheoremReport verify_theorems(const SimScenario& scenario);
TheoremReport verify_theorems(const SimScenario& scenario, const SimOutput& output);

}  // namespace qtrap
