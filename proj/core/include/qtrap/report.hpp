#pragma once

// Report assembly and rendering. A ReportBundle holds every number a
// report shows; the renderers only format it.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qtrap/amortization.hpp"
#include "qtrap/casting.hpp"
#include "qtrap/ladder.hpp"
#include "qtrap/manifold.hpp"
#include "qtrap/theorems.hpp"

namespace qtrap {

inline constexpr const char* kReportSchemaVersion = "1.0";

const char* tool_version();

struct ReportOptions {
    PolicyWeights weights;
    int anchor_bits = 16;
    PillarOptions pillars;
    bool fit_energy = false;  // fit each (model, hardware, task) group
    bool include_meta = true;
    std::string generated_at;  // ISO-8601, supplied by the caller
    std::vector<std::string> inputs;
};

struct RungCor {
    int bits = 0;
    CorEstimate estimate;
};

struct LadderReport {
    TrapVerdict verdict;
    std::vector<RungCor> cor;  // every non-anchor rung with usable throughput
    std::map<int, double> si_deficit;
};

/// A ladder whose anchor could not be scored (e.g. zero anchor accuracy).
struct RefusedLadder {
    LadderKey key;
    std::string reason;
};

struct GroupFit {
    std::string model;
    std::string hardware;
    std::string task;
    FitCoverage coverage;
    std::optional<EnergyModelFit> fit;  // absent when refused
    std::string refusal;
};

struct ReportBundle {
    ReportOptions options;
    std::vector<TelemetryRecord> records;  // sorted by ConfigId
    std::vector<LadderReport> ladders;     // ordered by ladder key
    std::vector<UnladderedGroup> unanchored;
    std::vector<RefusedLadder> refused;
    std::vector<GroupFit> fits;
    std::vector<std::string> warnings;
    std::optional<TheoremReport> theorems;
};

/// Builds ladders, scores them (ladders run concurrently) and collects
/// warnings. Output ordering never depends on input order.
ReportBundle build_report(std::span<const TelemetryRecord> records, const ReportOptions& options,
                          std::vector<std::string> load_warnings = {});

std::string render_json(const ReportBundle& bundle);
std::string render_markdown(const ReportBundle& bundle);

struct SeriesTable {
    std::string name;  // file stem, e.g. "tps_by_precision"
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
};

/// tps_by_precision, energy_by_precision, pillars, cor_by_batch and
/// accuracy_by_batch, always in that order and always with headers.
std::vector<SeriesTable> render_csv_series(const ReportBundle& bundle);

std::string cor_to_json(const ReportBundle& bundle);
std::string fit_to_json(const EnergyModelFit& fit, const FitCoverage& coverage);
// With batches, each rung also carries energy, penalty vs native and dE/dp at those sizes.
std::string bstar_to_json(const EnergyParams& params, const std::vector<double>& batches = {});
std::string theorems_to_json(const TheoremReport& report);

/// Accepts either bare parameters
///   {"gamma_static":..,"alpha_mem":..,"phi":{"4":..},"native_bits":16,"hops":1}
/// or a fit report carrying them under "params".
EnergyParams parse_energy_params(std::string_view json_text, const std::string& origin = "<params>");

}  // namespace qtrap
