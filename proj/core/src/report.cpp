#include "qtrap/report.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "qtrap/error.hpp"

#ifndef QTRAP_VERSION
#define QTRAP_VERSION "0.0.0"
#endif

namespace qtrap {

using ordered_json = nlohmann::ordered_json;

const char* tool_version() { return QTRAP_VERSION; }

namespace {

struct LadderOutcome {
    std::optional<LadderReport> report;
    std::optional<RefusedLadder> refused;
};

LadderOutcome score_ladder(const PrecisionLadder& ladder, const ReportOptions& options) {
    LadderOutcome out;
    try {
        LadderReport lr;
        lr.verdict = detect_trap(ladder, options.pillars, options.weights);
        const TelemetryRecord& anchor = ladder.anchor();
        const double anchor_si = lr.verdict.si_by_precision.at(ladder.reference_bits);
        for (const auto& rung : lr.verdict.rungs) {
            if (rung.bits == ladder.reference_bits) continue;
            if (anchor_si > 0.0) lr.si_deficit[rung.bits] = si_deficit(anchor_si, rung.si.si);
            try {
                lr.cor.push_back(RungCor{rung.bits, estimate_cor(ladder.rungs.at(rung.bits), anchor)});
            } catch (const AnalysisError&) {
                // No usable throughput on one side; the rung still gets pillars.
            }
        }
        out.report = std::move(lr);
    } catch (const Error& e) {
        out.refused = RefusedLadder{ladder.key, e.what()};
    }
    return out;
}

std::string key_label(const LadderKey& k) { return to_string(k); }

}  // namespace

ReportBundle build_report(std::span<const TelemetryRecord> records, const ReportOptions& options,
                          std::vector<std::string> load_warnings) {
    options.weights.validate();
    ReportBundle b;
    b.options = options;
    b.records.assign(records.begin(), records.end());
    std::sort(b.records.begin(), b.records.end(),
              [](const auto& x, const auto& y) { return x.config < y.config; });
    b.warnings = std::move(load_warnings);
    if (b.records.empty()) {
        b.warnings.push_back("no telemetry records; the report is empty");
        return b;
    }
    for (const auto& r : b.records) {
        for (const auto& w : r.warnings) b.warnings.push_back(to_string(r.config) + ": " + w);
    }

    LadderSet set = build_ladders(b.records, options.anchor_bits);
    std::vector<std::future<LadderOutcome>> jobs;
    jobs.reserve(set.ladders.size());
    for (const auto& ladder : set.ladders) {
        jobs.push_back(std::async(std::launch::async, score_ladder, std::cref(ladder), std::cref(options)));
    }
    for (auto& job : jobs) {
        LadderOutcome o = job.get();
        if (o.refused) {
            b.warnings.push_back("ladder " + key_label(o.refused->key) + " refused: " + o.refused->reason);
            b.refused.push_back(std::move(*o.refused));
            continue;
        }
        const auto& v = o.report->verdict;
        for (const auto& f : v.failed) {
            b.warnings.push_back("ladder " + key_label(v.ladder_key) + " " + std::to_string(f.bits) +
                                 "-bit rung not scored: " + f.reason);
        }
        for (const auto& rung : v.rungs) {
            for (const auto& w : rung.pillars.warnings()) {
                b.warnings.push_back("ladder " + key_label(v.ladder_key) + " " + std::to_string(rung.bits) +
                                     "-bit: " + w);
            }
        }
        b.ladders.push_back(std::move(*o.report));
    }
    for (const auto& g : set.unanchored) {
        b.warnings.push_back("group " + key_label(g.key) + " unanchored: " + to_string(g.reason));
    }
    b.unanchored = std::move(set.unanchored);

    if (options.fit_energy) {
        std::map<std::tuple<std::string, std::string, std::string>, std::vector<TelemetryRecord>> groups;
        for (const auto& r : b.records) groups[{r.config.model, r.config.hardware, r.config.task}].push_back(r);
        for (const auto& [k, recs] : groups) {
            GroupFit gf;
            std::tie(gf.model, gf.hardware, gf.task) = k;
            gf.coverage = assess_fit_coverage(recs, options.anchor_bits);
            try {
                FitOptions fo;
                fo.native_bits = options.anchor_bits;
                fo.rule = options.pillars.rule;
                gf.fit = fit_energy_model(recs, fo);
            } catch (const AnalysisError& e) {
                gf.refusal = e.what();
            }
            b.fits.push_back(std::move(gf));
        }
    }
    return b;
}

namespace {

ordered_json key_json(const LadderKey& k) {
    return {{"model", k.model}, {"hardware", k.hardware}, {"batch_size", k.batch_size}, {"task", k.task}};
}

ordered_json cor_json(const CorEstimate& c) {
    return {{"cor", c.cor},
            {"dominance", to_string(c.dominance)},
            {"tau_total_s", c.latency.tau_total_s},
            {"tau_comp_s", c.latency.tau_comp_s},
            {"tau_cast_s", c.latency.tau_cast_s},
            {"negative_cast", c.latency.negative_cast}};
}

ordered_json params_json(const EnergyParams& p) {
    ordered_json phi = ordered_json::object();
    for (const auto& [bits, v] : p.phi_by_precision) phi[std::to_string(bits)] = v;
    return {{"gamma_static", p.gamma_static}, {"alpha_mem", p.alpha_mem}, {"phi", phi},
            {"native_bits", p.native_bits}, {"hops", p.hops}};
}

ordered_json fit_json(const EnergyModelFit& fit, const FitCoverage& coverage) {
    ordered_json j;
    j["condition"] = to_string(fit.condition);
    j["params"] = params_json(fit.params);
    j["residual_rms_j"] = fit.residual_rms;
    j["n_points"] = fit.n_points;
    j["distinct_points"] = fit.distinct_points;
    j["hops_assumed"] = fit.hops_assumed;
    j["phi_monotone"] = fit.phi_monotone;
    j["coverage"] = {{"free_parameters", coverage.free_parameters},
                     {"rank", coverage.rank},
                     {"precisions", coverage.precisions},
                     {"batches", coverage.batches}};
    return j;
}

ordered_json verdict_json(const LadderReport& lr) {
    const TrapVerdict& v = lr.verdict;
    ordered_json j = key_json(v.ladder_key);
    j["reference_bits"] = v.reference_bits;
    j["gradient_sign"] = to_string(v.gradient_sign);
    j["monotone_in_precision"] = v.monotone_in_precision;
    j["adjacent_differences"] = v.adjacent_differences;
    j["dominated_rungs"] = v.dominated_rungs;
    ordered_json rungs = ordered_json::array();
    for (const auto& r : v.rungs) {
        ordered_json rj;
        rj["precision_bits"] = r.bits;
        rj["pillars"] = {{"trust", r.pillars.trust.value},
                         {"econ", r.pillars.econ.value},
                         {"energy", r.pillars.energy.s_si}};
        rj["trust"] = {{"raw_ratio", r.pillars.trust.raw_ratio}, {"clamped", r.pillars.trust.clamped}};
        rj["econ"] = {{"eta", r.pillars.econ.eta}, {"rho", r.pillars.econ.rho}};
        ordered_json ej = {{"joules_per_query", r.pillars.energy.joules_per_query},
                           {"anchor_joules_per_query", r.pillars.energy.anchor_joules_per_query},
                           {"mode", to_string(r.pillars.energy.mode)},
                           {"degenerate", r.pillars.energy.degenerate}};
        if (r.pillars.energy.caes) {
            ej["caes"] = *r.pillars.energy.caes;
            ej["anchor_caes"] = *r.pillars.energy.anchor_caes;
        }
        rj["energy"] = ej;
        rj["si"] = {{"selected", r.si.si},
                    {"linear", r.si_linear},
                    {"geometric", r.si_geometric},
                    {"bottleneck", r.si.bottleneck}};
        if (auto it = lr.si_deficit.find(r.bits); it != lr.si_deficit.end()) rj["si_deficit"] = it->second;
        if (r.slope_to_anchor) rj["slope_to_anchor"] = *r.slope_to_anchor;
        for (const auto& c : lr.cor) {
            if (c.bits == r.bits) rj["cor"] = cor_json(c.estimate);
        }
        rj["warnings"] = r.pillars.warnings();
        rungs.push_back(std::move(rj));
    }
    j["rungs"] = std::move(rungs);
    ordered_json failed = ordered_json::array();
    for (const auto& f : v.failed) failed.push_back({{"precision_bits", f.bits}, {"reason", f.reason}});
    j["failed_rungs"] = std::move(failed);
    return j;
}

ordered_json provenance_json(const ReportOptions& o) {
    return {{"inputs", o.inputs},
            {"policy", to_string(o.weights.policy)},
            {"weights", {{"trust", o.weights.trust}, {"econ", o.weights.econ}, {"energy", o.weights.energy}}},
            {"anchor_bits", o.anchor_bits},
            {"econ_alpha", o.pillars.econ.alpha_efficiency},
            {"integration_rule", o.pillars.rule == IntegrationRule::trapezoid ? "trapezoid" : "rectangle"}};
}

ordered_json header_json(const ReportBundle& b) {
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    if (b.options.include_meta) {
        j["meta"] = {{"tool_version", tool_version()}, {"generated_at", b.options.generated_at}};
    }
    j["provenance"] = provenance_json(b.options);
    return j;
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

std::string render_json(const ReportBundle& b) {
    ordered_json j = header_json(b);
    std::size_t divergent = 0, mixed = 0, conforming = 0;
    for (const auto& lr : b.ladders) {
        switch (lr.verdict.gradient_sign) {
            case GradientSign::divergent: ++divergent; break;
            case GradientSign::mixed: ++mixed; break;
            case GradientSign::conforming: ++conforming; break;
        }
    }
    j["summary"] = {{"records", b.records.size()}, {"ladders", b.ladders.size()},
                    {"divergent", divergent},      {"mixed", mixed},
                    {"conforming", conforming},    {"unanchored", b.unanchored.size()},
                    {"refused", b.refused.size()}};
    ordered_json ladders = ordered_json::array();
    for (const auto& lr : b.ladders) ladders.push_back(verdict_json(lr));
    j["ladders"] = std::move(ladders);

    ordered_json un = ordered_json::array();
    for (const auto& g : b.unanchored) {
        ordered_json gj = key_json(g.key);
        gj["reason"] = to_string(g.reason);
        std::vector<int> bits;
        for (const auto& r : g.records) bits.push_back(r.config.precision_bits);
        gj["precisions"] = bits;
        un.push_back(std::move(gj));
    }
    j["unanchored"] = std::move(un);

    ordered_json refused = ordered_json::array();
    for (const auto& r : b.refused) {
        ordered_json rj = key_json(r.key);
        rj["reason"] = r.reason;
        refused.push_back(std::move(rj));
    }
    j["refused"] = std::move(refused);

    if (b.options.fit_energy) {
        ordered_json fits = ordered_json::array();
        for (const auto& gf : b.fits) {
            ordered_json fj = {{"model", gf.model}, {"hardware", gf.hardware}, {"task", gf.task}};
            if (gf.fit) {
                fj["fit"] = fit_json(*gf.fit, gf.coverage);
            } else {
                fj["refusal"] = gf.refusal;
            }
            fits.push_back(std::move(fj));
        }
        j["fits"] = std::move(fits);
    }
    if (b.theorems) j["theorems"] = nlohmann::ordered_json::parse(theorems_to_json(*b.theorems));
    j["warnings"] = b.warnings;
    return j.dump(2) + "\n";
}

std::string render_markdown(const ReportBundle& b) {
    std::ostringstream md;
    md << "# Quantization trap report\n\n";
    if (b.options.include_meta) {
        md << "Tool version " << tool_version();
        if (!b.options.generated_at.empty()) md << ", generated " << b.options.generated_at;
        md << ".\n\n";
    }
    const auto& w = b.options.weights;
    md << "Policy `" << to_string(w.policy) << "` with weights (trust " << num(w.trust) << ", econ "
       << num(w.econ) << ", energy " << num(w.energy) << "), anchor " << b.options.anchor_bits
       << "-bit, econ alpha " << num(b.options.pillars.econ.alpha_efficiency) << ".\n\n";

    if (b.records.empty()) md << "No telemetry records.\n\n";

    if (!b.ladders.empty()) {
        md << "## SI deficit\n\n";
        md << "| model | hardware | task | batch | bits | T_SI | E_SI | S_SI | SI | deficit | verdict |\n";
        md << "|---|---|---|---:|---:|---:|---:|---:|---:|---:|---|\n";
        for (const auto& lr : b.ladders) {
            const auto& v = lr.verdict;
            for (const auto& r : v.rungs) {
                auto d = lr.si_deficit.find(r.bits);
                md << "| " << v.ladder_key.model << " | " << v.ladder_key.hardware << " | " << v.ladder_key.task
                   << " | " << v.ladder_key.batch_size << " | " << r.bits << " | "
                   << fixed(r.pillars.trust.value, 4) << " | " << fixed(r.pillars.econ.value, 4) << " | "
                   << fixed(r.pillars.energy.s_si, 4) << " | " << fixed(r.si.si, 4) << " | "
                   << (d == lr.si_deficit.end() ? std::string("-") : fixed(d->second, 4)) << " | "
                   << to_string(v.gradient_sign) << " |\n";
            }
        }
        md << "\n";

        md << "## Casting overhead\n\n";
        md << "| model | hardware | task | batch | bits | COR | regime |\n";
        md << "|---|---|---|---:|---:|---:|---|\n";
        for (const auto& lr : b.ladders) {
            const auto& k = lr.verdict.ladder_key;
            for (const auto& c : lr.cor) {
                md << "| " << k.model << " | " << k.hardware << " | " << k.task << " | " << k.batch_size << " | "
                   << c.bits << " | " << fixed(c.estimate.cor, 4) << " | " << to_string(c.estimate.dominance)
                   << " |\n";
            }
        }
        md << "\n";
    }

    if (!b.unanchored.empty() || !b.refused.empty()) {
        md << "## Unscored groups\n\n";
        for (const auto& g : b.unanchored) md << "- " << to_string(g.key) << ": " << to_string(g.reason) << "\n";
        for (const auto& r : b.refused) md << "- " << to_string(r.key) << ": " << r.reason << "\n";
        md << "\n";
    }

    if (!b.fits.empty()) {
        md << "## Energy model fits\n\n";
        for (const auto& gf : b.fits) {
            md << "- " << gf.model << " / " << gf.hardware << " / " << gf.task << ": ";
            if (!gf.fit) {
                md << gf.refusal << "\n";
                continue;
            }
            const auto& p = gf.fit->params;
            md << "gamma " << num(p.gamma_static) << " J, alpha " << num(p.alpha_mem) << " J/bit";
            for (const auto& [bits, v] : p.phi_by_precision) md << ", phi(" << bits << ") " << num(v) << " J";
            md << ", K " << num(p.hops) << ", rms residual " << num(gf.fit->residual_rms) << " J\n";
        }
        md << "\n";
    }

    if (!b.warnings.empty()) {
        md << "## Warnings\n\n";
        for (const auto& w2 : b.warnings) md << "- " << w2 << "\n";
        md << "\n";
    }
    return md.str();
}

std::string SeriesTable::to_csv() const {
    auto cell = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    };
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cell(cells[i]);
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

std::vector<SeriesTable> render_csv_series(const ReportBundle& b) {
    SeriesTable tps{"tps_by_precision",
                    {"model", "hardware", "task", "batch_size", "precision_bits", "tokens_per_second"}, {}};
    SeriesTable energy{"energy_by_precision",
                       {"model", "hardware", "task", "batch_size", "precision_bits", "joules_per_query", "power_kind"},
                       {}};
    SeriesTable accuracy{"accuracy_by_batch",
                         {"model", "hardware", "task", "precision_bits", "batch_size", "accuracy"}, {}};
    for (const auto& r : b.records) {
        const auto& c = r.config;
        const std::vector<std::string> id = {c.model, c.hardware, c.task};
        auto row = [&](std::vector<std::string> tail) {
            std::vector<std::string> out = id;
            out.insert(out.end(), tail.begin(), tail.end());
            return out;
        };
        tps.rows.push_back(row({std::to_string(c.batch_size), std::to_string(c.precision_bits),
                                num(derived_tps(r).tokens_per_second)}));
        energy.rows.push_back(row({std::to_string(c.batch_size), std::to_string(c.precision_bits),
                                   num(energy_per_query(r, b.options.pillars.rule).joules), power_kind(r.power)}));
        accuracy.rows.push_back(row({std::to_string(c.precision_bits), std::to_string(c.batch_size), num(r.accuracy)}));
    }
    std::sort(accuracy.rows.begin(), accuracy.rows.end(), [](const auto& x, const auto& y) {
        return std::tie(x[0], x[1], x[2]) != std::tie(y[0], y[1], y[2])
                   ? std::tie(x[0], x[1], x[2]) < std::tie(y[0], y[1], y[2])
                   : std::make_pair(std::stoi(x[3]), std::stoi(x[4])) < std::make_pair(std::stoi(y[3]), std::stoi(y[4]));
    });

    SeriesTable pillars{"pillars",
                        {"model", "hardware", "task", "batch_size", "precision_bits", "trust", "econ", "energy",
                         "si_linear", "si_geometric", "gradient_sign"},
                        {}};
    SeriesTable cor{"cor_by_batch", {"model", "hardware", "task", "precision_bits", "batch_size", "cor", "dominance"}, {}};
    for (const auto& lr : b.ladders) {
        const auto& k = lr.verdict.ladder_key;
        for (const auto& r : lr.verdict.rungs) {
            pillars.rows.push_back({k.model, k.hardware, k.task, std::to_string(k.batch_size), std::to_string(r.bits),
                                    num(r.pillars.trust.value), num(r.pillars.econ.value),
                                    num(r.pillars.energy.s_si), num(r.si_linear), num(r.si_geometric),
                                    to_string(lr.verdict.gradient_sign)});
        }
        for (const auto& c : lr.cor) {
            cor.rows.push_back({k.model, k.hardware, k.task, std::to_string(c.bits), std::to_string(k.batch_size),
                                num(c.estimate.cor), to_string(c.estimate.dominance)});
        }
    }
    std::sort(cor.rows.begin(), cor.rows.end(), [](const auto& x, const auto& y) {
        return std::tie(x[0], x[1], x[2]) != std::tie(y[0], y[1], y[2])
                   ? std::tie(x[0], x[1], x[2]) < std::tie(y[0], y[1], y[2])
                   : std::make_pair(std::stoi(x[3]), std::stoi(x[4])) < std::make_pair(std::stoi(y[3]), std::stoi(y[4]));
    });
    return {tps, energy, pillars, cor, accuracy};
}

std::string cor_to_json(const ReportBundle& b) {
    ordered_json j = header_json(b);
    ordered_json ladders = ordered_json::array();
    for (const auto& lr : b.ladders) {
        ordered_json lj = key_json(lr.verdict.ladder_key);
        lj["reference_bits"] = lr.verdict.reference_bits;
        ordered_json rungs = ordered_json::array();
        for (const auto& c : lr.cor) {
            ordered_json cj = cor_json(c.estimate);
            cj["precision_bits"] = c.bits;
            rungs.push_back(std::move(cj));
        }
        lj["rungs"] = std::move(rungs);
        ladders.push_back(std::move(lj));
    }
    j["ladders"] = std::move(ladders);
    j["warnings"] = b.warnings;
    return j.dump(2) + "\n";
}

std::string fit_to_json(const EnergyModelFit& fit, const FitCoverage& coverage) {
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    const ordered_json body = fit_json(fit, coverage);
    for (const auto& [key, value] : body.items()) j[key] = value;
    return j.dump(2) + "\n";
}

std::string bstar_to_json(const EnergyParams& params, const std::vector<double>& batches) {
    params.validate();
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["params"] = params_json(params);
    ordered_json rungs = ordered_json::array();
    for (const auto& [bits, phi] : params.phi_by_precision) {
        if (bits >= params.native_bits) continue;
        const CriticalBatch cb = critical_batch(params, bits);
        ordered_json rj = {{"precision_bits", bits}, {"phi", phi}, {"native_support", cb.native_support}};
        if (cb.native_support) {
            rj["critical_batch"] = nullptr;
            rj["smallest_integer_batch_above"] = nullptr;
        } else {
            rj["critical_batch"] = cb.batch;
            rj["smallest_integer_batch_above"] = cb.smallest_integer_above();
        }
        if (!batches.empty()) {
            ordered_json evals = ordered_json::array();
            for (double b : batches) {
                evals.push_back({{"batch_size", b},
                                 {"joules_per_query", energy_eval(params, bits, b)},
                                 {"native_joules_per_query", energy_eval(params, params.native_bits, b)},
                                 {"penalty_vs_native", quantization_energy_penalty(params, bits, b)},
                                 {"gradient_p", energy_gradient_p(params, bits, b)}});
            }
            rj["evaluations"] = std::move(evals);
        }
        rungs.push_back(std::move(rj));
    }
    j["rungs"] = std::move(rungs);
    return j.dump(2) + "\n";
}

std::string theorems_to_json(const TheoremReport& report) {
    ordered_json j;
    j["all_passed"] = report.all_passed();
    j["any_failed"] = report.any_failed();
    ordered_json checks = ordered_json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"id", c.id}, {"name", c.name}, {"status", to_string(c.status)}, {"details", c.details}});
    }
    j["checks"] = std::move(checks);
    return j.dump(2);
}

EnergyParams parse_energy_params(std::string_view json_text, const std::string& origin) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const ordered_json::exception& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what(), {}, origin);
    }
    if (j.is_object() && j.contains("params")) j = j["params"];
    if (!j.is_object()) throw ValidationError("expected an object of energy parameters", {}, origin);
    static const std::set<std::string> known = {"gamma_static", "alpha_mem", "phi", "native_bits", "hops"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) throw ValidationError("unknown field", key, origin);
    }
    auto number = [&](const char* key, double fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number()) throw ValidationError("expected a number", key, origin);
        return j[key].get<double>();
    };
    EnergyParams p;
    p.gamma_static = number("gamma_static", 0.0);
    p.alpha_mem = number("alpha_mem", 0.0);
    p.hops = number("hops", 1.0);
    if (j.contains("native_bits")) {
        if (!j["native_bits"].is_number_integer()) throw ValidationError("expected an integer", "native_bits", origin);
        p.native_bits = j["native_bits"].get<int>();
    }
    if (!j.contains("alpha_mem")) throw ValidationError("missing required field", "alpha_mem", origin);
    if (!j.contains("phi") || !j["phi"].is_object()) {
        throw ValidationError("expected an object keyed by precision", "phi", origin);
    }
    for (const auto& [key, value] : j["phi"].items()) {
        std::size_t used = 0;
        int bits = 0;
        try {
            bits = std::stoi(key, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != key.size()) throw ValidationError("precision key '" + key + "' is not an integer", "phi", origin);
        if (!value.is_number()) throw ValidationError("expected a number", "phi." + key, origin);
        p.phi_by_precision[bits] = value.get<double>();
    }
    if (!p.phi_by_precision.count(p.native_bits)) p.phi_by_precision[p.native_bits] = 0.0;
    try {
        p.validate();
    } catch (const AnalysisError& e) {
        throw ValidationError(e.what(), "params", origin);
    }
    return p;
}

}  // namespace qtrap
