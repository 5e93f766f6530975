#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <tuple>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qtrap/error.hpp"
#include "qtrap/report.hpp"
#include "qtrap/simulator.hpp"
#include "qtrap/telemetry_io.hpp"

namespace qtrap::cli {

namespace fs = std::filesystem;

namespace {

struct ScoreFlags {
    std::vector<std::string> inputs;
    std::string weights;
    std::string policy;
    int anchor_bits = 16;
    double alpha = 0.5;
    std::string rule = "trapezoid";
    std::string out;
    bool strict = false;
    bool no_meta = false;
};

void add_input_flags(CLI::App* cmd, ScoreFlags& f) {
    cmd->add_option("inputs", f.inputs, "Telemetry files or directories (- reads JSONL from stdin)")->required();
    cmd->add_option("--anchor-bits", f.anchor_bits, "Reference precision of every ladder")->capture_default_str();
}

void add_score_flags(CLI::App* cmd, ScoreFlags& f) {
    add_input_flags(cmd, f);
    cmd->add_option("--weights", f.weights, "trust,econ,energy weights summing to 1");
    cmd->add_option("--policy", f.policy, "SI aggregation policy")->check(CLI::IsMember({"linear", "geometric"}));
    cmd->add_option("--alpha", f.alpha, "Throughput weight inside the economic pillar")->capture_default_str();
    cmd->add_option("--integration", f.rule, "Power trace integration rule")
        ->check(CLI::IsMember({"trapezoid", "rectangle"}))
        ->capture_default_str();
    cmd->add_flag("--strict", f.strict, "Exit 2 when any group is unanchored or refused");
    cmd->add_flag("--no-meta", f.no_meta, "Omit tool version and timestamp");
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << text;
    if (!f) throw IoError("write failed for " + path);
}

LoadResult load_inputs(const std::vector<std::string>& inputs, std::istream& in) {
    LoadResult all;
    std::vector<fs::path> files;
    bool use_stdin = false;
    for (const auto& i : inputs) {
        if (i == "-") {
            use_stdin = true;
        } else {
            files.emplace_back(i);
        }
    }
    if (!files.empty()) all = load_telemetry_files(expand_inputs(files));
    if (use_stdin) {
        LoadResult piped = parse_jsonl(in, "<stdin>");
        all.records.insert(all.records.end(), piped.records.begin(), piped.records.end());
        all.warnings.insert(all.warnings.end(), piped.warnings.begin(), piped.warnings.end());
    }
    return all;
}

PolicyWeights weights_from_json(const std::string& text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what(), {}, origin);
    }
    PolicyWeights w;
    if (!j.is_object()) throw ValidationError("expected an object", {}, origin);
    for (const auto& [key, value] : j.items()) {
        if (key == "policy") {
            if (!value.is_string()) throw ValidationError("expected a string", key, origin);
            try {
                w.policy = parse_policy(value.get<std::string>());
            } catch (const AnalysisError& e) {
                throw ValidationError(e.what(), key, origin);
            }
        } else if (key == "trust" || key == "econ" || key == "energy") {
            if (!value.is_number()) throw ValidationError("expected a number", key, origin);
            (key == "trust" ? w.trust : key == "econ" ? w.econ : w.energy) = value.get<double>();
        } else {
            throw ValidationError("unknown field", key, origin);
        }
    }
    return w;
}

PolicyWeights resolve_weights(const ScoreFlags& f) {
    PolicyWeights w;
    if (!f.weights.empty()) {
        std::vector<double> parts;
        std::stringstream ss(f.weights);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                parts.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw ValidationError("expected three comma-separated numbers", "--weights");
            }
        }
        if (parts.size() != 3) throw ValidationError("expected three comma-separated numbers", "--weights");
        w.trust = parts[0];
        w.econ = parts[1];
        w.energy = parts[2];
    } else if (const char* env = std::getenv(kWeightsEnv); env && *env) {
        w = weights_from_json(read_file(env), env);
    }
    if (!f.policy.empty()) w.policy = parse_policy(f.policy);
    try {
        w.validate();
    } catch (const AnalysisError& e) {
        throw ValidationError(e.what(), "weights");
    }
    return w;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ReportOptions report_options(const ScoreFlags& f) {
    ReportOptions o;
    o.weights = resolve_weights(f);
    o.anchor_bits = f.anchor_bits;
    o.pillars.econ.alpha_efficiency = f.alpha;
    if (!(f.alpha >= 0.0 && f.alpha <= 1.0)) throw ValidationError("must lie in [0, 1]", "--alpha");
    o.pillars.rule = f.rule == "rectangle" ? IntegrationRule::rectangle : IntegrationRule::trapezoid;
    o.include_meta = !f.no_meta;
    if (o.include_meta) o.generated_at = utc_now();
    o.inputs = f.inputs;
    return o;
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const auto& w : warnings) err << "warning: " << w << "\n";
}

int strict_status(const ReportBundle& b, bool strict, std::ostream& err) {
    if (!strict || (b.unanchored.empty() && b.refused.empty())) return kOk;
    err << "error: " << b.unanchored.size() << " unanchored and " << b.refused.size()
        << " refused group(s) under --strict\n";
    return kAnalysis;
}

// ---------------------------------------------------------------- commands

int cmd_validate(const std::vector<std::string>& inputs, std::istream& in, std::ostream& out) {
    int status = kOk;
    std::vector<TelemetryRecord> clean;
    std::vector<std::pair<std::string, std::optional<fs::path>>> targets;
    for (const auto& i : inputs) {
        if (i == "-") {
            targets.emplace_back("<stdin>", std::nullopt);
            continue;
        }
        try {
            for (const auto& p : expand_inputs({fs::path(i)})) targets.emplace_back(p.string(), p);
        } catch (const IoError& e) {
            out << "fail " << i << ": " << e.what() << "\n";
            status = kIo;
        }
    }
    for (const auto& [name, path] : targets) {
        try {
            LoadResult r = path ? load_telemetry(*path) : parse_jsonl(in, "<stdin>");
            out << "ok   " << name << ": " << r.records.size() << " record(s)\n";
            for (const auto& w : r.warnings) out << "     warning: " << w << "\n";
            clean.insert(clean.end(), r.records.begin(), r.records.end());
        } catch (const IoError& e) {
            out << "fail " << name << ": " << e.what() << "\n";
            status = kIo;
        } catch (const ValidationError& e) {
            out << "fail " << e.what() << "\n";
            if (status == kOk) status = kValidation;
        }
    }
    try {
        build_ladders(clean);
    } catch (const ValidationError& e) {
        out << "fail across files: " << e.what() << "\n";
        if (status == kOk) status = kValidation;
    }
    out << (status == kOk ? "clean" : "invalid") << ": " << targets.size() << " file(s), " << clean.size()
        << " valid record(s)\n";
    return status;
}

int cmd_score(const ScoreFlags& f, std::istream& in, std::ostream& out, std::ostream& err) {
    const ReportOptions opts = report_options(f);
    LoadResult loaded = load_inputs(f.inputs, in);
    ReportBundle b = build_report(loaded.records, opts, std::move(loaded.warnings));
    print_warnings(b.warnings, err);
    write_output(render_json(b), f.out, out);
    return strict_status(b, f.strict, err);
}

int cmd_cor(const ScoreFlags& f, std::istream& in, std::ostream& out, std::ostream& err) {
    const ReportOptions opts = report_options(f);
    LoadResult loaded = load_inputs(f.inputs, in);
    ReportBundle b = build_report(loaded.records, opts, std::move(loaded.warnings));
    print_warnings(b.warnings, err);
    write_output(cor_to_json(b), f.out, out);
    return strict_status(b, f.strict, err);
}

struct FitFlags {
    ScoreFlags io;
    int native_bits = 16;
    std::optional<double> hops;
    std::string model, hardware, task;
};

int cmd_fit(const FitFlags& f, std::istream& in, std::ostream& out, std::ostream& err) {
    LoadResult loaded = load_inputs(f.io.inputs, in);
    print_warnings(loaded.warnings, err);
    std::vector<TelemetryRecord> selected;
    std::set<std::tuple<std::string, std::string, std::string>> groups;
    for (const auto& r : loaded.records) {
        if (!f.model.empty() && r.config.model != f.model) continue;
        if (!f.hardware.empty() && r.config.hardware != f.hardware) continue;
        if (!f.task.empty() && r.config.task != f.task) continue;
        groups.insert({r.config.model, r.config.hardware, r.config.task});
        selected.push_back(r);
    }
    if (selected.empty()) throw AnalysisError("no records match the selection");
    if (groups.size() > 1) {
        std::string msg = "records span " + std::to_string(groups.size()) +
                          " (model, hardware, task) groups; narrow with --model/--hardware/--task:";
        for (const auto& [m, h, t] : groups) msg += " " + m + "/" + h + "/" + t;
        throw AnalysisError(msg);
    }
    FitOptions opts;
    opts.native_bits = f.native_bits;
    opts.hops = f.hops;
    opts.rule = f.io.rule == "rectangle" ? IntegrationRule::rectangle : IntegrationRule::trapezoid;
    const FitCoverage coverage = assess_fit_coverage(selected, f.native_bits);
    const EnergyModelFit fit = fit_energy_model(selected, opts);
    if (!fit.phi_monotone) err << "warning: fitted phi is not non-increasing in precision\n";
    if (fit.hops_assumed) err << "warning: hop count K inferred from tokens per query\n";
    write_output(fit_to_json(fit, coverage), f.io.out, out);
    return kOk;
}

int cmd_bstar(const std::string& params_path, const std::string& fit_path, const std::vector<double>& batches,
              const std::string& out_path, std::ostream& out) {
    const std::string& path = params_path.empty() ? fit_path : params_path;
    const EnergyParams params = parse_energy_params(read_file(path), path);
    write_output(bstar_to_json(params, batches), out_path, out);
    return kOk;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_path, bool verify, std::ostream& out,
                 std::ostream& err) {
    const SimScenario scenario = load_scenario(scenario_path);
    const SimOutput sim = simulate(scenario);
    std::ostringstream jsonl;
    write_jsonl(jsonl, sim.records);
    if (!verify || !out_path.empty()) write_output(jsonl.str(), out_path, out);
    if (!verify) return kOk;
    const TheoremReport report = verify_theorems(scenario, sim);
    out << theorems_to_json(report) << "\n";
    for (const auto& c : report.checks) err << c.id << " " << to_string(c.status) << "\n";
    return report.any_failed() ? kAnalysis : kOk;
}

int cmd_report(const ScoreFlags& f, const std::string& format, const std::string& out_dir, std::istream& in,
               std::ostream& out, std::ostream& err) {
    ReportOptions opts = report_options(f);
    opts.fit_energy = true;
    LoadResult loaded = load_inputs(f.inputs, in);
    ReportBundle b = build_report(loaded.records, opts, std::move(loaded.warnings));
    print_warnings(b.warnings, err);
    if (format == "json") {
        write_output(render_json(b), f.out, out);
    } else if (format == "markdown") {
        write_output(render_markdown(b), f.out, out);
    } else {
        const auto tables = render_csv_series(b);
        if (out_dir.empty()) {
            for (const auto& t : tables) out << "# " << t.name << ".csv\n" << t.to_csv();
        } else {
            std::error_code ec;
            fs::create_directories(out_dir, ec);
            if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
            for (const auto& t : tables) {
                const fs::path p = fs::path(out_dir) / (t.name + ".csv");
                write_output(t.to_csv(), p.string(), out);
                out << p.string() << "\n";
            }
        }
    }
    return strict_status(b, f.strict, err);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantization trap analysis over inference telemetry", "qtrap"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version()));

    std::vector<std::string> validate_inputs;
    auto* validate = app.add_subcommand("validate", "Check telemetry files against the schema");
    validate->add_option("inputs", validate_inputs, "Telemetry files or directories")->required();

    ScoreFlags score_flags;
    auto* score = app.add_subcommand("score", "Pillars, SI and trap verdicts as JSON");
    add_score_flags(score, score_flags);
    score->add_option("--out", score_flags.out, "Write the report here instead of stdout");

    ScoreFlags cor_flags;
    auto* cor = app.add_subcommand("cor", "Throughput-inferred casting overhead ratios");
    add_score_flags(cor, cor_flags);
    cor->add_option("--out", cor_flags.out, "Output path");

    FitFlags fit_flags;
    double hops = 0.0;
    auto* fit = app.add_subcommand("fit", "Fit the batch-amortized energy model");
    fit->add_option("inputs", fit_flags.io.inputs, "Telemetry files or directories")->required();
    fit->add_option("--native-bits", fit_flags.native_bits, "Native precision")->capture_default_str();
    auto* hops_opt = fit->add_option("--hops", hops, "Atomic hops per query (default: tokens per query)")
                         ->check(CLI::PositiveNumber);
    fit->add_option("--model", fit_flags.model, "Select one model");
    fit->add_option("--hardware", fit_flags.hardware, "Select one hardware target");
    fit->add_option("--task", fit_flags.task, "Select one task");
    fit->add_option("--integration", fit_flags.io.rule, "Power trace integration rule")
        ->check(CLI::IsMember({"trapezoid", "rectangle"}));
    fit->add_option("--out", fit_flags.io.out, "Output path");

    std::string params_path, fit_path, bstar_out;
    std::vector<double> bstar_batches;
    auto* bstar = app.add_subcommand("bstar", "Critical batch thresholds from energy parameters");
    auto* params_opt = bstar->add_option("--params", params_path, "Energy parameter JSON");
    auto* fitfile_opt = bstar->add_option("--fit", fit_path, "Output of the fit command");
    params_opt->excludes(fitfile_opt);
    bstar->add_option("--batch", bstar_batches, "Also evaluate energy, penalty and gradient at this batch size")
        ->check(CLI::PositiveNumber);
    bstar->add_option("--out", bstar_out, "Output path");

    std::string scenario_path, sim_out;
    bool verify = false;
    auto* sim = app.add_subcommand("simulate", "Generate synthetic telemetry from a scenario");
    sim->add_option("scenario", scenario_path, "Scenario JSON")->required();
    sim->add_option("--out", sim_out, "Write JSONL here instead of stdout");
    sim->add_flag("--verify", verify, "Run the theorem checks and print their report");

    ScoreFlags report_flags;
    std::string format = "json", out_dir;
    auto* report = app.add_subcommand("report", "Render a report as JSON, markdown or plot series");
    add_score_flags(report, report_flags);
    report->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"json", "markdown", "csv-series"}))
        ->capture_default_str();
    report->add_option("--out", report_flags.out, "Output path for json and markdown");
    report->add_option("--out-dir", out_dir, "Directory for csv-series files");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*validate) return cmd_validate(validate_inputs, in, out);
        if (*score) return cmd_score(score_flags, in, out, err);
        if (*cor) return cmd_cor(cor_flags, in, out, err);
        if (*fit) {
            if (*hops_opt) fit_flags.hops = hops;
            return cmd_fit(fit_flags, in, out, err);
        }
        if (*bstar) {
            if (params_path.empty() && fit_path.empty()) {
                err << "error: bstar needs --params or --fit\n";
                return kUsage;
            }
            return cmd_bstar(params_path, fit_path, bstar_batches, bstar_out, out);
        }
        if (*sim) return cmd_simulate(scenario_path, sim_out, verify, out, err);
        if (*report) return cmd_report(report_flags, format, out_dir, in, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const AnalysisError& e) {
        err << "error: " << e.what() << "\n";
        return kAnalysis;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    }
    return kUsage;
}

}  // namespace qtrap::cli
