#include "qtrap/telemetry_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qtrap/error.hpp"

namespace qtrap {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kRecordKeys = {
    "model",       "hardware",     "precision_bits", "batch_size", "task",
    "total_tokens", "duration_s",  "sample_count",   "accuracy",   "peak_vram_gb",
    "power",       "grid_gco2_per_kwh", "source",    "warnings"};

class FieldReader {
public:
    FieldReader(const json& obj, const std::string& origin, std::size_t line)
        : obj_(obj), origin_(origin), line_(line) {}

    [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
        throw ValidationError(msg, field, origin_, line_);
    }

    const json& at(const std::string& field) const {
        auto it = obj_.find(field);
        if (it == obj_.end()) fail(field, "missing required field");
        return *it;
    }

    std::string text(const std::string& field) const {
        const json& v = at(field);
        if (!v.is_string()) fail(field, "expected a string");
        return v.get<std::string>();
    }

    std::int64_t integer(const std::string& field) const {
        const json& v = at(field);
        if (!v.is_number_integer()) fail(field, "expected an integer");
        if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
            fail(field, "integer out of range");
        }
        return v.get<std::int64_t>();
    }

    int small_integer(const std::string& field) const {
        const std::int64_t v = integer(field);
        if (v < INT32_MIN || v > INT32_MAX) fail(field, "integer out of range");
        return static_cast<int>(v);
    }

    double number(const json& v, const std::string& field) const {
        if (!v.is_number()) fail(field, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(field, "non-finite number");
        return d;
    }

    double number(const std::string& field) const { return number(at(field), field); }

private:
    const json& obj_;
    const std::string& origin_;
    std::size_t line_;
};

PowerEvidence parse_power(const json& p, const std::string& origin, std::size_t line) {
    if (!p.is_object()) throw ValidationError("expected an object", "power", origin, line);
    FieldReader r(p, origin, line);
    const std::string kind = r.text("kind");
    auto only = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [k, v] : p.items()) {
            (void)v;
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
                r.fail("power." + k, "unknown field for power kind '" + kind + "'");
            }
        }
    };
    if (kind == "tdp") {
        only({"kind", "tdp_watts"});
        return TdpAnchor{r.number("tdp_watts")};
    }
    if (kind == "joules") {
        only({"kind", "joules_per_query"});
        return DirectJoules{r.number("joules_per_query")};
    }
    if (kind == "trace") {
        only({"kind", "samples"});
        const json& samples = r.at("samples");
        if (!samples.is_array()) r.fail("power.samples", "expected an array of [t_offset_s, watts]");
        SampledTrace trace;
        trace.samples.reserve(samples.size());
        for (const auto& s : samples) {
            if (!s.is_array() || s.size() != 2) {
                r.fail("power.samples", "each sample must be a [t_offset_s, watts] pair");
            }
            trace.samples.push_back(
                PowerSample{r.number(s[0], "power.samples"), r.number(s[1], "power.samples")});
        }
        return trace;
    }
    r.fail("power.kind", "unknown power kind '" + kind + "' (expected tdp, trace or joules)");
}

TelemetryRecord record_from_json(const json& j, const std::string& origin, std::size_t line) {
    if (!j.is_object()) throw ValidationError("record must be a JSON object", {}, origin, line);
    FieldReader r(j, origin, line);
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!kRecordKeys.count(key)) r.fail(key, "unknown field");
    }

    TelemetryRecord rec;
    rec.config.model = r.text("model");
    rec.config.hardware = r.text("hardware");
    rec.config.precision_bits = r.small_integer("precision_bits");
    rec.config.batch_size = r.small_integer("batch_size");
    rec.config.task = r.text("task");
    rec.total_tokens = r.integer("total_tokens");
    rec.duration_s = r.number("duration_s");
    rec.sample_count = r.integer("sample_count");
    rec.accuracy = r.number("accuracy");
    rec.peak_vram_gb = r.number("peak_vram_gb");
    rec.power = parse_power(r.at("power"), origin, line);
    if (auto it = j.find("grid_gco2_per_kwh"); it != j.end() && !it->is_null()) {
        rec.grid_gco2_per_kwh = r.number(*it, "grid_gco2_per_kwh");
    }
    if (auto it = j.find("source"); it != j.end()) rec.source = r.text("source");
    if (auto it = j.find("warnings"); it != j.end()) {
        if (!it->is_array()) r.fail("warnings", "expected an array of strings");
        for (const auto& w : *it) {
            if (!w.is_string()) r.fail("warnings", "expected an array of strings");
            rec.warnings.push_back(w.get<std::string>());
        }
    }

    try {
        validate(rec);
    } catch (const ValidationError& e) {
        throw ValidationError(e.detail(), e.field(), origin, line);
    }
    return rec;
}

ordered_json record_to_json(const TelemetryRecord& r) {
    ordered_json j;
    j["model"] = r.config.model;
    j["hardware"] = r.config.hardware;
    j["precision_bits"] = r.config.precision_bits;
    j["batch_size"] = r.config.batch_size;
    j["task"] = r.config.task;
    j["total_tokens"] = r.total_tokens;
    j["duration_s"] = r.duration_s;
    j["sample_count"] = r.sample_count;
    j["accuracy"] = r.accuracy;
    j["peak_vram_gb"] = r.peak_vram_gb;

    ordered_json power;
    power["kind"] = power_kind(r.power);
    if (const auto* t = std::get_if<SampledTrace>(&r.power)) {
        ordered_json samples = ordered_json::array();
        for (const auto& s : t->samples) samples.push_back({s.t_offset_s, s.watts});
        power["samples"] = std::move(samples);
    } else if (const auto* tdp = std::get_if<TdpAnchor>(&r.power)) {
        power["tdp_watts"] = tdp->tdp_watts;
    } else if (const auto* dj = std::get_if<DirectJoules>(&r.power)) {
        power["joules_per_query"] = dj->joules_per_query;
    }
    j["power"] = std::move(power);

    if (r.grid_gco2_per_kwh) j["grid_gco2_per_kwh"] = *r.grid_gco2_per_kwh;
    if (!r.source.empty()) j["source"] = r.source;
    if (!r.warnings.empty()) j["warnings"] = r.warnings;
    return j;
}

void check_duplicates(const std::vector<TelemetryRecord>& records,
                      const std::vector<std::size_t>& lines, const std::string& origin) {
    std::map<ConfigId, std::size_t> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto [it, inserted] = seen.emplace(records[i].config, lines[i]);
        if (!inserted) {
            throw ValidationError("duplicate configuration " + to_string(records[i].config) +
                                      " (first seen on line " + std::to_string(it->second) + ")",
                                  {}, origin, lines[i]);
        }
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

TelemetryRecord parse_record_json(std::string_view json_text, const std::string& origin,
                                  std::size_t line) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what(), {}, origin, line);
    }
    return record_from_json(j, origin, line);
}

std::string to_jsonl_line(const TelemetryRecord& record) { return record_to_json(record).dump(); }

void write_jsonl(std::ostream& out, std::span<const TelemetryRecord> records) {
    for (const auto& r : records) out << to_jsonl_line(r) << '\n';
}

LoadResult parse_jsonl(std::istream& in, const std::string& origin) {
    LoadResult result;
    std::vector<std::size_t> lines;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(std::move(line));
        if (is_blank(line)) continue;
        result.records.push_back(parse_record_json(line, origin, line_no));
        lines.push_back(line_no);
    }
    check_duplicates(result.records, lines, origin);
    if (result.records.empty()) result.warnings.push_back(origin + ": no telemetry records");
    return result;
}

LoadResult parse_csv(std::istream& in, const std::string& origin) {
    static const std::vector<std::string> required = {
        "model",        "hardware",   "precision_bits", "batch_size",  "task",
        "total_tokens", "duration_s", "sample_count",   "accuracy",    "peak_vram_gb",
        "power_kind",   "power_value"};

    LoadResult result;
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> column;

    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(std::move(line));
        if (is_blank(line)) continue;
        const auto cells = split_csv_line(line);
        for (std::size_t i = 0; i < cells.size(); ++i) column[cells[i]] = i;
        break;
    }
    if (column.empty()) {
        result.warnings.push_back(origin + ": no telemetry records");
        return result;
    }
    for (const auto& name : required) {
        if (!column.count(name)) throw ValidationError("missing CSV column", name, origin, line_no);
    }

    std::vector<std::size_t> lines;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(std::move(line));
        if (is_blank(line)) continue;
        const auto cells = split_csv_line(line);
        auto cell = [&](const std::string& name) -> std::string {
            const std::size_t idx = column.at(name);
            return idx < cells.size() ? cells[idx] : std::string{};
        };

        // Rebuild the canonical JSON object so both importers share one validator.
        json j;
        auto as_number = [&](const std::string& name, bool integer) -> json {
            const std::string text = cell(name);
            try {
                std::size_t used = 0;
                if (integer) {
                    const long long v = std::stoll(text, &used);
                    if (used != text.size()) throw std::invalid_argument(text);
                    return v;
                }
                const double v = std::stod(text, &used);
                if (used != text.size()) throw std::invalid_argument(text);
                if (!std::isfinite(v)) throw ValidationError("non-finite number", name, origin, line_no);
                return v;
            } catch (const ValidationError&) {
                throw;
            } catch (const std::exception&) {
                throw ValidationError("cannot parse '" + text + "' as a number", name, origin, line_no);
            }
        };
        for (const char* name : {"model", "hardware", "task"}) j[name] = cell(name);
        for (const char* name : {"precision_bits", "batch_size", "total_tokens", "sample_count"}) {
            j[name] = as_number(name, true);
        }
        for (const char* name : {"duration_s", "accuracy", "peak_vram_gb"}) j[name] = as_number(name, false);

        const std::string kind = cell("power_kind");
        if (kind == "tdp") {
            j["power"] = {{"kind", "tdp"}, {"tdp_watts", as_number("power_value", false)}};
        } else if (kind == "joules") {
            j["power"] = {{"kind", "joules"}, {"joules_per_query", as_number("power_value", false)}};
        } else {
            throw ValidationError("CSV supports power_kind tdp or joules, got '" + kind + "'",
                                  "power_kind", origin, line_no);
        }
        if (column.count("grid_gco2_per_kwh") && !cell("grid_gco2_per_kwh").empty()) {
            j["grid_gco2_per_kwh"] = as_number("grid_gco2_per_kwh", false);
        }
        if (column.count("source") && !cell("source").empty()) j["source"] = cell("source");

        result.records.push_back(record_from_json(j, origin, line_no));
        lines.push_back(line_no);
    }
    check_duplicates(result.records, lines, origin);
    if (result.records.empty()) result.warnings.push_back(origin + ": no telemetry records");
    return result;
}

LoadResult load_telemetry(const std::filesystem::path& path, TelemetryFormat format) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return format == TelemetryFormat::csv ? parse_csv(in, path.string()) : parse_jsonl(in, path.string());
}

LoadResult load_telemetry(const std::filesystem::path& path) {
    const auto format = path.extension() == ".csv" ? TelemetryFormat::csv : TelemetryFormat::jsonl;
    return load_telemetry(path, format);
}

LoadResult load_telemetry_files(std::vector<std::filesystem::path> paths) {
    std::sort(paths.begin(), paths.end());
    std::vector<std::future<LoadResult>> pending;
    pending.reserve(paths.size());
    for (const auto& p : paths) {
        pending.push_back(std::async(std::launch::async, [p] { return load_telemetry(p); }));
    }
    LoadResult merged;
    for (auto& f : pending) {
        LoadResult part = f.get();
        merged.records.insert(merged.records.end(), std::make_move_iterator(part.records.begin()),
                              std::make_move_iterator(part.records.end()));
        merged.warnings.insert(merged.warnings.end(), part.warnings.begin(), part.warnings.end());
    }
    return merged;
}

std::vector<std::filesystem::path> expand_inputs(const std::vector<std::filesystem::path>& inputs) {
    namespace fs = std::filesystem;
    std::vector<fs::path> out;
    for (const auto& input : inputs) {
        std::error_code ec;
        if (fs::is_directory(input, ec)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::recursive_directory_iterator(input)) {
                if (!entry.is_regular_file()) continue;
                const auto ext = entry.path().extension();
                if (ext == ".jsonl" || ext == ".csv") found.push_back(entry.path());
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else if (fs::exists(input, ec)) {
            out.push_back(input);
        } else {
            throw IoError("no such file or directory: " + input.string());
        }
    }
    return out;
}

}  // namespace qtrap
