#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qtrap/telemetry.hpp"

namespace qtrap {

enum class TelemetryFormat { jsonl, csv };

struct LoadResult {
    std::vector<TelemetryRecord> records;
    std::vector<std::string> warnings;
};

/// Parses canonical JSONL (one record per line, blank lines skipped).
/// Records come back in file order. Throws ValidationError with origin and
/// line on the first schema violation, invariant violation or duplicate
/// ConfigId.
LoadResult parse_jsonl(std::istream& in, const std::string& origin = "<stream>");

/// CSV convenience importer. Header row required; power is a scalar column
/// pair (power_kind in {tdp, joules}, power_value), so traces are not
/// representable.
LoadResult parse_csv(std::istream& in, const std::string& origin = "<stream>");

LoadResult load_telemetry(const std::filesystem::path& path, TelemetryFormat format);

/// Format inferred from the extension (.csv, anything else is JSONL).
LoadResult load_telemetry(const std::filesystem::path& path);

/// Loads several files concurrently and merges them in lexicographic path
/// order, independent of scheduling.
LoadResult load_telemetry_files(std::vector<std::filesystem::path> paths);

/// Directories expand to the *.jsonl and *.csv files beneath them, sorted.
/// Throws IoError for a path that does not exist.
std::vector<std::filesystem::path> expand_inputs(const std::vector<std::filesystem::path>& inputs);

TelemetryRecord parse_record_json(std::string_view json_text, const std::string& origin = {},
                                  std::size_t line = 0);
std::string to_jsonl_line(const TelemetryRecord& record);
void write_jsonl(std::ostream& out, std::span<const TelemetryRecord> records);

}  // namespace qtrap
