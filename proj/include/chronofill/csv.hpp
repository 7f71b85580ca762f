#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chronofill/table.hpp"

namespace chronofill {

// Raw CSV grid, header included as row 0. Handles quoted fields ("" escape),
// LF or CRLF line endings.
std::vector<std::vector<std::string>> read_csv_rows(const std::string& path);
std::vector<std::vector<std::string>> parse_csv_text(const std::string& text,
                                                     const std::string& origin);

// Minimal CSV quoting: returns the field as-is unless it contains a comma,
// quote, or line break.
std::string csv_quote(std::string_view field);

// Time-literal forms, one per TimeFormat (OrdinalIndex is a plain number and
// never pattern-matches — it must be hinted):
//   DatetimeYMDH  "y/mm/dd/hh"   e.g. 2012/03/05/14
//   HourMinute    "hh:mm"        e.g. 06:30
//   MinSecMs      "mm:ss:mmm"    e.g. 03:25:127
std::optional<TimeFormat> match_time_format(std::string_view text);

// Converts between the literal form and the canonical numeric stored in a
// Time cell: packed y*1e6+m*1e4+d*1e2+h for DatetimeYMDH, minute-of-day for
// HourMinute, total milliseconds for MinSecMs, the raw value for
// OrdinalIndex.
double parse_time_value(std::string_view text, TimeFormat format, const std::string& context);
std::string format_time_value(double value, TimeFormat format);

// Picks a ColumnKind per column: every non-empty field parses as a finite
// number → Numeric; every non-empty field matches one time pattern → Time;
// anything else → Categorical. A hint names the time column explicitly (for
// numeric axes the hinted column becomes Time(OrdinalIndex)); without one,
// two pattern-matching columns are an ambiguity error. Returned schema
// carries observed-value statistics.
Schema infer_schema(const std::vector<std::vector<std::string>>& raw_rows,
                    const std::optional<std::string>& time_column_hint = std::nullopt);

// Builds a Table from a raw grid under the given schema (header must match
// the schema's column names in order).
Table table_from_rows(const std::vector<std::vector<std::string>>& raw_rows,
                      const Schema& schema, const std::string& origin);

// Reads a CSV into a Table, inferring the schema unless one is supplied.
Table read_csv(const std::string& path, const std::optional<Schema>& schema = std::nullopt);

// Writes a Table: header + one line per row, LF endings, empty field for
// Missing, 17-significant-digit floats, canonical time literals, minimal
// quoting. The write is atomic (temp file + rename).
void write_csv(const Table& table, const std::string& path);

// Ground-truth sidecar (row_index,column_name,value) recording the cells a
// mask hid. Reading needs the masked table to type each value by column.
void write_ground_truth(const std::vector<GroundTruthCell>& truth, const std::string& path);
std::vector<GroundTruthCell> read_ground_truth(const std::string& path, const Table& reference);

} // namespace chronofill
