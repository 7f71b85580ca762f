#include "chronofill/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "chronofill/common.hpp"

namespace chronofill {

namespace {

bool needs_quoting(std::string_view field) {
    return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

void append_field(std::string& out, std::string_view field) {
    if (!needs_quoting(field)) {
        out += field;
        return;
    }
    out += '"';
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
    });
}

// Splits on sep into exactly `counts.size()` segments whose digit widths
// match `counts` (0 = any positive width). Returns parsed integers or
// nothing if the shape is wrong.
std::optional<std::vector<long>> split_digits(std::string_view s, char sep,
                                              const std::vector<int>& counts) {
    std::vector<long> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        std::size_t end = (i + 1 == counts.size()) ? s.size() : s.find(sep, start);
        if (end == std::string_view::npos) return std::nullopt;
        std::string_view seg = s.substr(start, end - start);
        if (!all_digits(seg)) return std::nullopt;
        if (counts[i] != 0 && seg.size() != static_cast<std::size_t>(counts[i])) return std::nullopt;
        if (counts[i] == 0 && seg.size() > 6) return std::nullopt; // cap year width
        parts.push_back(std::stol(std::string(seg)));
        start = end + 1;
    }
    return parts;
}

std::optional<std::vector<long>> match_datetime(std::string_view s) {
    auto parts = split_digits(s, '/', {0, 2, 2, 2});
    if (!parts) return std::nullopt;
    long m = (*parts)[1], d = (*parts)[2], h = (*parts)[3];
    if (m < 1 || m > 12 || d < 1 || d > 31 || h < 0 || h > 23) return std::nullopt;
    return parts;
}

std::optional<std::vector<long>> match_hour_minute(std::string_view s) {
    auto parts = split_digits(s, ':', {2, 2});
    if (!parts) return std::nullopt;
    long h = (*parts)[0], m = (*parts)[1];
    if (h > 23 || m > 59) return std::nullopt;
    return parts;
}

std::optional<std::vector<long>> match_min_sec_ms(std::string_view s) {
    auto parts = split_digits(s, ':', {2, 2, 3});
    if (!parts) return std::nullopt;
    long sec = (*parts)[1];
    if (sec > 59) return std::nullopt; // minute 00-99, ms 000-999 by width
    return parts;
}

bool parses_as_number(std::string_view s) {
    try {
        parse_double(s, "");
        return true;
    } catch (const Error&) {
        return false;
    }
}

} // namespace

std::string csv_quote(std::string_view field) {
    std::string out;
    append_field(out, field);
    return out;
}

std::vector<std::vector<std::string>> parse_csv_text(const std::string& text,
                                                     const std::string& origin) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            row_started = true;
            break;
        case ',':
            end_field();
            row_started = true;
            break;
        case '\r':
            break; // tolerate CRLF
        case '\n':
            end_row();
            break;
        default:
            field += c;
            row_started = true;
        }
    }
    if (in_quotes) throw Error(origin + ": unterminated quoted field");
    if (row_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
    return parse_csv_text(read_text_file(path), path);
}

std::optional<TimeFormat> match_time_format(std::string_view text) {
    if (match_datetime(text)) return TimeFormat::DatetimeYMDH;
    if (match_hour_minute(text)) return TimeFormat::HourMinute;
    if (match_min_sec_ms(text)) return TimeFormat::MinSecMs;
    return std::nullopt;
}

double parse_time_value(std::string_view text, TimeFormat format, const std::string& context) {
    switch (format) {
    case TimeFormat::DatetimeYMDH:
        if (auto p = match_datetime(text))
            return static_cast<double>((*p)[0]) * 1e6 + static_cast<double>((*p)[1]) * 1e4 +
                   static_cast<double>((*p)[2]) * 1e2 + static_cast<double>((*p)[3]);
        throw Error(context + ": '" + std::string(text) + "' is not a y/mm/dd/hh timestamp");
    case TimeFormat::HourMinute:
        if (auto p = match_hour_minute(text))
            return static_cast<double>((*p)[0] * 60 + (*p)[1]);
        throw Error(context + ": '" + std::string(text) + "' is not an hh:mm timestamp");
    case TimeFormat::MinSecMs:
        if (auto p = match_min_sec_ms(text))
            return static_cast<double>((*p)[0] * 60000 + (*p)[1] * 1000 + (*p)[2]);
        throw Error(context + ": '" + std::string(text) + "' is not an mm:ss:mmm timestamp");
    case TimeFormat::OrdinalIndex:
        return parse_double(text, context);
    }
    throw Error(context + ": unknown time format");
}

std::string format_time_value(double value, TimeFormat format) {
    char buf[40];
    long long v = std::llround(value);
    switch (format) {
    case TimeFormat::DatetimeYMDH: {
        long long y = v / 1000000, rest = v % 1000000;
        long long m = rest / 10000, d = (rest % 10000) / 100, h = rest % 100;
        if (v < 0 || m < 1 || m > 12 || d < 1 || d > 31 || h > 23)
            throw Error("value " + format_double(value) + " is not a packed y/mm/dd/hh timestamp");
        std::snprintf(buf, sizeof(buf), "%lld/%02lld/%02lld/%02lld", y, m, d, h);
        return buf;
    }
    case TimeFormat::HourMinute:
        if (v < 0 || v > 1439)
            throw Error("value " + format_double(value) + " is not a minute-of-day in [0,1439]");
        std::snprintf(buf, sizeof(buf), "%02lld:%02lld", v / 60, v % 60);
        return buf;
    case TimeFormat::MinSecMs:
        if (v < 0 || v >= 100 * 60000)
            throw Error("value " + format_double(value) + " is out of mm:ss:mmm range");
        std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%03lld", v / 60000, (v / 1000) % 60,
                      v % 1000);
        return buf;
    case TimeFormat::OrdinalIndex:
        return format_double(value);
    }
    throw Error("unknown time format");
}

Schema infer_schema(const std::vector<std::vector<std::string>>& raw_rows,
                    const std::optional<std::string>& time_column_hint) {
    if (raw_rows.empty()) throw Error("schema inference needs at least a header row");
    const auto& header = raw_rows[0];
    for (std::size_t r = 1; r < raw_rows.size(); ++r)
        if (raw_rows[r].size() != header.size())
            throw Error("ragged CSV: row " + std::to_string(r - 1) + " has " +
                        std::to_string(raw_rows[r].size()) + " fields, header has " +
                        std::to_string(header.size()));

    std::vector<ColumnKind> kinds(header.size());
    std::vector<bool> time_candidate(header.size(), false);
    for (std::size_t c = 0; c < header.size(); ++c) {
        bool numeric = true;
        std::optional<TimeFormat> fmt;
        bool time_ok = true;
        bool any = false;
        for (std::size_t r = 1; r < raw_rows.size(); ++r) {
            const std::string& field = raw_rows[r][c];
            if (field.empty()) continue;
            any = true;
            if (numeric && !parses_as_number(field)) numeric = false;
            if (time_ok) {
                auto m = match_time_format(field);
                if (!m || (fmt && *fmt != *m)) time_ok = false;
                else fmt = m;
            }
            if (!numeric && !time_ok) break;
        }
        if (numeric) {
            kinds[c] = ColumnKind::numeric();
        } else if (any && time_ok && fmt) {
            kinds[c] = ColumnKind::time(*fmt);
            time_candidate[c] = true;
        } else {
            kinds[c] = ColumnKind::categorical();
        }
    }

    if (time_column_hint) {
        std::size_t hinted = header.size();
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == *time_column_hint) hinted = c;
        if (hinted == header.size())
            throw Error("time column hint '" + *time_column_hint + "' is not in the header");
        if (kinds[hinted].is_numeric()) {
            kinds[hinted] = ColumnKind::time(TimeFormat::OrdinalIndex);
        } else if (!time_candidate[hinted]) {
            throw Error("hinted time column '" + *time_column_hint +
                        "' is neither numeric nor a recognized time literal");
        }
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == hinted || !time_candidate[c]) continue;
            warn("column '" + header[c] + "' looks like a time column but '" +
                 *time_column_hint + "' was hinted; treating it as categorical");
            kinds[c] = ColumnKind::categorical();
        }
    } else {
        std::vector<std::size_t> candidates;
        for (std::size_t c = 0; c < header.size(); ++c)
            if (time_candidate[c]) candidates.push_back(c);
        if (candidates.size() > 1)
            throw Error("columns '" + header[candidates[0]] + "' and '" + header[candidates[1]] +
                        "' both match time patterns; pass a time column hint to disambiguate");
    }

    Schema kinds_only;
    kinds_only.columns.resize(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        kinds_only.columns[c].name = header[c];
        kinds_only.columns[c].kind = kinds[c];
    }
    // Route through Table construction so the returned schema carries
    // observed-value statistics and validation has run once.
    return table_from_rows(raw_rows, kinds_only, "inferred data").schema();
}

Table table_from_rows(const std::vector<std::vector<std::string>>& raw_rows,
                      const Schema& schema, const std::string& origin) {
    if (raw_rows.empty()) throw Error(origin + ": missing header row");
    const auto& header = raw_rows[0];
    if (header.size() != schema.columns.size())
        throw Error(origin + ": header has " + std::to_string(header.size()) +
                    " columns, schema expects " + std::to_string(schema.columns.size()));
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] != schema.columns[c].name)
            throw Error(origin + ": header column " + std::to_string(c) + " is '" + header[c] +
                        "', schema expects '" + schema.columns[c].name + "'");

    std::vector<std::string> names;
    std::vector<ColumnKind> kinds;
    names.reserve(header.size());
    kinds.reserve(header.size());
    for (const auto& col : schema.columns) {
        names.push_back(col.name);
        kinds.push_back(col.kind);
    }

    std::vector<Cell> cells;
    cells.reserve((raw_rows.size() - 1) * header.size());
    for (std::size_t r = 1; r < raw_rows.size(); ++r) {
        if (raw_rows[r].size() != header.size())
            throw Error(origin + ": row " + std::to_string(r - 1) + " has " +
                        std::to_string(raw_rows[r].size()) + " fields, expected " +
                        std::to_string(header.size()));
        for (std::size_t c = 0; c < header.size(); ++c) {
            const std::string& field = raw_rows[r][c];
            std::string context =
                origin + ": row " + std::to_string(r - 1) + ", column '" + names[c] + "'";
            if (field.empty()) {
                cells.push_back(Cell::missing());
            } else if (kinds[c].is_categorical()) {
                cells.push_back(Cell::category(field));
            } else if (kinds[c].is_time()) {
                cells.push_back(Cell::number(parse_time_value(field, kinds[c].format, context)));
            } else {
                cells.push_back(Cell::number(parse_double(field, context)));
            }
        }
    }
    return Table(std::move(names), std::move(kinds), std::move(cells));
}

Table read_csv(const std::string& path, const std::optional<Schema>& schema) {
    auto rows = read_csv_rows(path);
    if (schema) return table_from_rows(rows, *schema, path);
    return table_from_rows(rows, infer_schema(rows), path);
}

void write_csv(const Table& table, const std::string& path) {
    std::string out;
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
        if (c) out += ',';
        append_field(out, table.column_name(c));
    }
    out += '\n';
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        for (std::size_t c = 0; c < table.n_cols(); ++c) {
            if (c) out += ',';
            const Cell& cell = table.cell(r, c);
            if (cell.is_missing()) continue;
            if (cell.is_category()) {
                append_field(out, cell.label());
            } else if (table.kind(c).is_time()) {
                append_field(out, format_time_value(cell.number(), table.kind(c).format));
            } else {
                append_field(out, format_double(cell.number()));
            }
        }
        out += '\n';
    }
    write_text_file_atomic(path, out);
}

void write_ground_truth(const std::vector<GroundTruthCell>& truth, const std::string& path) {
    std::string out = "row_index,column_name,value\n";
    for (const auto& cell : truth) {
        out += std::to_string(cell.row);
        out += ',';
        append_field(out, cell.column);
        out += ',';
        append_field(out, cell.value.is_category() ? cell.value.label()
                                                   : format_double(cell.value.number()));
        out += '\n';
    }
    write_text_file_atomic(path, out);
}

std::vector<GroundTruthCell> read_ground_truth(const std::string& path, const Table& reference) {
    auto rows = read_csv_rows(path);
    if (rows.empty() || rows[0] != std::vector<std::string>{"row_index", "column_name", "value"})
        throw Error(path + ": expected header row_index,column_name,value");
    std::vector<GroundTruthCell> truth;
    truth.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 3)
            throw Error(path + ": row " + std::to_string(r - 1) + " has " +
                        std::to_string(rows[r].size()) + " fields, expected 3");
        std::string context = path + ": row " + std::to_string(r - 1);
        GroundTruthCell cell;
        double row_index = parse_double(rows[r][0], context);
        if (row_index < 0 || row_index != std::floor(row_index))
            throw Error(context + ": row_index must be a non-negative integer");
        cell.row = static_cast<std::size_t>(row_index);
        cell.column = rows[r][1];
        std::size_t col = reference.column_index(cell.column);
        if (reference.kind(col).is_categorical())
            cell.value = Cell::category(rows[r][2]);
        else
            cell.value = Cell::number(parse_double(rows[r][2], context));
        truth.push_back(std::move(cell));
    }
    return truth;
}

} // namespace chronofill
