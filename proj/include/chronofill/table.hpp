#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chronofill/common.hpp"

namespace chronofill {

// How the single time column's raw values are written and, downstream, which
// encoder expands them into features.
enum class TimeFormat {
    DatetimeYMDH, // "y/mm/dd/hh", stored packed as y*1e6 + m*1e4 + d*1e2 + h
    HourMinute,   // "hh:mm", stored as minute-of-day
    MinSecMs,     // "mm:ss:mmm", stored as total milliseconds
    OrdinalIndex, // plain numeric time axis, stored as-is
};

struct ColumnKind {
    enum class Tag { Time, Numeric, Categorical };

    Tag tag = Tag::Numeric;
    TimeFormat format = TimeFormat::OrdinalIndex; // meaningful only for Time

    static ColumnKind numeric() { return {Tag::Numeric, TimeFormat::OrdinalIndex}; }
    static ColumnKind categorical() { return {Tag::Categorical, TimeFormat::OrdinalIndex}; }
    static ColumnKind time(TimeFormat fmt) { return {Tag::Time, fmt}; }

    bool is_time() const { return tag == Tag::Time; }
    bool is_numeric() const { return tag == Tag::Numeric; }
    bool is_categorical() const { return tag == Tag::Categorical; }

    bool operator==(const ColumnKind& other) const {
        if (tag != other.tag) return false;
        return tag != Tag::Time || format == other.format;
    }
};

// Interns a categorical label; the returned pointer is stable for the
// process lifetime, so label equality is pointer equality.
const std::string* intern_label(std::string_view label);

// One observation: a finite number, an interned categorical label, or
// explicitly Missing. NaN/inf never enter a table.
class Cell {
public:
    Cell() = default;

    static Cell missing() { return Cell(); }
    static Cell number(double value);
    static Cell category(std::string_view label);

    bool is_missing() const { return kind_ == Kind::Missing; }
    bool is_number() const { return kind_ == Kind::Number; }
    bool is_category() const { return kind_ == Kind::Category; }
    bool has_value() const { return !is_missing(); }

    double number() const;
    const std::string& label() const;

    bool operator==(const Cell& other) const;
    bool operator!=(const Cell& other) const { return !(*this == other); }

private:
    enum class Kind : std::uint8_t { Missing, Number, Category };

    Kind kind_ = Kind::Missing;
    double number_ = 0.0;
    const std::string* label_ = nullptr;
};

// Per-column observed-value statistics plus the declared kind; produced by
// schema inference and by Table::schema().
struct ColumnSchema {
    std::string name;
    ColumnKind kind;
    std::size_t observed_count = 0;
    double mean = 0.0;   // numeric/time columns
    double stddev = 0.0; // population std over observed values
    std::vector<std::string> vocabulary; // categorical: sorted, no duplicates
};

struct Schema {
    std::vector<ColumnSchema> columns;

    std::optional<std::size_t> column_index(std::string_view name) const;
};

// Wide-format immutable table: one row per time point, one column per
// series. At most one Time column; rows are kept sorted ascending by its
// value (stable, so ties preserve input order).
class Table {
public:
    Table(std::vector<std::string> names, std::vector<ColumnKind> kinds,
          std::vector<Cell> cells_row_major);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return names_.size(); }

    const std::vector<std::string>& column_names() const { return names_; }
    const std::string& column_name(std::size_t col) const { return names_[col]; }
    const ColumnKind& kind(std::size_t col) const { return kinds_[col]; }

    std::size_t column_index(std::string_view name) const; // throws on unknown
    std::optional<std::size_t> find_column(std::string_view name) const;
    std::optional<std::size_t> time_column() const { return time_col_; }

    const Cell& cell(std::size_t row, std::size_t col) const {
        return cells_[row * n_cols() + col];
    }

    // Observed-statistics schema for the current contents.
    Schema schema() const;

    std::size_t count_missing() const;
    // Cells eligible for masking: observed, outside the Time column.
    std::size_t count_maskable() const;

    Table with_cell(std::size_t row, std::size_t col, Cell value) const;

    bool operator==(const Table& other) const;

private:
    std::vector<std::string> names_;
    std::vector<ColumnKind> kinds_;
    std::vector<Cell> cells_;
    std::size_t n_rows_ = 0;
    std::optional<std::size_t> time_col_;
};

// Cell coordinate addressed by row index and column name.
struct MaskCoord {
    std::size_t row = 0;
    std::string column;

    bool operator==(const MaskCoord& other) const {
        return row == other.row && column == other.column;
    }
};

// Hidden original recorded when a cell is masked.
struct GroundTruthCell {
    std::size_t row = 0;
    std::string column;
    Cell value;
};

struct ApplyMaskResult {
    Table masked;
    std::vector<GroundTruthCell> ground_truth; // in mask iteration order
};

// Hides the addressed cells, recording their originals. Refuses coordinates
// that are already Missing (including duplicates) or in the Time column.
ApplyMaskResult apply_mask(const Table& table, const std::vector<MaskCoord>& coordinates);

} // namespace chronofill
