#include "chronofill/table.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <set>
#include <unordered_set>

namespace chronofill {

const std::string* intern_label(std::string_view label) {
    static std::mutex mutex;
    static std::set<std::string, std::less<>> pool;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = pool.find(label);
    if (it == pool.end()) it = pool.emplace(label).first;
    return &*it;
}

Cell Cell::number(double value) {
    if (!std::isfinite(value))
        throw Error("cell values must be finite; missing values are represented "
                    "explicitly, not as NaN");
    Cell c;
    c.kind_ = Kind::Number;
    c.number_ = value;
    return c;
}

Cell Cell::category(std::string_view label) {
    if (label.empty()) throw Error("categorical labels must be non-empty");
    Cell c;
    c.kind_ = Kind::Category;
    c.label_ = intern_label(label);
    return c;
}

double Cell::number() const {
    if (kind_ != Kind::Number) throw Error("cell does not hold a number");
    return number_;
}

const std::string& Cell::label() const {
    if (kind_ != Kind::Category) throw Error("cell does not hold a category");
    return *label_;
}

bool Cell::operator==(const Cell& other) const {
    if (kind_ != other.kind_) return false;
    switch (kind_) {
    case Kind::Missing: return true;
    case Kind::Number: return number_ == other.number_;
    case Kind::Category: return label_ == other.label_; // interned
    }
    return false;
}

std::optional<std::size_t> Schema::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return i;
    return std::nullopt;
}

namespace {

const char* kind_word(ColumnKind::Tag tag) {
    switch (tag) {
    case ColumnKind::Tag::Time: return "time";
    case ColumnKind::Tag::Numeric: return "numeric";
    case ColumnKind::Tag::Categorical: return "categorical";
    }
    return "?";
}

} // namespace

Table::Table(std::vector<std::string> names, std::vector<ColumnKind> kinds,
             std::vector<Cell> cells_row_major)
    : names_(std::move(names)), kinds_(std::move(kinds)), cells_(std::move(cells_row_major)) {
    if (names_.empty()) throw Error("a table needs at least one column");
    if (names_.size() != kinds_.size())
        throw Error("column names and kinds differ in length");
    if (cells_.size() % names_.size() != 0)
        throw Error("cell count is not a multiple of the column count");
    n_rows_ = cells_.size() / names_.size();

    std::unordered_set<std::string_view> seen;
    for (const auto& name : names_) {
        if (name.empty()) throw Error("column names must be non-empty");
        if (!seen.insert(name).second)
            throw Error("duplicate column name '" + name + "'");
    }

    for (std::size_t c = 0; c < kinds_.size(); ++c) {
        if (!kinds_[c].is_time()) continue;
        if (time_col_)
            throw Error("at most one time column is allowed; found '" +
                        names_[*time_col_] + "' and '" + names_[c] + "'");
        time_col_ = c;
    }

    for (std::size_t r = 0; r < n_rows_; ++r) {
        for (std::size_t c = 0; c < n_cols(); ++c) {
            const Cell& cell = cells_[r * n_cols() + c];
            const ColumnKind& kind = kinds_[c];
            if (cell.is_missing()) {
                if (kind.is_time())
                    throw Error("time column '" + names_[c] + "' has a missing value at row " +
                                std::to_string(r) + "; the time axis must be fully observed");
                continue;
            }
            bool ok = kind.is_categorical() ? cell.is_category() : cell.is_number();
            if (!ok)
                throw Error("column '" + names_[c] + "' is " + kind_word(kind.tag) +
                            " but row " + std::to_string(r) + " holds a " +
                            (cell.is_number() ? "number" : "category"));
        }
    }

    if (time_col_ && n_rows_ > 1) {
        std::vector<std::size_t> order(n_rows_);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return cells_[a * n_cols() + *time_col_].number() <
                   cells_[b * n_cols() + *time_col_].number();
        });
        bool already = std::is_sorted(order.begin(), order.end());
        if (!already) {
            std::vector<Cell> sorted(cells_.size());
            for (std::size_t r = 0; r < n_rows_; ++r)
                std::copy_n(cells_.begin() + static_cast<std::ptrdiff_t>(order[r] * n_cols()),
                            n_cols(), sorted.begin() + static_cast<std::ptrdiff_t>(r * n_cols()));
            cells_ = std::move(sorted);
        }
    }
}

std::size_t Table::column_index(std::string_view name) const {
    if (auto idx = find_column(name)) return *idx;
    throw Error("unknown column '" + std::string(name) + "'");
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    return std::nullopt;
}

Schema Table::schema() const {
    Schema schema;
    schema.columns.reserve(n_cols());
    for (std::size_t c = 0; c < n_cols(); ++c) {
        ColumnSchema col;
        col.name = names_[c];
        col.kind = kinds_[c];
        if (kinds_[c].is_categorical()) {
            std::set<std::string> vocab;
            for (std::size_t r = 0; r < n_rows_; ++r) {
                const Cell& cell = this->cell(r, c);
                if (cell.is_category()) {
                    vocab.insert(cell.label());
                    ++col.observed_count;
                }
            }
            col.vocabulary.assign(vocab.begin(), vocab.end());
        } else {
            double sum = 0.0;
            for (std::size_t r = 0; r < n_rows_; ++r) {
                const Cell& cell = this->cell(r, c);
                if (!cell.is_number()) continue;
                sum += cell.number();
                ++col.observed_count;
            }
            if (col.observed_count > 0) {
                col.mean = sum / static_cast<double>(col.observed_count);
                double ss = 0.0;
                for (std::size_t r = 0; r < n_rows_; ++r) {
                    const Cell& cell = this->cell(r, c);
                    if (!cell.is_number()) continue;
                    double d = cell.number() - col.mean;
                    ss += d * d;
                }
                col.stddev = std::sqrt(ss / static_cast<double>(col.observed_count));
            }
        }
        schema.columns.push_back(std::move(col));
    }
    return schema;
}

std::size_t Table::count_missing() const {
    return static_cast<std::size_t>(
        std::count_if(cells_.begin(), cells_.end(), [](const Cell& c) { return c.is_missing(); }));
}

std::size_t Table::count_maskable() const {
    std::size_t count = 0;
    for (std::size_t c = 0; c < n_cols(); ++c) {
        if (time_col_ && c == *time_col_) continue;
        for (std::size_t r = 0; r < n_rows_; ++r)
            if (cell(r, c).has_value()) ++count;
    }
    return count;
}

Table Table::with_cell(std::size_t row, std::size_t col, Cell value) const {
    if (row >= n_rows_ || col >= n_cols()) throw Error("cell coordinate out of range");
    std::vector<Cell> cells = cells_;
    cells[row * n_cols() + col] = std::move(value);
    return Table(names_, kinds_, std::move(cells));
}

bool Table::operator==(const Table& other) const {
    return names_ == other.names_ && kinds_ == other.kinds_ && cells_ == other.cells_;
}

ApplyMaskResult apply_mask(const Table& table, const std::vector<MaskCoord>& coordinates) {
    std::vector<Cell> cells;
    cells.reserve(table.n_rows() * table.n_cols());
    for (std::size_t r = 0; r < table.n_rows(); ++r)
        for (std::size_t c = 0; c < table.n_cols(); ++c)
            cells.push_back(table.cell(r, c));

    std::vector<GroundTruthCell> truth;
    truth.reserve(coordinates.size());
    for (const auto& coord : coordinates) {
        std::size_t col = table.column_index(coord.column);
        if (coord.row >= table.n_rows())
            throw Error("mask row " + std::to_string(coord.row) + " is out of range (" +
                        std::to_string(table.n_rows()) + " rows)");
        if (table.kind(col).is_time())
            throw Error("refusing to mask time column '" + coord.column + "'");
        Cell& cell = cells[coord.row * table.n_cols() + col];
        if (cell.is_missing())
            throw Error("cell (" + std::to_string(coord.row) + ", '" + coord.column +
                        "') is already missing; masks must target observed cells exactly once");
        truth.push_back({coord.row, coord.column, cell});
        cell = Cell::missing();
    }

    Table masked(std::vector<std::string>(table.column_names()),
                 [&] {
                     std::vector<ColumnKind> kinds;
                     kinds.reserve(table.n_cols());
                     for (std::size_t c = 0; c < table.n_cols(); ++c) kinds.push_back(table.kind(c));
                     return kinds;
                 }(),
                 std::move(cells));
    return {std::move(masked), std::move(truth)};
}

} // namespace chronofill
