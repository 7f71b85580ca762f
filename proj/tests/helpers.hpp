#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chronofill/common.hpp"
#include "chronofill/table.hpp"

namespace chronofill::testing {

// Collects library warnings for the current scope; restores the default
// stderr sink on destruction.
class WarningCapture {
public:
    WarningCapture() {
        set_warning_handler([this](const std::string& message) { messages.push_back(message); });
    }
    ~WarningCapture() { set_warning_handler({}); }

    bool any_contains(const std::string& needle) const {
        for (const auto& message : messages)
            if (message.find(needle) != std::string::npos) return true;
        return false;
    }

    std::vector<std::string> messages;
};

// Numeric-only table with an ordinal time column 0..n_rows-1 followed by the
// named value columns (row-major values; NaN marks Missing).
inline Table numeric_table(const std::vector<std::string>& value_columns,
                           const std::vector<std::vector<double>>& rows) {
    std::vector<std::string> names{"time"};
    std::vector<ColumnKind> kinds{ColumnKind::time(TimeFormat::OrdinalIndex)};
    for (const auto& name : value_columns) {
        names.push_back(name);
        kinds.push_back(ColumnKind::numeric());
    }
    std::vector<Cell> cells;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        cells.push_back(Cell::number(static_cast<double>(r)));
        for (double value : rows[r])
            cells.push_back(value != value ? Cell::missing() : Cell::number(value));
    }
    return Table(std::move(names), std::move(kinds), std::move(cells));
}

// Fresh scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        root_ = std::filesystem::temp_directory_path() /
                ("chronofill-test-" + tag + "-" + std::to_string(counter()++));
        std::filesystem::create_directories(root_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(root_, ec);
    }

    std::string path(const std::string& name) const { return (root_ / name).string(); }
    const std::filesystem::path& root() const { return root_; }

private:
    static int& counter() {
        static int n = 0;
        return n;
    }
    std::filesystem::path root_;
};

} // namespace chronofill::testing
