#include "chronofill/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chronofill/common.hpp"
#include "chronofill/csv.hpp"
#include "chronofill/metrics.hpp"
#include "chronofill/rng.hpp"

namespace chronofill {

namespace {

struct Candidate {
    std::size_t row;
    std::size_t col;
    double percentile; // of the weighting value, in [0,1]
};

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Percentile ranks in [0,1]: average rank over ties, normalized by n−1.
// A singleton (or all-tied) input sits at 0.5.
std::vector<double> percentile_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<double> ranks(n, 0.5);
    if (n < 2) return ranks;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mean_rank = static_cast<double>(i + j) / 2.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = mean_rank / static_cast<double>(n - 1);
        i = j + 1;
    }
    return ranks;
}

// Collects the maskable cells in row-major order: observed, non-Time, and
// outside the MAR driver column.
std::vector<Candidate> collect_candidates(const Table& table, const Mechanism& mechanism) {
    std::optional<std::size_t> driver_col;
    if (mechanism.kind == Mechanism::Kind::MAR) {
        driver_col = table.column_index(mechanism.driver);
        const ColumnKind& kind = table.kind(*driver_col);
        if (kind.is_categorical())
            throw Error("driver column '" + mechanism.driver + "' must be numeric or time");
        for (std::size_t r = 0; r < table.n_rows(); ++r)
            if (table.cell(r, *driver_col).is_missing())
                throw Error("driver column '" + mechanism.driver +
                            "' has missing values; the driver must be fully observed");
    }

    // Per-row or per-cell percentiles, depending on the mechanism.
    std::vector<double> row_percentile;
    if (driver_col) {
        std::vector<double> driver_values(table.n_rows());
        for (std::size_t r = 0; r < table.n_rows(); ++r)
            driver_values[r] = table.cell(r, *driver_col).number();
        row_percentile = percentile_ranks(driver_values);
    }

    std::vector<Candidate> candidates;
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
        if (table.kind(c).is_time()) continue;
        if (driver_col && c == *driver_col) continue;

        std::vector<std::size_t> rows;
        std::vector<double> values;
        const bool numeric = table.kind(c).is_numeric();
        for (std::size_t r = 0; r < table.n_rows(); ++r) {
            const Cell& cell = table.cell(r, c);
            if (cell.is_missing()) continue;
            rows.push_back(r);
            if (numeric) values.push_back(cell.number());
        }

        std::vector<double> cell_percentile;
        if (mechanism.kind == Mechanism::Kind::MNAR) {
            if (!numeric) {
                // No value ordering exists for labels; treat the column as
                // uninformative rather than refusing to mask it.
                cell_percentile.assign(rows.size(), 0.5);
            } else {
                cell_percentile = percentile_ranks(values);
            }
        }

        for (std::size_t i = 0; i < rows.size(); ++i) {
            double p = 0.5;
            if (mechanism.kind == Mechanism::Kind::MAR) p = row_percentile[rows[i]];
            else if (mechanism.kind == Mechanism::Kind::MNAR) p = cell_percentile[i];
            candidates.push_back({rows[i], c, p});
        }
    }
    return candidates;
}

// Solves Σ logistic(α + shift_i) = count for α by bisection.
double calibrate_intercept(const std::vector<double>& shifts, double count, double beta) {
    const double half_width = std::abs(beta) / 2.0 + 60.0;
    double lo = -half_width, hi = half_width;
    auto total = [&](double alpha) {
        double sum = 0.0;
        for (double s : shifts) sum += logistic(alpha + s);
        return sum;
    };
    const double at_lo = total(lo), at_hi = total(hi);
    if (!(at_lo <= count && count <= at_hi))
        throw Error("weight calibration cannot bracket the target count (is beta finite?)");
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = (lo + hi) / 2.0;
        if (total(mid) < count) lo = mid;
        else hi = mid;
    }
    return (lo + hi) / 2.0;
}

Mask build_mask(const Table& table, const Mechanism& mechanism, double target_rate,
                std::uint64_t seed) {
    if (!(target_rate > 0.0 && target_rate < 1.0))
        throw Error("target rate must lie strictly between 0 and 1");
    if (!std::isfinite(mechanism.beta))
        throw Error("mechanism steepness beta must be finite");

    const auto candidates = collect_candidates(table, mechanism);
    const std::size_t n = candidates.size();
    if (n == 0) throw Error("table has no maskable cells");

    std::size_t count =
        static_cast<std::size_t>(std::llround(target_rate * static_cast<double>(n)));
    if (count == 0)
        throw Error("target rate " + format_double(target_rate) + " rounds to zero of " +
                    std::to_string(n) + " maskable cells");
    if (count == n) {
        warn("target rate " + format_double(target_rate) +
             " would mask every maskable cell; clamping to " + std::to_string(n - 1));
        count = n - 1;
        if (count == 0) throw Error("cannot mask: only one maskable cell");
    }

    // Weights: logistic(α + β(p − 0.5)), calibrated so they sum to `count`.
    // MCAR short-circuits to equal weights (and MAR/MNAR with β=0 match it).
    std::vector<double> weights(n, 1.0);
    if (mechanism.kind != Mechanism::Kind::MCAR) {
        std::vector<double> shifts(n);
        for (std::size_t i = 0; i < n; ++i)
            shifts[i] = mechanism.beta * (candidates[i].percentile - 0.5);
        const double alpha = calibrate_intercept(shifts, static_cast<double>(count),
                                                 mechanism.beta);
        for (std::size_t i = 0; i < n; ++i) weights[i] = logistic(alpha + shifts[i]);
    }

    // Exact-count weighted sampling without replacement: each candidate gets
    // key log(u)/w; the `count` largest keys win. Equal weights reduce to a
    // uniform sample, so the β=0 degeneracy is cell-exact.
    SplitMix64 rng(seed);
    std::vector<double> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = std::log(rng.next_open()) / weights[i];

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (keys[a] != keys[b]) return keys[a] > keys[b];
        return a < b;
    });

    std::vector<bool> selected(n, false);
    for (std::size_t i = 0; i < count; ++i) selected[order[i]] = true;

    Mask mask;
    mask.mechanism = mechanism;
    mask.target_rate = target_rate;
    mask.seed = seed;
    mask.coordinates.reserve(count);
    std::vector<std::pair<std::size_t, std::size_t>> picked;
    picked.reserve(count);
    for (std::size_t i = 0; i < n; ++i)
        if (selected[i]) picked.emplace_back(candidates[i].row, candidates[i].col);
    std::sort(picked.begin(), picked.end()); // row-major table order
    for (const auto& [row, col] : picked)
        mask.coordinates.push_back({row, table.column_name(col)});
    return mask;
}

} // namespace

const char* mechanism_name(Mechanism::Kind kind) {
    switch (kind) {
    case Mechanism::Kind::MCAR: return "mcar";
    case Mechanism::Kind::MAR: return "mar";
    case Mechanism::Kind::MNAR: return "mnar";
    }
    return "?";
}

Mechanism::Kind mechanism_from_name(std::string_view name) {
    if (name == "mcar") return Mechanism::Kind::MCAR;
    if (name == "mar") return Mechanism::Kind::MAR;
    if (name == "mnar") return Mechanism::Kind::MNAR;
    throw Error("unknown mechanism '" + std::string(name) + "' (expected mcar, mar, or mnar)");
}

Mask mask_mcar(const Table& table, double target_rate, std::uint64_t seed) {
    return build_mask(table, Mechanism::mcar(), target_rate, seed);
}

Mask mask_mar(const Table& table, double target_rate, const std::string& driver, double beta,
              std::uint64_t seed) {
    return build_mask(table, Mechanism::mar(driver, beta), target_rate, seed);
}

Mask mask_mnar(const Table& table, double target_rate, double beta, std::uint64_t seed) {
    return build_mask(table, Mechanism::mnar(beta), target_rate, seed);
}

Mask make_mask(const Table& table, const Mechanism& mechanism, double target_rate,
               std::uint64_t seed) {
    return build_mask(table, mechanism, target_rate, seed);
}

MechanismDiagnostic mechanism_diagnostic(const Table& table, const Mask& mask) {
    const auto candidates = collect_candidates(table, mask.mechanism);
    if (candidates.empty()) throw Error("table has no maskable cells");

    std::vector<std::pair<std::size_t, std::size_t>> masked;
    masked.reserve(mask.coordinates.size());
    for (const auto& coord : mask.coordinates)
        masked.emplace_back(coord.row, table.column_index(coord.column));
    std::sort(masked.begin(), masked.end());

    // Indicator vs own-value percentile, per candidate cell. Percentiles are
    // recomputed per column the same way MNAR weighting sees them.
    std::vector<double> indicator, percentile;
    indicator.reserve(candidates.size());
    percentile.reserve(candidates.size());
    std::size_t col = table.n_cols();
    std::vector<std::size_t> col_rows;
    std::vector<double> col_values;
    auto flush_column = [&] {
        if (col == table.n_cols()) return;
        std::vector<double> ranks;
        if (table.kind(col).is_numeric()) ranks = percentile_ranks(col_values);
        else ranks.assign(col_rows.size(), 0.5);
        for (std::size_t i = 0; i < col_rows.size(); ++i) {
            percentile.push_back(ranks[i]);
            const bool hit = std::binary_search(masked.begin(), masked.end(),
                                                std::make_pair(col_rows[i], col));
            indicator.push_back(hit ? 1.0 : 0.0);
        }
        col_rows.clear();
        col_values.clear();
    };
    // collect_candidates returns cells grouped by column in column order.
    std::vector<Candidate> by_column = candidates;
    std::stable_sort(by_column.begin(), by_column.end(),
                     [](const Candidate& a, const Candidate& b) { return a.col < b.col; });
    for (const auto& cand : by_column) {
        if (cand.col != col) {
            flush_column();
            col = cand.col;
        }
        col_rows.push_back(cand.row);
        if (table.kind(col).is_numeric())
            col_values.push_back(table.cell(cand.row, col).number());
    }
    flush_column();

    MechanismDiagnostic diag;
    diag.rate_achieved =
        static_cast<double>(mask.coordinates.size()) / static_cast<double>(candidates.size());
    diag.value_mask_corr = pearson_r(indicator, percentile);
    return diag;
}

void write_mask(const Mask& mask, const std::string& path) {
    std::string out = "# mechanism=";
    out += mechanism_name(mask.mechanism.kind);
    out += ", rate=" + format_double(mask.target_rate);
    out += ", beta=" + format_double(mask.mechanism.beta);
    out += ", seed=" + std::to_string(mask.seed);
    if (mask.mechanism.kind == Mechanism::Kind::MAR)
        out += ", driver=" + mask.mechanism.driver;
    out += "\nrow_index,column_name\n";
    for (const auto& coord : mask.coordinates) {
        out += std::to_string(coord.row);
        out += ',';
        // Column names with commas/quotes go through standard CSV quoting.
        if (coord.column.find_first_of(",\"\r\n") != std::string::npos) {
            out += '"';
            for (char ch : coord.column) {
                if (ch == '"') out += '"';
                out += ch;
            }
            out += '"';
        } else {
            out += coord.column;
        }
        out += '\n';
    }
    write_text_file_atomic(path, out);
}

Mask read_mask(const std::string& path) {
    const std::string text = read_text_file(path);
    const std::size_t eol = text.find('\n');
    if (eol == std::string::npos || text.empty() || text[0] != '#')
        throw Error(path + ": expected a '# mechanism=…' comment line first");

    Mask mask;
    std::string header = text.substr(1, eol - 1);
    std::optional<std::string> mech_name;
    std::size_t pos = 0;
    while (pos < header.size()) {
        std::size_t end = header.find(',', pos);
        if (end == std::string::npos) end = header.size();
        std::string item = header.substr(pos, end - pos);
        pos = end + 1;
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos) continue;
        std::string key = item.substr(0, eq);
        std::string value = item.substr(eq + 1);
        key.erase(0, key.find_first_not_of(' '));
        key.erase(key.find_last_not_of(' ') + 1);
        if (key == "mechanism") mech_name = value;
        else if (key == "rate") mask.target_rate = parse_double(value, path + ": rate");
        else if (key == "beta") mask.mechanism.beta = parse_double(value, path + ": beta");
        else if (key == "seed") mask.seed = std::stoull(value);
        else if (key == "driver") mask.mechanism.driver = value;
    }
    if (!mech_name) throw Error(path + ": comment line lacks mechanism=");
    mask.mechanism.kind = mechanism_from_name(*mech_name);
    if (mask.mechanism.kind == Mechanism::Kind::MAR && mask.mechanism.driver.empty())
        throw Error(path + ": MAR mask lacks driver=");

    auto rows = parse_csv_text(text.substr(eol + 1), path);
    if (rows.empty() || rows[0] != std::vector<std::string>{"row_index", "column_name"})
        throw Error(path + ": expected header row_index,column_name");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 2)
            throw Error(path + ": row " + std::to_string(i - 1) + " has " +
                        std::to_string(rows[i].size()) + " fields, expected 2");
        const double row_index = parse_double(rows[i][0], path + ": row_index");
        if (row_index < 0 || row_index != std::floor(row_index))
            throw Error(path + ": row_index must be a non-negative integer");
        mask.coordinates.push_back({static_cast<std::size_t>(row_index), rows[i][1]});
    }
    return mask;
}

} // namespace chronofill
