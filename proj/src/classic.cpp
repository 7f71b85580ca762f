#include "chronofill/impute.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "chronofill/common.hpp"
#include "chronofill/kernels.hpp"
#include "chronofill/rng.hpp"
#include "chronofill/time_encode.hpp"

namespace chronofill {

namespace {

struct PendingFill {
    std::size_t row;
    std::size_t col;
    Cell value;
};

double observed_mean(const Table& table, std::size_t col) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        const Cell& cell = table.cell(r, col);
        if (cell.is_number()) {
            sum += cell.number();
            ++count;
        }
    }
    if (count == 0)
        throw Error("column '" + table.column_name(col) + "' has no observed values");
    return sum / static_cast<double>(count);
}

double observed_population_std(const Table& table, std::size_t col, double mean) {
    double ss = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        const Cell& cell = table.cell(r, col);
        if (cell.is_number()) {
            const double d = cell.number() - mean;
            ss += d * d;
            ++count;
        }
    }
    return count ? std::sqrt(ss / static_cast<double>(count)) : 0.0;
}

// Most frequent label; ties go to the lexicographically smallest.
std::string observed_mode(const Table& table, std::size_t col) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        const Cell& cell = table.cell(r, col);
        if (cell.is_category()) ++counts[cell.label()];
    }
    if (counts.empty())
        throw Error("column '" + table.column_name(col) + "' has no observed values");
    const std::string* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [label, count] : counts) {
        if (count > best_count) { // map order makes ties lexicographic
            best = &label;
            best_count = count;
        }
    }
    return *best;
}

// Applies the fills and checks the shared result contract: every fill hits a
// Missing cell, and no non-Time Missing cell is left behind.
ImputationResult finalize(const Table& input, std::vector<PendingFill> fills,
                          const std::string& imputer, std::map<std::string, double> stats,
                          std::vector<std::string> warnings) {
    std::sort(fills.begin(), fills.end(), [](const PendingFill& a, const PendingFill& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    std::vector<std::string> names(input.column_names());
    std::vector<ColumnKind> kinds;
    kinds.reserve(input.n_cols());
    for (std::size_t c = 0; c < input.n_cols(); ++c) kinds.push_back(input.kind(c));
    std::vector<Cell> cells;
    cells.reserve(input.n_rows() * input.n_cols());
    for (std::size_t r = 0; r < input.n_rows(); ++r)
        for (std::size_t c = 0; c < input.n_cols(); ++c) cells.push_back(input.cell(r, c));

    std::vector<FilledCell> filled;
    filled.reserve(fills.size());
    for (const auto& fill : fills) {
        Cell& cell = cells[fill.row * input.n_cols() + fill.col];
        if (!cell.is_missing())
            throw Error("imputer bug: fill targets observed cell (" + std::to_string(fill.row) +
                        ", '" + input.column_name(fill.col) + "')");
        cell = fill.value;
        filled.push_back({fill.row, input.column_name(fill.col), fill.value, imputer});
    }

    for (std::size_t r = 0; r < input.n_rows(); ++r)
        for (std::size_t c = 0; c < input.n_cols(); ++c)
            if (cells[r * input.n_cols() + c].is_missing() && !input.kind(c).is_time())
                throw Error("imputer bug: cell (" + std::to_string(r) + ", '" +
                            input.column_name(c) + "') left missing");

    ImputationResult result{Table(std::move(names), std::move(kinds), std::move(cells)),
                            std::move(filled), std::move(stats), std::move(warnings)};
    return result;
}

// Mode fill for the categorical columns MF/MICE do not model.
void mode_fill_categoricals(const Table& table, const std::string& imputer,
                            std::vector<PendingFill>& fills,
                            std::vector<std::string>& warnings) {
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
        if (!table.kind(c).is_categorical()) continue;
        bool any = false;
        for (std::size_t r = 0; r < table.n_rows(); ++r)
            if (table.cell(r, c).is_missing()) any = true;
        if (!any) continue;
        const std::string mode = observed_mode(table, c);
        for (std::size_t r = 0; r < table.n_rows(); ++r)
            if (table.cell(r, c).is_missing()) fills.push_back({r, c, Cell::category(mode)});
        const std::string message = "categorical column '" + table.column_name(c) +
                                    "' filled by mode; " + imputer +
                                    " refines numeric columns only";
        warnings.push_back(message);
        warn(message);
    }
}

// Per-row time-encoding features (empty when the table has no time column).
std::vector<std::vector<double>> table_time_features(const Table& table) {
    const auto time_col = table.time_column();
    if (!time_col) return {};
    std::vector<double> canonical(table.n_rows());
    for (std::size_t r = 0; r < table.n_rows(); ++r)
        canonical[r] = table.cell(r, *time_col).number();
    return expand_time_column(canonical, table.kind(*time_col).format);
}

} // namespace

ImputationResult impute_mean(const Table& table) {
    std::vector<PendingFill> fills;
    std::vector<std::string> warnings;
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
        if (table.kind(c).is_time()) continue;
        bool any = false;
        for (std::size_t r = 0; r < table.n_rows(); ++r)
            if (table.cell(r, c).is_missing()) any = true;
        if (!any) continue;
        if (table.kind(c).is_categorical()) {
            const std::string mode = observed_mode(table, c);
            for (std::size_t r = 0; r < table.n_rows(); ++r)
                if (table.cell(r, c).is_missing()) fills.push_back({r, c, Cell::category(mode)});
        } else {
            const double mean = observed_mean(table, c);
            for (std::size_t r = 0; r < table.n_rows(); ++r)
                if (table.cell(r, c).is_missing()) fills.push_back({r, c, Cell::number(mean)});
        }
    }
    return finalize(table, std::move(fills), "mean", {}, std::move(warnings));
}

double nan_aware_distance(const std::vector<double>& row_a, const std::vector<double>& row_b,
                          const std::vector<double>& column_stds) {
    if (row_a.size() != row_b.size() || row_a.size() != column_stds.size())
        throw Error("nan_aware_distance: rows must share one schema");
    std::vector<double> rows(row_a);
    rows.insert(rows.end(), row_b.begin(), row_b.end());
    std::vector<double> out;
    nan_aware_row_distances(rows, 2, row_a.size(), column_stds, 0, out, Exec::Serial);
    if (std::isnan(out[1]))
        throw Error("rows share no observed coordinate; the pair is incomparable");
    return out[1];
}

ImputationResult impute_knn(const Table& table, std::size_t k, KnnWeighting weighting) {
    if (k < 1) throw Error("KNN needs k >= 1");
    std::vector<PendingFill> fills;
    std::vector<std::string> warnings;

    // Distance space: numeric columns plus expanded time features, skipping
    // zero-variance columns (nothing to scale by, nothing to discriminate).
    const std::size_t n_rows = table.n_rows();
    std::vector<double> grid;
    std::vector<double> stds;
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
        if (!table.kind(c).is_numeric()) continue;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < n_rows; ++r)
            if (table.cell(r, c).is_number()) {
                sum += table.cell(r, c).number();
                ++count;
            }
        if (count == 0)
            throw Error("column '" + table.column_name(c) + "' has no observed values");
        const double mean = sum / static_cast<double>(count);
        const double std = observed_population_std(table, c, mean);
        if (std == 0.0) continue;
        stds.push_back(std);
        for (std::size_t r = 0; r < n_rows; ++r) {
            const Cell& cell = table.cell(r, c);
            grid.push_back(cell.is_number() ? cell.number()
                                            : std::numeric_limits<double>::quiet_NaN());
        }
    }
    const auto time_features = table_time_features(table);
    if (!time_features.empty()) {
        const std::size_t n_features = time_features[0].size();
        for (std::size_t f = 0; f < n_features; ++f) {
            double sum = 0.0;
            for (std::size_t r = 0; r < n_rows; ++r) sum += time_features[r][f];
            const double mean = sum / static_cast<double>(n_rows);
            double ss = 0.0;
            for (std::size_t r = 0; r < n_rows; ++r) {
                const double d = time_features[r][f] - mean;
                ss += d * d;
            }
            const double std = std::sqrt(ss / static_cast<double>(n_rows));
            if (std == 0.0) continue;
            stds.push_back(std);
            for (std::size_t r = 0; r < n_rows; ++r) grid.push_back(time_features[r][f]);
        }
    }
    // Reshape from column blocks to row-major for the kernel.
    const std::size_t n_dims = stds.size();
    std::vector<double> rows_grid(n_rows * n_dims);
    for (std::size_t d = 0; d < n_dims; ++d)
        for (std::size_t r = 0; r < n_rows; ++r) rows_grid[r * n_dims + d] = grid[d * n_rows + r];

    std::set<std::size_t> clamp_warned;
    std::vector<double> dists;
    for (std::size_t r = 0; r < n_rows; ++r) {
        bool row_has_missing = false;
        for (std::size_t c = 0; c < table.n_cols(); ++c)
            if (table.cell(r, c).is_missing()) row_has_missing = true;
        if (!row_has_missing) continue;
        if (n_dims == 0)
            throw Error("no comparable candidate for cell in row " + std::to_string(r) +
                        ": the table has no usable distance features");
        nan_aware_row_distances(rows_grid, n_rows, n_dims, stds, r, dists, default_exec());

        for (std::size_t c = 0; c < table.n_cols(); ++c) {
            if (!table.cell(r, c).is_missing() || table.kind(c).is_time()) continue;
            std::vector<std::size_t> candidates;
            for (std::size_t other = 0; other < n_rows; ++other) {
                if (other == r || table.cell(other, c).is_missing()) continue;
                if (std::isnan(dists[other])) continue;
                candidates.push_back(other);
            }
            if (candidates.empty())
                throw Error("no comparable candidate for cell (" + std::to_string(r) + ", '" +
                            table.column_name(c) + "')");
            std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
                if (dists[a] != dists[b]) return dists[a] < dists[b];
                return a < b;
            });
            std::size_t use = k;
            if (candidates.size() < k) {
                use = candidates.size();
                if (clamp_warned.insert(c).second) {
                    const std::string message =
                        "k=" + std::to_string(k) + " exceeds the " +
                        std::to_string(candidates.size()) + " comparable candidates for column '" +
                        table.column_name(c) + "'; clamping";
                    warnings.push_back(message);
                    warn(message);
                }
            }
            candidates.resize(use);

            if (use == 1) { // exact copy, bit for bit
                fills.push_back({r, c, table.cell(candidates[0], c)});
                continue;
            }
            auto weight_of = [&](std::size_t neighbor) {
                return weighting == KnnWeighting::Uniform ? 1.0
                                                          : 1.0 / (dists[neighbor] + 1e-12);
            };
            if (table.kind(c).is_categorical()) {
                std::map<std::string, double> votes;
                for (std::size_t neighbor : candidates)
                    votes[table.cell(neighbor, c).label()] += weight_of(neighbor);
                const std::string* best = nullptr;
                double best_vote = -1.0;
                for (const auto& [label, vote] : votes) {
                    if (vote > best_vote) {
                        best = &label;
                        best_vote = vote;
                    }
                }
                fills.push_back({r, c, Cell::category(*best)});
            } else {
                double sum_w = 0.0, sum_wv = 0.0;
                for (std::size_t neighbor : candidates) {
                    const double w = weight_of(neighbor);
                    sum_w += w;
                    sum_wv += w * table.cell(neighbor, c).number();
                }
                fills.push_back({r, c, Cell::number(sum_wv / sum_w)});
            }
        }
    }
    return finalize(table, std::move(fills), "knn", {}, std::move(warnings));
}

ImputationResult impute_mf(const Table& table, std::size_t rank, double lambda,
                           std::size_t sweeps, std::uint64_t seed) {
    if (rank < 1) throw Error("MF rank must be at least 1");
    if (sweeps < 1) throw Error("MF needs at least one sweep");
    if (lambda < 0) throw Error("MF regularization must be non-negative");

    std::vector<PendingFill> fills;
    std::vector<std::string> warnings;
    std::map<std::string, double> stats;
    mode_fill_categoricals(table, "matrix factorization", fills, warnings);

    std::vector<std::size_t> numeric_cols;
    for (std::size_t c = 0; c < table.n_cols(); ++c)
        if (table.kind(c).is_numeric()) numeric_cols.push_back(c);

    if (!numeric_cols.empty()) {
        const std::size_t n_rows = table.n_rows();
        const std::size_t n_cols = numeric_cols.size();

        // Scale-only column normalization (divide by observed std, keep the
        // mean): a diagonal scaling preserves low-rank structure, which
        // centering would destroy.
        std::vector<double> scale(n_cols, 1.0);
        for (std::size_t j = 0; j < n_cols; ++j) {
            const double mean = observed_mean(table, numeric_cols[j]);
            const double std = observed_population_std(table, numeric_cols[j], mean);
            if (std > 0.0) scale[j] = std;
        }

        ObservedGroups by_row(n_rows), by_col(n_cols);
        std::size_t n_observed = 0;
        for (std::size_t i = 0; i < n_rows; ++i) {
            for (std::size_t j = 0; j < n_cols; ++j) {
                const Cell& cell = table.cell(i, numeric_cols[j]);
                if (!cell.is_number()) continue;
                const double x = cell.number() / scale[j];
                by_row[i].emplace_back(j, x);
                by_col[j].emplace_back(i, x);
                ++n_observed;
            }
        }
        if (n_observed <= rank * (n_rows + n_cols)) {
            const std::string message =
                "only " + std::to_string(n_observed) + " observed entries for rank " +
                std::to_string(rank) + " (" + std::to_string(rank * (n_rows + n_cols)) +
                " parameters); expect a loose fit";
            warnings.push_back(message);
            warn(message);
        }

        std::vector<double> u(n_rows * rank), v(n_cols * rank);
        GaussianSampler gauss(mix_seed(seed, "mf-init"));
        for (double& w : u) w = 0.1 * gauss.next();
        for (double& w : v) w = 0.1 * gauss.next();

        const Exec exec = default_exec();
        double previous = als_objective(u, v, by_row, rank, lambda);
        for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
            als_update_factor(u, n_rows, v, by_row, rank, lambda, exec);
            als_update_factor(v, n_cols, u, by_col, rank, lambda, exec);
            const double objective = als_objective(u, v, by_row, rank, lambda);
            if (objective > previous + 1e-9 * (1.0 + std::abs(previous)))
                throw Error("ALS objective increased (" + format_double(previous) + " -> " +
                            format_double(objective) + "); solver bug");
            previous = objective;
        }
        stats["als_objective"] = previous;
        stats["observed_entries"] = static_cast<double>(n_observed);

        for (std::size_t i = 0; i < n_rows; ++i) {
            for (std::size_t j = 0; j < n_cols; ++j) {
                if (!table.cell(i, numeric_cols[j]).is_missing()) continue;
                double dot = 0.0;
                for (std::size_t a = 0; a < rank; ++a) dot += u[i * rank + a] * v[j * rank + a];
                fills.push_back({i, numeric_cols[j], Cell::number(dot * scale[j])});
            }
        }
    }
    return finalize(table, std::move(fills), "mf", std::move(stats), std::move(warnings));
}

ImputationResult impute_mice(const Table& table, std::size_t rounds, double lambda,
                             std::uint64_t seed) {
    (void)seed; // single-chain MICE is deterministic; kept for the shared signature
    if (lambda < 0) throw Error("MICE ridge penalty must be non-negative");

    std::vector<std::size_t> numeric_cols;
    for (std::size_t c = 0; c < table.n_cols(); ++c)
        if (table.kind(c).is_numeric()) numeric_cols.push_back(c);
    if (numeric_cols.size() < 2)
        throw Error("MICE needs at least 2 numeric columns, found " +
                    std::to_string(numeric_cols.size()));
    for (std::size_t c : numeric_cols) {
        std::size_t count = 0;
        for (std::size_t r = 0; r < table.n_rows(); ++r)
            if (table.cell(r, c).is_number()) ++count;
        if (count < 2)
            throw Error("MICE needs at least 2 observed values per numeric column; column '" +
                        table.column_name(c) + "' has " + std::to_string(count));
    }

    std::vector<PendingFill> fills;
    std::vector<std::string> warnings;
    std::map<std::string, double> stats;
    mode_fill_categoricals(table, "MICE", fills, warnings);

    const std::size_t n_rows = table.n_rows();
    const std::size_t n_num = numeric_cols.size();

    // Working matrix: observed values with column-mean initialization.
    std::vector<double> work(n_rows * n_num);
    std::vector<std::vector<std::size_t>> missing_rows(n_num);
    for (std::size_t j = 0; j < n_num; ++j) {
        const double mean = observed_mean(table, numeric_cols[j]);
        for (std::size_t r = 0; r < n_rows; ++r) {
            const Cell& cell = table.cell(r, numeric_cols[j]);
            if (cell.is_number()) {
                work[r * n_num + j] = cell.number();
            } else {
                work[r * n_num + j] = mean;
                missing_rows[j].push_back(r);
            }
        }
    }

    const auto time_features = table_time_features(table);
    const std::size_t n_time = time_features.empty() ? 0 : time_features[0].size();

    double last_round_change = 0.0;
    for (std::size_t round = 0; round < rounds; ++round) {
        double round_change = 0.0;
        for (std::size_t j = 0; j < n_num; ++j) {
            if (missing_rows[j].empty()) continue;

            // Regressors: every other numeric column's current values plus
            // the time features, z-scored over all rows; constants dropped.
            std::vector<std::vector<double>> reg_values;
            for (std::size_t other = 0; other < n_num; ++other) {
                if (other == j) continue;
                std::vector<double> column(n_rows);
                for (std::size_t r = 0; r < n_rows; ++r) column[r] = work[r * n_num + other];
                reg_values.push_back(std::move(column));
            }
            for (std::size_t f = 0; f < n_time; ++f) {
                std::vector<double> column(n_rows);
                for (std::size_t r = 0; r < n_rows; ++r) column[r] = time_features[r][f];
                reg_values.push_back(std::move(column));
            }
            std::vector<std::vector<double>> z_columns;
            for (auto& column : reg_values) {
                double mean = 0.0;
                for (double v : column) mean += v;
                mean /= static_cast<double>(n_rows);
                double ss = 0.0;
                for (double v : column) ss += (v - mean) * (v - mean);
                const double std = std::sqrt(ss / static_cast<double>(n_rows));
                if (std == 0.0) continue;
                for (double& v : column) v = (v - mean) / std;
                z_columns.push_back(std::move(column));
            }
            if (z_columns.empty())
                throw Error("MICE cannot regress column '" + table.column_name(numeric_cols[j]) +
                            "': every regressor has zero variance");

            // Ridge normal equations with an unpenalized intercept appended.
            const std::size_t p = z_columns.size();
            const std::size_t dim = p + 1;
            std::vector<double> gram(dim * dim, 0.0), rhs(dim, 0.0);
            std::vector<std::size_t> observed;
            for (std::size_t r = 0; r < n_rows; ++r)
                if (table.cell(r, numeric_cols[j]).is_number()) observed.push_back(r);
            auto design_at = [&](std::size_t r, std::size_t d) {
                return d < p ? z_columns[d][r] : 1.0;
            };
            for (std::size_t r : observed) {
                const double y = work[r * n_num + j];
                for (std::size_t a = 0; a < dim; ++a) {
                    const double xa = design_at(r, a);
                    for (std::size_t b = a; b < dim; ++b) gram[a * dim + b] += xa * design_at(r, b);
                    rhs[a] += xa * y;
                }
            }
            for (std::size_t a = 0; a < dim; ++a)
                for (std::size_t b = 0; b < a; ++b) gram[a * dim + b] = gram[b * dim + a];
            for (std::size_t d = 0; d < p; ++d) gram[d * dim + d] += lambda;

            const auto beta = cholesky_solve(std::move(gram), std::move(rhs), dim);
            for (std::size_t r : missing_rows[j]) {
                double prediction = beta[p];
                for (std::size_t d = 0; d < p; ++d) prediction += beta[d] * z_columns[d][r];
                round_change = std::max(round_change,
                                        std::abs(prediction - work[r * n_num + j]));
                work[r * n_num + j] = prediction;
            }
        }
        last_round_change = round_change;
    }
    if (rounds > 0) stats["mice_last_round_max_change"] = last_round_change;

    for (std::size_t j = 0; j < n_num; ++j)
        for (std::size_t r : missing_rows[j])
            fills.push_back({r, numeric_cols[j], Cell::number(work[r * n_num + j])});

    return finalize(table, std::move(fills), "mice", std::move(stats), std::move(warnings));
}

} // namespace chronofill
