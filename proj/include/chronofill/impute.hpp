#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chronofill/table.hpp"

namespace chronofill {

// One imputed cell: where, what, and which imputer produced it.
struct FilledCell {
    std::size_t row = 0;
    std::string column;
    Cell value;
    std::string imputer;
};

// Shared contract for every imputer: the completed table (no Missing left in
// non-Time columns), the fills, per-run numeric stats, and any warnings
// raised along the way.
struct ImputationResult {
    Table table;
    std::vector<FilledCell> filled;
    std::map<std::string, double> stats;
    std::vector<std::string> warnings;
};

enum class KnnWeighting { Uniform, InverseDistance };

// Baselines. All raise Error on a column that has no observed values.
ImputationResult impute_mean(const Table& table);
ImputationResult impute_knn(const Table& table, std::size_t k,
                            KnnWeighting weighting = KnnWeighting::InverseDistance);
ImputationResult impute_mf(const Table& table, std::size_t rank, double lambda,
                           std::size_t sweeps, std::uint64_t seed);
ImputationResult impute_mice(const Table& table, std::size_t rounds, double lambda,
                             std::uint64_t seed);

// Scaled Euclidean distance between two feature rows with NaN = missing:
// over coordinates observed in both, each divided by its column std, times
// sqrt(n_total/n_shared). Throws when no coordinate is shared.
double nan_aware_distance(const std::vector<double>& row_a, const std::vector<double>& row_b,
                          const std::vector<double>& column_stds);

} // namespace chronofill
