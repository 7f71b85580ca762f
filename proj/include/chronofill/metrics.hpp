#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chronofill/table.hpp"

namespace chronofill {

// The four evaluation formulas, computed over paired vectors (imputed x,
// truth y). All throw Error on length mismatch or empty input.
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);
double mre(const std::vector<double>& x, const std::vector<double>& y);
double mse(const std::vector<double>& x, const std::vector<double>& y);
double two_norm(const std::vector<double>& x, const std::vector<double>& y);

// One benchmark row: metrics over the masked cells of one job.
struct EvalReport {
    std::string dataset;
    std::string imputer;
    std::string mechanism;
    double rate = 0.0;
    std::size_t n_cells = 0; // numeric masked cells scored
    double mre = 0.0;
    double mse = 0.0;
    double two_norm = 0.0;
    double pearson_r = 0.0;
    // Categorical masked cells are scored separately as label accuracy.
    std::size_t n_categorical = 0;
    std::optional<double> categorical_accuracy;
};

struct EvalIds {
    std::string dataset;
    std::string imputer;
    std::string mechanism;
    double rate = 0.0;
};

// Pairs each hidden original with the imputed value at the same coordinate
// and evaluates the four metrics over exactly those cells (categorical cells
// go to the accuracy side channel instead).
EvalReport evaluate(const Table& imputed, const std::vector<GroundTruthCell>& ground_truth,
                    const EvalIds& ids);

// Report CSV (exact header
// dataset,imputer,mechanism,rate,n_cells,mre,mse,two_norm,pearson_r).
std::string report_csv_header();
std::string report_csv_row(const EvalReport& report);
std::vector<EvalReport> read_report_csv(const std::string& path);
void write_report_csv(const std::vector<EvalReport>& reports, const std::string& path);

} // namespace chronofill
