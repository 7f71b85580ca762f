#include "chronofill/metrics.hpp"

#include <cmath>

#include "chronofill/common.hpp"
#include "chronofill/csv.hpp"

namespace chronofill {

namespace {

void check_pair(const std::vector<double>& x, const std::vector<double>& y, std::size_t min_len) {
    if (x.size() != y.size())
        throw Error("metric input lengths differ (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
    if (x.size() < min_len)
        throw Error("metric needs at least " + std::to_string(min_len) + " value pairs");
}

} // namespace

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    check_pair(x, y, 2);
    const double n = static_cast<double>(x.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= n;
    mean_y /= n;
    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if (var_x == 0.0 || var_y == 0.0)
        throw Error("correlation is undefined: " +
                    std::string(var_x == 0.0 ? "first" : "second") + " vector has zero variance");
    return cov / (std::sqrt(var_x) * std::sqrt(var_y));
}

double mre(const std::vector<double>& x, const std::vector<double>& y) {
    check_pair(x, y, 1);
    double abs_err = 0.0, abs_truth = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        abs_err += std::abs(x[i] - y[i]);
        abs_truth += std::abs(y[i]);
    }
    if (abs_truth == 0.0)
        throw Error("mean relative error is undefined: truth values are all zero");
    return abs_err / abs_truth;
}

double mse(const std::vector<double>& x, const std::vector<double>& y) {
    check_pair(x, y, 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        sum += d * d;
    }
    return sum / static_cast<double>(x.size());
}

double two_norm(const std::vector<double>& x, const std::vector<double>& y) {
    check_pair(x, y, 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

EvalReport evaluate(const Table& imputed, const std::vector<GroundTruthCell>& ground_truth,
                    const EvalIds& ids) {
    if (ground_truth.empty()) throw Error("evaluation needs at least one ground-truth cell");
    std::vector<double> x, y;
    x.reserve(ground_truth.size());
    y.reserve(ground_truth.size());
    std::size_t n_cat = 0, cat_hits = 0;
    for (const auto& truth : ground_truth) {
        const std::size_t col = imputed.column_index(truth.column);
        const Cell& cell = imputed.cell(truth.row, col);
        if (cell.is_missing())
            throw Error("imputed table still has a missing cell at (" +
                        std::to_string(truth.row) + ", '" + truth.column + "')");
        if (truth.value.is_category()) {
            ++n_cat;
            if (cell == truth.value) ++cat_hits;
        } else {
            x.push_back(cell.number());
            y.push_back(truth.value.number());
        }
    }

    EvalReport report;
    report.dataset = ids.dataset;
    report.imputer = ids.imputer;
    report.mechanism = ids.mechanism;
    report.rate = ids.rate;
    report.n_cells = x.size();
    report.n_categorical = n_cat;
    if (n_cat > 0)
        report.categorical_accuracy =
            static_cast<double>(cat_hits) / static_cast<double>(n_cat);
    if (!x.empty()) {
        report.mre = mre(x, y);
        report.mse = mse(x, y);
        report.two_norm = two_norm(x, y);
        report.pearson_r = pearson_r(x, y);
    } else if (n_cat == 0) {
        throw Error("evaluation covered no cells");
    }
    return report;
}

std::string report_csv_header() {
    return "dataset,imputer,mechanism,rate,n_cells,mre,mse,two_norm,pearson_r";
}

std::string report_csv_row(const EvalReport& r) {
    std::string row;
    row += csv_quote(r.dataset);
    row += ',';
    row += csv_quote(r.imputer);
    row += ',';
    row += csv_quote(r.mechanism);
    row += ',';
    row += format_double(r.rate);
    row += ',';
    row += std::to_string(r.n_cells);
    row += ',';
    row += format_double(r.mre);
    row += ',';
    row += format_double(r.mse);
    row += ',';
    row += format_double(r.two_norm);
    row += ',';
    row += format_double(r.pearson_r);
    return row;
}

void write_report_csv(const std::vector<EvalReport>& reports, const std::string& path) {
    std::string out = report_csv_header();
    out += '\n';
    for (const auto& report : reports) {
        out += report_csv_row(report);
        out += '\n';
    }
    write_text_file_atomic(path, out);
}

std::vector<EvalReport> read_report_csv(const std::string& path) {
    auto rows = read_csv_rows(path);
    if (rows.empty()) throw Error(path + ": empty report");
    const std::vector<std::string> expected = {"dataset",  "imputer", "mechanism",
                                               "rate",     "n_cells", "mre",
                                               "mse",      "two_norm", "pearson_r"};
    if (rows[0] != expected) throw Error(path + ": unexpected report header");
    std::vector<EvalReport> reports;
    reports.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != expected.size())
            throw Error(path + ": row " + std::to_string(i - 1) + " has " +
                        std::to_string(row.size()) + " fields");
        const std::string context = path + ": row " + std::to_string(i - 1);
        EvalReport r;
        r.dataset = row[0];
        r.imputer = row[1];
        r.mechanism = row[2];
        r.rate = parse_double(row[3], context);
        r.n_cells = static_cast<std::size_t>(parse_double(row[4], context));
        r.mre = parse_double(row[5], context);
        r.mse = parse_double(row[6], context);
        r.two_norm = parse_double(row[7], context);
        r.pearson_r = parse_double(row[8], context);
        reports.push_back(std::move(r));
    }
    return reports;
}

} // namespace chronofill
