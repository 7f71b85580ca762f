#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronofill/table.hpp"

namespace chronofill {

// How cells are chosen for hiding. MCAR picks uniformly; MAR weights rows by
// an observed driver column's percentile; MNAR weights each cell by its own
// value's percentile. Weights are logistic(α + β·(p − 0.5)) with α solved so
// the expected count matches the target; β=0 degenerates to MCAR.
struct Mechanism {
    enum class Kind { MCAR, MAR, MNAR };

    Kind kind = Kind::MCAR;
    std::string driver; // MAR: fully-observed numeric/time column, never masked
    double beta = 4.0;  // ignored for MCAR

    static Mechanism mcar() { return {Kind::MCAR, "", 0.0}; }
    static Mechanism mar(std::string driver_column, double beta = 4.0) {
        return {Kind::MAR, std::move(driver_column), beta};
    }
    static Mechanism mnar(double beta = 4.0) { return {Kind::MNAR, "", beta}; }
};

const char* mechanism_name(Mechanism::Kind kind); // "mcar" | "mar" | "mnar"
Mechanism::Kind mechanism_from_name(std::string_view name);

// An exact-count cell selection: |coordinates| = round(rate · n_candidates),
// where candidates are observed cells outside the Time column (and outside
// the driver column under MAR). Coordinates are in row-major table order.
struct Mask {
    std::vector<MaskCoord> coordinates;
    Mechanism mechanism;
    double target_rate = 0.0;
    std::uint64_t seed = 0;
};

Mask mask_mcar(const Table& table, double target_rate, std::uint64_t seed);
Mask mask_mar(const Table& table, double target_rate, const std::string& driver, double beta,
              std::uint64_t seed);
Mask mask_mnar(const Table& table, double target_rate, double beta, std::uint64_t seed);

// Dispatch on mechanism.kind; used by the pipeline.
Mask make_mask(const Table& table, const Mechanism& mechanism, double target_rate,
               std::uint64_t seed);

// Empirical check that a mask realizes its mechanism: achieved rate, and the
// Pearson correlation between the 0/1 masked indicator and each candidate
// cell's within-column value percentile (≈0 for MCAR, positive for MNAR with
// β > 0).
struct MechanismDiagnostic {
    double rate_achieved = 0.0;
    double value_mask_corr = 0.0;
};
MechanismDiagnostic mechanism_diagnostic(const Table& table, const Mask& mask);

// Mask file: `# mechanism=…, rate=…, beta=…, seed=…[, driver=…]` comment
// line, then a row_index,column_name CSV.
void write_mask(const Mask& mask, const std::string& path);
Mask read_mask(const std::string& path);

} // namespace chronofill
