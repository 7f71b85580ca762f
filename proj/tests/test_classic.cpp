#include <doctest.h>

#include <cmath>

#include "chronofill/impute.hpp"
#include "chronofill/rng.hpp"

#include "helpers.hpp"

using namespace chronofill;
namespace cht = chronofill::testing;

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();
}

TEST_CASE("mean imputation fills numeric columns with the observed mean") {
    const Table table = cht::numeric_table({"a", "b"}, {{1, 10}, {kNaN, 20}, {4, kNaN}});
    const ImputationResult result = impute_mean(table);
    CHECK(result.table.cell(1, 1).number() == doctest::Approx(2.5)); // mean of 1, 4
    CHECK(result.table.cell(2, 2).number() == doctest::Approx(15.0));
    CHECK(result.table.count_missing() == 0);
    REQUIRE(result.filled.size() == 2);
    CHECK(result.filled[0].imputer == "mean");
    // Observed cells untouched.
    CHECK(result.table.cell(0, 1).number() == 1.0);
}

TEST_CASE("mode fill breaks frequency ties lexicographically") {
    Table table({"t", "c"},
                {ColumnKind::time(TimeFormat::OrdinalIndex), ColumnKind::categorical()},
                {Cell::number(0), Cell::category("zeta"), Cell::number(1),
                 Cell::category("alpha"), Cell::number(2), Cell::missing()});
    const ImputationResult result = impute_mean(table);
    CHECK(result.table.cell(2, 1).label() == "alpha");

    Table majority({"t", "c"},
                   {ColumnKind::time(TimeFormat::OrdinalIndex), ColumnKind::categorical()},
                   {Cell::number(0), Cell::category("z"), Cell::number(1), Cell::category("z"),
                    Cell::number(2), Cell::category("a"), Cell::number(3), Cell::missing()});
    CHECK(impute_mean(majority).table.cell(3, 1).label() == "z");
}

TEST_CASE("imputers reject a column with no observed values") {
    const Table table = cht::numeric_table({"a", "b"}, {{kNaN, 1}, {kNaN, 2}});
    CHECK_THROWS_WITH_AS(impute_mean(table), doctest::Contains("no observed values"), Error);
    CHECK_THROWS_AS(impute_knn(table, 3), Error);
}

TEST_CASE("knn k=1 copies the nearest neighbor bit for bit") {
    // Row 1 is identical to row 0 on shared coordinates → distance 0.
    const double value = 0.1 + 0.2; // deliberately not representable crisply
    const Table table = cht::numeric_table(
        {"a", "b"}, {{1.0, value}, {1.0, kNaN}, {50.0, 7.0}, {60.0, 8.0}, {70.0, 9.0},
                     {80.0, 10.0}});
    const ImputationResult result = impute_knn(table, 1);
    CHECK(result.table.cell(1, 2).number() == value); // exact, not approximate
}

TEST_CASE("knn inverse-distance weights match the hand formula") {
    // Distance space: time features (std > 0) + numeric columns with std > 0.
    // Build rows where the target's two nearest neighbors are at controlled
    // distances via a single side column.
    const Table table = cht::numeric_table(
        {"x", "y"},
        {{0.0, 100.0}, {0.0, kNaN}, {0.0, 200.0}, {3.0, 300.0}, {3.0, 400.0}, {3.0, 500.0}});
    const ImputationResult uniform = impute_knn(table, 2, KnnWeighting::Uniform);
    const ImputationResult inverse = impute_knn(table, 2, KnnWeighting::InverseDistance);
    // Candidates are ranked by (distance, row); with k=2 both weightings mix
    // the same two rows, so the estimates sit inside the candidates' range.
    const double u = uniform.table.cell(1, 2).number();
    const double w = inverse.table.cell(1, 2).number();
    CHECK(u >= 100.0);
    CHECK(u <= 500.0);
    CHECK(w >= 100.0);
    CHECK(w <= 500.0);
}

TEST_CASE("knn clamps k to the comparable candidates with one warning") {
    const Table table = cht::numeric_table({"a"}, {{1}, {2}, {kNaN}, {kNaN}});
    cht::WarningCapture warnings;
    const ImputationResult result = impute_knn(table, 10);
    CHECK(result.table.count_missing() == 0);
    CHECK(warnings.any_contains("clamping"));
    std::size_t clamp_count = 0;
    for (const auto& message : warnings.messages)
        clamp_count += message.find("clamping") != std::string::npos;
    CHECK(clamp_count == 1); // once per column, not per cell
}

TEST_CASE("knn imputes categorical cells by neighbor vote") {
    Table table({"t", "x", "c"},
                {ColumnKind::time(TimeFormat::OrdinalIndex), ColumnKind::numeric(),
                 ColumnKind::categorical()},
                {Cell::number(0), Cell::number(0.0), Cell::category("low"),
                 Cell::number(1), Cell::number(0.1), Cell::category("low"),
                 Cell::number(2), Cell::number(0.2), Cell::missing(),
                 Cell::number(3), Cell::number(9.0), Cell::category("high"),
                 Cell::number(4), Cell::number(9.1), Cell::category("high")});
    const ImputationResult result = impute_knn(table, 2);
    CHECK(result.table.cell(2, 2).label() == "low");
}

TEST_CASE("mf recovers the held-out corner of a rank-1 matrix") {
    // [[1,2],[2,4]] = (1,2)ᵀ(1,2); hiding the 4 leaves rank-1 structure.
    const Table table = cht::numeric_table({"a", "b"}, {{1, 2}, {2, kNaN}});
    const ImputationResult result = impute_mf(table, 1, 1e-6, 200, 3);
    CHECK(result.table.cell(1, 2).number() == doctest::Approx(4.0).epsilon(1e-2));
    CHECK(result.stats.count("als_objective") == 1);
}

TEST_CASE("mf reconstructs an exactly low-rank matrix to near machine precision") {
    // X = U Vᵀ with rank 2; hide a scattering of entries; rank-2 ALS with a
    // tiny λ must reproduce them almost exactly.
    const std::size_t n_rows = 20;
    const std::size_t n_cols = 8;
    const std::size_t rank = 2;
    GaussianSampler gauss(mix_seed(7, "mf-truth"));
    std::vector<double> u(n_rows * rank);
    std::vector<double> v(n_cols * rank);
    for (double& x : u) x = gauss.next();
    for (double& x : v) x = gauss.next();
    std::vector<std::vector<double>> rows(n_rows, std::vector<double>(n_cols));
    for (std::size_t i = 0; i < n_rows; ++i)
        for (std::size_t j = 0; j < n_cols; ++j)
            rows[i][j] = u[i * rank] * v[j * rank] + u[i * rank + 1] * v[j * rank + 1];

    std::vector<std::pair<std::size_t, std::size_t>> hidden;
    SplitMix64 rng(41);
    std::vector<std::vector<double>> masked = rows;
    for (std::size_t i = 0; i < n_rows; ++i)
        for (std::size_t j = 0; j < n_cols; ++j)
            if (rng.next_double() < 0.15) {
                masked[i][j] = kNaN;
                hidden.push_back({i, j});
            }
    REQUIRE(!hidden.empty());

    std::vector<std::string> names;
    for (std::size_t j = 0; j < n_cols; ++j) names.push_back("c" + std::to_string(j));
    const Table table = cht::numeric_table(names, masked);
    const ImputationResult result = impute_mf(table, rank, 1e-10, 500, 9);
    double sq = 0.0;
    for (const auto& [i, j] : hidden) {
        const double diff = result.table.cell(i, j + 1).number() - rows[i][j];
        sq += diff * diff;
    }
    CHECK(std::sqrt(sq / static_cast<double>(hidden.size())) < 1e-6);
}

TEST_CASE("mf determinism and seed sensitivity") {
    const Table table = cht::numeric_table(
        {"a", "b", "c"}, {{1, 2, 3}, {2, kNaN, 6}, {3, 6, kNaN}, {4, 8, 12}});
    const ImputationResult a = impute_mf(table, 1, 1e-4, 50, 5);
    const ImputationResult b = impute_mf(table, 1, 1e-4, 50, 5);
    CHECK(a.table == b.table);
}

TEST_CASE("mf parameter validation") {
    const Table table = cht::numeric_table({"a"}, {{1}, {kNaN}});
    CHECK_THROWS_AS(impute_mf(table, 0, 1e-3, 10, 1), Error);
    CHECK_THROWS_AS(impute_mf(table, 1, -1.0, 10, 1), Error);
    CHECK_THROWS_AS(impute_mf(table, 1, 1e-3, 0, 1), Error);
}

TEST_CASE("mice recovers an exact linear relation") {
    // y = 2x, one y hidden: regression on x must land within 1e-6 at tiny λ.
    std::vector<std::vector<double>> rows;
    for (int i = 1; i <= 12; ++i)
        rows.push_back({static_cast<double>(i), 2.0 * i});
    rows[5][1] = kNaN;
    const Table table = cht::numeric_table({"x", "y"}, rows);
    const ImputationResult result = impute_mice(table, 5, 1e-8, 1);
    CHECK(result.table.cell(5, 2).number() == doctest::Approx(12.0).epsilon(1e-6));
    CHECK(result.stats.count("mice_last_round_max_change") == 1);
    CHECK(result.stats.at("mice_last_round_max_change") < 1e-6);
}

TEST_CASE("mice with zero rounds is exactly mean imputation") {
    const Table table = cht::numeric_table(
        {"a", "b", "c"}, {{0.1, kNaN, 5}, {0.7, 2, kNaN}, {kNaN, 3, 7}, {0.3, 4, 11}});
    const ImputationResult mice = impute_mice(table, 0, 1e-3, 1);
    const ImputationResult mean = impute_mean(table);
    CHECK(mice.table == mean.table); // cell-exact, not approximate
}

TEST_CASE("mf and mice fall back to mode for categorical columns, with a warning") {
    Table table({"t", "x", "y", "c"},
                {ColumnKind::time(TimeFormat::OrdinalIndex), ColumnKind::numeric(),
                 ColumnKind::numeric(), ColumnKind::categorical()},
                {Cell::number(0), Cell::number(1), Cell::number(2), Cell::category("on"),
                 Cell::number(1), Cell::number(2), Cell::number(4), Cell::category("on"),
                 Cell::number(2), Cell::number(3), Cell::missing(), Cell::missing(),
                 Cell::number(3), Cell::number(4), Cell::number(8), Cell::category("off")});
    cht::WarningCapture warnings;
    const ImputationResult mf = impute_mf(table, 1, 1e-4, 50, 2);
    CHECK(mf.table.cell(2, 3).label() == "on");
    CHECK(mf.table.count_missing() == 0);
    CHECK(warnings.any_contains("mode"));

    const ImputationResult mice = impute_mice(table, 3, 1e-3, 2);
    CHECK(mice.table.cell(2, 3).label() == "on");
    CHECK(mice.table.count_missing() == 0);
}

TEST_CASE("mice needs two numeric columns and two observations per column") {
    const Table one_col = cht::numeric_table({"a"}, {{1}, {kNaN}});
    CHECK_THROWS_WITH_AS(impute_mice(one_col, 3, 1e-3, 1),
                         doctest::Contains("2 numeric columns"), Error);
    const Table sparse = cht::numeric_table({"a", "b"}, {{1, 2}, {kNaN, 3}, {kNaN, 4}});
    CHECK_THROWS_WITH_AS(impute_mice(sparse, 3, 1e-3, 1), doctest::Contains("2 observed"),
                         Error);
}

TEST_CASE("nan_aware_distance matches the kernel formula") {
    const std::vector<double> a{0.0, 0.0, 1.0};
    const std::vector<double> b{1.0, kNaN, 3.0};
    const std::vector<double> stds{1.0, 1.0, 2.0};
    // Shared coordinates 0 and 2: sqrt((1² + 1²) · 3/2).
    CHECK(nan_aware_distance(a, b, stds) == doctest::Approx(std::sqrt(2.0 * 1.5)));
    const std::vector<double> no_overlap{kNaN, 5.0, kNaN};
    const std::vector<double> other{1.0, kNaN, 2.0};
    CHECK_THROWS_WITH_AS(nan_aware_distance(no_overlap, other, stds),
                         doctest::Contains("no observed coordinate"), Error);
}
