#include <doctest.h>

#include <cmath>
#include <vector>

#include "chronofill/common.hpp"
#include "chronofill/kernels.hpp"
#include "chronofill/rng.hpp"

using namespace chronofill;

namespace {

// Relative error with an absolute floor, for comparing gradients near zero.
double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<double> random_params(const MlpLayout& layout, std::uint64_t seed, double scale) {
    GaussianSampler gauss(seed);
    std::vector<double> params(layout.param_count());
    for (double& p : params) p = scale * gauss.next();
    return params;
}

} // namespace

TEST_CASE("cholesky solves SPD systems") {
    // A = [[4,2],[2,3]], b = [2,1] → x = [0.5, 0].
    const std::vector<double> a{4, 2, 2, 3};
    const std::vector<double> b{2, 1};
    const auto x = cholesky_solve(a, b, 2);
    CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(0.0).epsilon(1e-12));

    // Identity passes b through.
    const auto y = cholesky_solve({1, 0, 0, 1}, {3, -7}, 2);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == -7.0);
}

TEST_CASE("cholesky rejects singular systems, pointing at regularization") {
    // Rank-1 matrix.
    CHECK_THROWS_WITH_AS(cholesky_solve({1, 1, 1, 1}, {1, 1}, 2),
                         doctest::Contains("lambda > 0"), Error);
    // Tiny ridge rescues it.
    const auto x = cholesky_solve({1 + 1e-6, 1, 1, 1 + 1e-6}, {1, 1}, 2);
    CHECK(std::isfinite(x[0]));
}

TEST_CASE("nan-aware distances match the hand formula and rescale for overlap") {
    // Two columns, stds 1 and 2.
    // rows: q=(0,0), a=(1,2), b=(NaN,4), c=(NaN,NaN)
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> rows{0, 0, 1, 2, nan, 4, nan, nan};
    const std::vector<double> stds{1, 2};
    std::vector<double> out;
    nan_aware_row_distances(rows, 4, 2, stds, 0, out, Exec::Serial);
    REQUIRE(out.size() == 4);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == doctest::Approx(std::sqrt((1.0 + 1.0) * 2.0 / 2.0)));
    CHECK(out[2] == doctest::Approx(std::sqrt(4.0 * 2.0 / 1.0))); // only column 2 shared
    CHECK(std::isnan(out[3]));
}

TEST_CASE("distance kernel: parallel equals serial bitwise") {
    SplitMix64 rng(5);
    const std::size_t n_rows = 64;
    const std::size_t n_cols = 7;
    std::vector<double> rows(n_rows * n_cols);
    for (double& v : rows) {
        v = rng.next_double();
        if (rng.next_double() < 0.2) v = std::numeric_limits<double>::quiet_NaN();
    }
    const std::vector<double> stds(n_cols, 0.5);
    std::vector<double> serial;
    std::vector<double> parallel;
    nan_aware_row_distances(rows, n_rows, n_cols, stds, 3, serial, Exec::Serial);
    nan_aware_row_distances(rows, n_rows, n_cols, stds, 3, parallel, Exec::Parallel);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        if (std::isnan(serial[i])) {
            CHECK(std::isnan(parallel[i]));
        } else {
            CHECK(serial[i] == parallel[i]); // bit-identical
        }
    }
}

TEST_CASE("als factor update solves the regularized normal equations") {
    // Fully observed 2x2 rank-1 matrix X = u vᵀ with v fixed → recover u.
    const std::size_t rank = 1;
    const std::vector<double> fixed{1.0, 2.0}; // v = (1, 2)ᵀ as 2 rows of rank 1
    ObservedGroups observed(2);
    observed[0] = {{0, 3.0}, {1, 6.0}};  // row 0 of X = 3·(1,2)
    observed[1] = {{0, -1.0}, {1, -2.0}}; // row 1 of X = −1·(1,2)
    std::vector<double> target{0.0, 0.0};
    als_update_factor(target, 2, fixed, observed, rank, 0.0, Exec::Serial);
    CHECK(target[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(target[1] == doctest::Approx(-1.0).epsilon(1e-12));

    // With λ > 0 the solution shrinks toward zero.
    std::vector<double> shrunk{0.0, 0.0};
    als_update_factor(shrunk, 2, fixed, observed, rank, 1.0, Exec::Serial);
    CHECK(std::abs(shrunk[0]) < 3.0);
    CHECK(shrunk[0] > 0.0);
}

TEST_CASE("als objective matches the hand formula") {
    // u = (1), v = (2); observed X[0,0] = 3 → (3-2)² + λ(1+4).
    ObservedGroups by_row(1);
    by_row[0] = {{0, 3.0}};
    const double obj = als_objective({1.0}, {2.0}, by_row, 1, 0.5);
    CHECK(obj == doctest::Approx(1.0 + 0.5 * 5.0).epsilon(1e-12));
}

TEST_CASE("als update: parallel equals serial bitwise") {
    SplitMix64 rng(9);
    const std::size_t n_rows = 40;
    const std::size_t n_cols = 12;
    const std::size_t rank = 3;
    std::vector<double> fixed(n_cols * rank);
    for (double& v : fixed) v = rng.next_double() - 0.5;
    ObservedGroups observed(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i)
        for (std::size_t j = 0; j < n_cols; ++j)
            if (rng.next_double() < 0.7) observed[i].push_back({j, rng.next_double()});
    std::vector<double> serial(n_rows * rank, 0.1);
    std::vector<double> parallel = serial;
    als_update_factor(serial, n_rows, fixed, observed, rank, 1e-3, Exec::Serial);
    als_update_factor(parallel, n_rows, fixed, observed, rank, 1e-3, Exec::Parallel);
    CHECK(serial == parallel);
}

TEST_CASE("mlp layout computes offsets and validates shapes") {
    MlpLayout layout;
    layout.sizes = {3, 4, 2};
    layout.softmax_head = true; // identity heads require exactly one output
    layout.validate();
    CHECK(layout.n_layers() == 2);
    CHECK(layout.n_in() == 3);
    CHECK(layout.n_out() == 2);
    CHECK(layout.weight_offset(0) == 0);
    CHECK(layout.bias_offset(0) == 12);
    CHECK(layout.weight_offset(1) == 16);
    CHECK(layout.bias_offset(1) == 24);
    CHECK(layout.param_count() == 26);
    CHECK(layout.max_width() == 4);

    MlpLayout bad;
    bad.sizes = {3};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.sizes = {3, 0, 1};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.sizes = {3, 4, 2}; // two outputs on an identity head
    bad.softmax_head = false;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("forward pass matches a hand-computed network") {
    // 2 → 2 → 1, ReLU hidden, identity head.
    MlpLayout layout;
    layout.sizes = {2, 2, 1};
    // Layer 0: W = [[1, -1], [2, 0]], b = (0.5, -3)
    // Layer 1: W = [[1, 2]], b = (0.25)
    const std::vector<double> params{1, -1, 2, 0, 0.5, -3, 1, 2, 0.25};
    const std::vector<double> x{1.0, 2.0};
    double out = 0.0;
    mlp_forward_row(layout, params, x.data(), &out);
    // h = ReLU(1−2+0.5, 2−3) = (0, 0) wait: (1·1 + (−1)·2 + 0.5, 2·1 + 0·2 − 3)
    //   = (−0.5, −1) → ReLU → (0, 0); y = 0.25.
    CHECK(out == doctest::Approx(0.25).epsilon(1e-15));

    const std::vector<double> x2{2.0, 0.5};
    mlp_forward_row(layout, params, x2.data(), &out);
    // pre = (2 − 0.5 + 0.5, 4 − 3) = (2, 1) → y = 2 + 2 + 0.25.
    CHECK(out == doctest::Approx(4.25).epsilon(1e-15));
}

TEST_CASE("softmax head yields a probability distribution") {
    MlpLayout layout;
    layout.sizes = {2, 3};
    layout.softmax_head = true;
    const std::vector<double> params{1, 0, 0, 1, -1, 2, 0.1, 0.2, 0.3};
    const std::vector<double> x{0.7, -0.3};
    std::vector<double> out(3);
    mlp_forward_row(layout, params, x.data(), out.data());
    CHECK(out[0] + out[1] + out[2] == doctest::Approx(1.0).epsilon(1e-12));
    for (double p : out) CHECK(p > 0.0);
}

TEST_CASE("softmax is stable under huge logits") {
    MlpLayout layout;
    layout.sizes = {1, 2};
    layout.softmax_head = true;
    const std::vector<double> params{1000.0, -1000.0, 0.0, 0.0};
    const std::vector<double> x{1.0};
    std::vector<double> out(2);
    mlp_forward_row(layout, params, x.data(), out.data());
    CHECK(std::isfinite(out[0]));
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(0.0));
}

TEST_CASE("analytic gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SplitMix64 shape_rng(mix_seed(seed, "shape"));
        MlpLayout layout;
        layout.sizes = {1 + shape_rng.next_below(4)};
        const std::size_t n_hidden = shape_rng.next_below(3);
        for (std::size_t i = 0; i < n_hidden; ++i)
            layout.sizes.push_back(1 + shape_rng.next_below(5));
        const bool categorical = shape_rng.next_below(2) == 1;
        layout.sizes.push_back(categorical ? 2 + shape_rng.next_below(3) : 1);
        layout.softmax_head = categorical;
        layout.validate();

        const std::size_t n_rows = 6;
        std::vector<double> params = random_params(layout, mix_seed(seed, "params"), 0.7);
        SplitMix64 data_rng(mix_seed(seed, "data"));
        std::vector<double> batch(n_rows * layout.n_in());
        for (double& v : batch) v = 2.0 * data_rng.next_double() - 1.0;
        std::vector<double> numeric(n_rows);
        std::vector<std::size_t> labels(n_rows);
        for (std::size_t r = 0; r < n_rows; ++r) {
            numeric[r] = 2.0 * data_rng.next_double() - 1.0;
            labels[r] = data_rng.next_below(layout.n_out());
        }
        MlpTargets targets;
        if (categorical) targets.labels = labels.data();
        else targets.numeric = numeric.data();

        std::vector<double> grad;
        const double loss =
            mlp_batch_gradient(layout, params, batch, n_rows, targets, grad, Exec::Serial);
        CHECK(loss == mlp_batch_loss(layout, params, batch, n_rows, targets, Exec::Serial));

        const double h = 1e-5;
        for (std::size_t p = 0; p < params.size(); ++p) {
            std::vector<double> plus = params;
            std::vector<double> minus = params;
            plus[p] += h;
            minus[p] -= h;
            const double fd = (mlp_batch_loss(layout, plus, batch, n_rows, targets, Exec::Serial) -
                               mlp_batch_loss(layout, minus, batch, n_rows, targets,
                                              Exec::Serial)) /
                              (2.0 * h);
            CHECK(rel_err(fd, grad[p]) < 1e-4);
        }
    }
}

TEST_CASE("mlp gradient: parallel equals serial bitwise") {
    MlpLayout layout;
    layout.sizes = {5, 16, 8, 1};
    layout.validate();
    const std::size_t n_rows = 33;
    std::vector<double> params = random_params(layout, 99, 0.5);
    SplitMix64 rng(123);
    std::vector<double> batch(n_rows * layout.n_in());
    for (double& v : batch) v = rng.next_double();
    std::vector<double> numeric(n_rows);
    for (double& v : numeric) v = rng.next_double();
    MlpTargets targets;
    targets.numeric = numeric.data();

    std::vector<double> grad_serial;
    std::vector<double> grad_parallel;
    const double loss_serial =
        mlp_batch_gradient(layout, params, batch, n_rows, targets, grad_serial, Exec::Serial);
    const double loss_parallel =
        mlp_batch_gradient(layout, params, batch, n_rows, targets, grad_parallel, Exec::Parallel);
    CHECK(loss_serial == loss_parallel);
    CHECK(grad_serial == grad_parallel);

    CHECK(mlp_batch_loss(layout, params, batch, n_rows, targets, Exec::Serial) ==
          mlp_batch_loss(layout, params, batch, n_rows, targets, Exec::Parallel));
}
