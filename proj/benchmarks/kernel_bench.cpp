// Times the OpenMP-parallel kernels against their serial reference
// implementations and verifies the two produce bit-identical output. Pass
// --quick for the small problem sizes used as a CI smoke test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "chronofill/kernels.hpp"
#include "chronofill/rng.hpp"

namespace {

using namespace chronofill;

double time_best_of(int reps, const std::function<void()>& body) {
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < reps; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        body();
        const auto stop = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(stop - start).count());
    }
    return best;
}

// Bitwise equality, with NaN == NaN (distances use NaN for disjoint rows).
bool identical(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0 ||
           std::equal(a.begin(), a.end(), b.begin(), [](double x, double y) {
               return x == y || (std::isnan(x) && std::isnan(y));
           });
}

void report(const char* name, double serial, double parallel, bool same) {
    std::printf("%-14s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   identical %s\n",
                name, serial * 1e3, parallel * 1e3, serial / parallel, same ? "yes" : "NO");
}

bool bench_distances(bool quick) {
    const std::size_t n_rows = quick ? 256 : 4096;
    const std::size_t n_cols = quick ? 16 : 64;
    const std::size_t n_queries = quick ? 8 : 64;
    const int reps = quick ? 2 : 5;

    GaussianSampler gauss(mix_seed(11, "bench-dist"));
    SplitMix64 holes(mix_seed(12, "bench-dist"));
    std::vector<double> rows(n_rows * n_cols);
    for (double& v : rows)
        v = holes.next_double() < 0.05 ? std::numeric_limits<double>::quiet_NaN() : gauss.next();
    const std::vector<double> stds(n_cols, 1.0);

    std::vector<double> serial_out, parallel_out, scratch;
    auto run = [&](Exec exec, std::vector<double>& out) {
        out.assign(n_rows * n_queries, 0.0);
        for (std::size_t q = 0; q < n_queries; ++q) {
            nan_aware_row_distances(rows, n_rows, n_cols, stds, q, scratch, exec);
            std::copy(scratch.begin(), scratch.end(), out.begin() + q * n_rows);
        }
    };
    const double serial = time_best_of(reps, [&] { run(Exec::Serial, serial_out); });
    const double parallel = time_best_of(reps, [&] { run(Exec::Parallel, parallel_out); });
    const bool same = identical(serial_out, parallel_out);
    report("distances", serial, parallel, same);
    return same;
}

bool bench_als(bool quick) {
    const std::size_t n = quick ? 64 : 512;
    const std::size_t m = quick ? 48 : 384;
    const std::size_t rank = 8;
    const int reps = quick ? 2 : 5;

    GaussianSampler gauss(mix_seed(21, "bench-als"));
    SplitMix64 pick(mix_seed(22, "bench-als"));
    ObservedGroups by_row(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (pick.next_double() < 0.3) by_row[i].push_back({j, gauss.next()});
    std::vector<double> fixed(m * rank);
    for (double& v : fixed) v = gauss.next();
    std::vector<double> init(n * rank);
    for (double& v : init) v = 0.1 * gauss.next();

    std::vector<double> serial_out, parallel_out;
    auto run = [&](Exec exec, std::vector<double>& out) {
        out = init;
        als_update_factor(out, n, fixed, by_row, rank, 0.1, exec);
    };
    const double serial = time_best_of(reps, [&] { run(Exec::Serial, serial_out); });
    const double parallel = time_best_of(reps, [&] { run(Exec::Parallel, parallel_out); });
    const bool same = identical(serial_out, parallel_out);
    report("als update", serial, parallel, same);
    return same;
}

bool bench_mlp(bool quick) {
    const std::size_t n_rows = quick ? 64 : 1024;
    const int reps = quick ? 2 : 5;

    MlpLayout layout;
    layout.sizes = {64, 64, 32, 1};
    layout.validate();
    GaussianSampler gauss(mix_seed(31, "bench-mlp"));
    std::vector<double> params(layout.param_count());
    for (double& v : params) v = 0.1 * gauss.next();
    std::vector<double> batch(n_rows * layout.n_in());
    for (double& v : batch) v = gauss.next();
    std::vector<double> numeric(n_rows);
    for (double& v : numeric) v = gauss.next();
    MlpTargets targets;
    targets.numeric = numeric.data();

    std::vector<double> serial_grad, parallel_grad;
    double serial_loss = 0, parallel_loss = 0;
    const double serial = time_best_of(reps, [&] {
        serial_loss = mlp_batch_gradient(layout, params, batch, n_rows, targets, serial_grad,
                                         Exec::Serial);
    });
    const double parallel = time_best_of(reps, [&] {
        parallel_loss = mlp_batch_gradient(layout, params, batch, n_rows, targets, parallel_grad,
                                           Exec::Parallel);
    });
    const bool same = identical(serial_grad, parallel_grad) && serial_loss == parallel_loss;
    report("mlp gradient", serial, parallel, same);
    return same;
}

} // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--quick") {
            quick = true;
        } else {
            std::fprintf(stderr, "usage: %s [--quick]\n", argv[0]);
            return 2;
        }
    }
    bool ok = true;
    ok &= bench_distances(quick);
    ok &= bench_als(quick);
    ok &= bench_mlp(quick);
    if (!ok) std::fprintf(stderr, "serial and parallel kernels disagree\n");
    return ok ? 0 : 1;
}
