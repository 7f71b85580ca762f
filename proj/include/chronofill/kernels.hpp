#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace chronofill {

// Every data-parallel kernel comes in two flavors sharing one body: Serial
// is the reference implementation, Parallel adds an OpenMP loop over
// independent outputs. All reductions run in a fixed index order either way,
// so the two flavors are bit-identical and results never depend on thread
// count or scheduling.
enum class Exec { Serial, Parallel };

Exec default_exec(); // Parallel when compiled with OpenMP, else Serial

// --- dense linear algebra -------------------------------------------------

// Solves A x = b for symmetric positive-definite A (n×n, row-major) via
// in-place Cholesky. Throws Error mentioning regularization when A is not
// positive definite (the λ=0 failure mode of ALS and ridge).
std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n);

// --- NaN-aware distances (KNN) ---------------------------------------------

// Distance from row `query` to every row of `rows` (n_rows × n_cols,
// row-major, NaN = missing): scaled Euclidean over coordinates observed in
// both rows, each divided by its column std, times sqrt(n_cols/n_shared).
// Pairs sharing no observed coordinate get NaN (caller decides the policy).
// Column stds must be positive.
void nan_aware_row_distances(const std::vector<double>& rows, std::size_t n_rows,
                             std::size_t n_cols, const std::vector<double>& stds,
                             std::size_t query, std::vector<double>& out, Exec exec);

// --- alternating least squares (MF) ----------------------------------------

// Observed entries of the masked matrix grouped per target index: entry
// (j, x) in group i means X[i,j] = x when updating U, or X[j,i] = x when
// updating V.
using ObservedGroups = std::vector<std::vector<std::pair<std::size_t, double>>>;

// One half-sweep: for every row i of `target` (n_target × rank), solve
//   (Σ_j f_j f_jᵀ + λI) t_i = Σ_j x_ij f_j
// over that row's observed entries, f_j being rows of `fixed`. Rows are
// independent; sums run in stored entry order.
void als_update_factor(std::vector<double>& target, std::size_t n_target,
                       const std::vector<double>& fixed, const ObservedGroups& observed,
                       std::size_t rank, double lambda, Exec exec);

// Objective Σ_observed (x_ij − u_i·v_j)² + λ(‖U‖² + ‖V‖²), fixed order.
double als_objective(const std::vector<double>& u, const std::vector<double>& v,
                     const ObservedGroups& observed_by_row, std::size_t rank, double lambda);

// --- multilayer perceptron ---------------------------------------------------

// Fully-connected ReLU network. Parameters live in one flat vector: per
// layer, the (out × in) row-major weight block then the bias block.
struct MlpLayout {
    std::vector<std::size_t> sizes; // [n_in, hidden..., n_out]
    bool softmax_head = false;      // identity head when false

    std::size_t n_layers() const { return sizes.size() - 1; }
    std::size_t n_in() const { return sizes.front(); }
    std::size_t n_out() const { return sizes.back(); }
    std::size_t weight_offset(std::size_t layer) const;
    std::size_t bias_offset(std::size_t layer) const;
    std::size_t param_count() const;
    std::size_t max_width() const;

    void validate() const; // throws Error on an impossible shape
};

// Targets for a batch: exactly one pointer set — numeric regression values,
// or class indices for a softmax head.
struct MlpTargets {
    const double* numeric = nullptr;
    const std::size_t* labels = nullptr;
};

// Forward pass for one feature row; out has n_out entries (softmax already
// applied for categorical heads).
void mlp_forward_row(const MlpLayout& layout, const std::vector<double>& params, const double* x,
                     double* out);

// Mean loss over a batch (squared error or cross-entropy).
double mlp_batch_loss(const MlpLayout& layout, const std::vector<double>& params,
                      const std::vector<double>& batch, std::size_t n_rows, MlpTargets targets,
                      Exec exec);

// Exact gradient of the mean batch loss for every parameter. Per-row
// contributions are computed independently (parallelizable) and reduced
// parameter-by-parameter in ascending row order; returns the batch loss.
double mlp_batch_gradient(const MlpLayout& layout, const std::vector<double>& params,
                          const std::vector<double>& batch, std::size_t n_rows,
                          MlpTargets targets, std::vector<double>& grad_out, Exec exec);

} // namespace chronofill
