#include "chronofill/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <mutex>
#include <string>

#include "chronofill/common.hpp"

namespace chronofill {

Exec default_exec() {
#ifdef _OPENMP
    return Exec::Parallel;
#else
    return Exec::Serial;
#endif
}

namespace {

// Runs body(i) over [0, n). The parallel flavor collects the first exception
// and rethrows after the loop (throwing across an OpenMP region is not
// allowed); the serial flavor lets it propagate directly.
template <typename Body>
void indexed_for(std::size_t n, Exec exec, Body&& body) {
    if (exec == Exec::Parallel) {
        std::mutex error_mutex;
        std::string error;
        bool failed = false;
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            try {
                body(static_cast<std::size_t>(i));
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed) {
                    failed = true;
                    error = e.what();
                }
            }
        }
        if (failed) throw Error(error);
    } else {
        for (std::size_t i = 0; i < n; ++i) body(i);
    }
}

} // namespace

std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
    if (a.size() != n * n || b.size() != n)
        throw Error("cholesky_solve: dimension mismatch");
    double scale = 1.0;
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a[j * n + j]));
    const double pivot_floor = scale * 1e-12;

    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!std::isfinite(d) || d <= pivot_floor)
            throw Error("normal equations are singular; add regularization (lambda > 0)");
        d = std::sqrt(d);
        a[j * n + j] = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / d;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
        b[i] = s / a[i * n + i];
    }
    return b;
}

void nan_aware_row_distances(const std::vector<double>& rows, std::size_t n_rows,
                             std::size_t n_cols, const std::vector<double>& stds,
                             std::size_t query, std::vector<double>& out, Exec exec) {
    if (rows.size() != n_rows * n_cols) throw Error("distance kernel: row grid size mismatch");
    if (stds.size() != n_cols) throw Error("distance kernel: std count mismatch");
    if (query >= n_rows) throw Error("distance kernel: query row out of range");
    for (double s : stds)
        if (!(s > 0.0)) throw Error("distance kernel: column stds must be positive");

    out.assign(n_rows, 0.0);
    const double* q = rows.data() + query * n_cols;
    indexed_for(n_rows, exec, [&](std::size_t i) {
        const double* r = rows.data() + i * n_cols;
        double sum = 0.0;
        std::size_t shared = 0;
        for (std::size_t c = 0; c < n_cols; ++c) {
            if (std::isnan(q[c]) || std::isnan(r[c])) continue;
            const double d = (q[c] - r[c]) / stds[c];
            sum += d * d;
            ++shared;
        }
        out[i] = shared == 0
                     ? std::numeric_limits<double>::quiet_NaN()
                     : std::sqrt(sum * static_cast<double>(n_cols) / static_cast<double>(shared));
    });
}

void als_update_factor(std::vector<double>& target, std::size_t n_target,
                       const std::vector<double>& fixed, const ObservedGroups& observed,
                       std::size_t rank, double lambda, Exec exec) {
    if (rank == 0) throw Error("ALS rank must be at least 1");
    if (target.size() != n_target * rank) throw Error("ALS: target factor size mismatch");
    if (observed.size() != n_target) throw Error("ALS: observed group count mismatch");
    const std::size_t n_fixed = fixed.size() / rank;

    indexed_for(n_target, exec, [&](std::size_t i) {
        std::vector<double> gram(rank * rank, 0.0);
        std::vector<double> rhs(rank, 0.0);
        for (const auto& [j, x] : observed[i]) {
            if (j >= n_fixed) throw Error("ALS: observed entry index out of range");
            const double* f = fixed.data() + j * rank;
            for (std::size_t a = 0; a < rank; ++a) {
                for (std::size_t b = 0; b < rank; ++b) gram[a * rank + b] += f[a] * f[b];
                rhs[a] += x * f[a];
            }
        }
        for (std::size_t d = 0; d < rank; ++d) gram[d * rank + d] += lambda;
        const auto solution = cholesky_solve(std::move(gram), std::move(rhs), rank);
        std::copy(solution.begin(), solution.end(), target.begin() + i * rank);
    });
}

double als_objective(const std::vector<double>& u, const std::vector<double>& v,
                     const ObservedGroups& observed_by_row, std::size_t rank, double lambda) {
    double sum = 0.0;
    for (std::size_t i = 0; i < observed_by_row.size(); ++i) {
        for (const auto& [j, x] : observed_by_row[i]) {
            double dot = 0.0;
            for (std::size_t a = 0; a < rank; ++a) dot += u[i * rank + a] * v[j * rank + a];
            const double r = x - dot;
            sum += r * r;
        }
    }
    double penalty = 0.0;
    for (double w : u) penalty += w * w;
    for (double w : v) penalty += w * w;
    return sum + lambda * penalty;
}

// --- MLP --------------------------------------------------------------------

std::size_t MlpLayout::weight_offset(std::size_t layer) const {
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layer; ++l) offset += sizes[l + 1] * sizes[l] + sizes[l + 1];
    return offset;
}

std::size_t MlpLayout::bias_offset(std::size_t layer) const {
    return weight_offset(layer) + sizes[layer + 1] * sizes[layer];
}

std::size_t MlpLayout::param_count() const { return weight_offset(n_layers()); }

std::size_t MlpLayout::max_width() const {
    return *std::max_element(sizes.begin(), sizes.end());
}

void MlpLayout::validate() const {
    if (sizes.size() < 2) throw Error("an MLP needs at least input and output sizes");
    for (std::size_t s : sizes)
        if (s == 0) throw Error("MLP layer sizes must be positive");
    if (!softmax_head && sizes.back() != 1)
        throw Error("a numeric (identity-head) MLP must have exactly one output");
}

namespace {

std::size_t act_offset(const MlpLayout& layout, std::size_t layer) {
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layer; ++l) offset += layout.sizes[l];
    return offset;
}

std::size_t act_total(const MlpLayout& layout) {
    return act_offset(layout, layout.sizes.size());
}

// Forward pass storing every layer's post-activation into `act` (input at
// offset 0, output last; ReLU already applied to hidden layers, softmax to a
// categorical output layer).
void forward_into(const MlpLayout& layout, const std::vector<double>& params, const double* x,
                  double* act) {
    std::copy(x, x + layout.n_in(), act);
    const std::size_t n_layers = layout.n_layers();
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t n_in = layout.sizes[l];
        const std::size_t n_out = layout.sizes[l + 1];
        const double* in = act + act_offset(layout, l);
        double* out = act + act_offset(layout, l + 1);
        const double* weights = params.data() + layout.weight_offset(l);
        const double* biases = params.data() + layout.bias_offset(l);
        const bool last = (l + 1 == n_layers);
        for (std::size_t o = 0; o < n_out; ++o) {
            double s = biases[o];
            const double* w = weights + o * n_in;
            for (std::size_t i = 0; i < n_in; ++i) s += w[i] * in[i];
            out[o] = last ? s : std::max(s, 0.0);
        }
        if (last && layout.softmax_head) {
            double peak = out[0];
            for (std::size_t o = 1; o < n_out; ++o) peak = std::max(peak, out[o]);
            double total = 0.0;
            for (std::size_t o = 0; o < n_out; ++o) {
                out[o] = std::exp(out[o] - peak);
                total += out[o];
            }
            for (std::size_t o = 0; o < n_out; ++o) out[o] /= total;
        }
    }
}

double row_loss(const MlpLayout& layout, const double* out, MlpTargets targets, std::size_t row) {
    if (layout.softmax_head) {
        const std::size_t label = targets.labels[row];
        if (label >= layout.n_out()) throw Error("class label out of range");
        return -std::log(std::max(out[label], 1e-300));
    }
    const double d = out[0] - targets.numeric[row];
    return d * d;
}

// Backprop for one row; writes this row's (unaveraged) parameter gradient.
void backward_into(const MlpLayout& layout, const std::vector<double>& params, const double* act,
                   MlpTargets targets, std::size_t row, double* grad) {
    const std::size_t n_layers = layout.n_layers();
    std::vector<double> delta(act_total(layout), 0.0);

    // Output delta: dLoss/dz. Squared error with identity head gives
    // 2(pred − y); cross-entropy through softmax gives p − onehot.
    {
        const double* out = act + act_offset(layout, n_layers);
        double* d_out = delta.data() + act_offset(layout, n_layers);
        if (layout.softmax_head) {
            for (std::size_t o = 0; o < layout.n_out(); ++o) d_out[o] = out[o];
            d_out[targets.labels[row]] -= 1.0;
        } else {
            d_out[0] = 2.0 * (out[0] - targets.numeric[row]);
        }
    }

    for (std::size_t l = n_layers; l-- > 0;) {
        const std::size_t n_in = layout.sizes[l];
        const std::size_t n_out = layout.sizes[l + 1];
        const double* in = act + act_offset(layout, l);
        const double* d_out = delta.data() + act_offset(layout, l + 1);
        double* w_grad = grad + layout.weight_offset(l);
        double* b_grad = grad + layout.bias_offset(l);
        for (std::size_t o = 0; o < n_out; ++o) {
            const double d = d_out[o];
            double* wg = w_grad + o * n_in;
            for (std::size_t i = 0; i < n_in; ++i) wg[i] = d * in[i];
            b_grad[o] = d;
        }
        if (l == 0) break;
        const double* weights = params.data() + layout.weight_offset(l);
        double* d_in = delta.data() + act_offset(layout, l);
        for (std::size_t i = 0; i < n_in; ++i) {
            if (in[i] <= 0.0) continue; // ReLU gate (post-activation 0 ⇒ blocked)
            double s = 0.0;
            for (std::size_t o = 0; o < n_out; ++o) s += weights[o * n_in + i] * d_out[o];
            d_in[i] = s;
        }
    }
}

void check_batch(const MlpLayout& layout, const std::vector<double>& params,
                 const std::vector<double>& batch, std::size_t n_rows, MlpTargets targets) {
    layout.validate();
    if (params.size() != layout.param_count()) throw Error("MLP parameter vector size mismatch");
    if (batch.size() != n_rows * layout.n_in()) throw Error("MLP batch size mismatch");
    if (n_rows == 0) throw Error("MLP batch must be non-empty");
    const bool has_numeric = targets.numeric != nullptr;
    const bool has_labels = targets.labels != nullptr;
    if (has_numeric == has_labels)
        throw Error("exactly one of numeric targets or class labels must be given");
    if (has_labels != layout.softmax_head)
        throw Error("target kind does not match the network head");
}

} // namespace

void mlp_forward_row(const MlpLayout& layout, const std::vector<double>& params, const double* x,
                     double* out) {
    layout.validate();
    if (params.size() != layout.param_count()) throw Error("MLP parameter vector size mismatch");
    std::vector<double> act(act_total(layout));
    forward_into(layout, params, x, act.data());
    const double* last = act.data() + act_offset(layout, layout.n_layers());
    std::copy(last, last + layout.n_out(), out);
}

double mlp_batch_loss(const MlpLayout& layout, const std::vector<double>& params,
                      const std::vector<double>& batch, std::size_t n_rows, MlpTargets targets,
                      Exec exec) {
    check_batch(layout, params, batch, n_rows, targets);
    std::vector<double> losses(n_rows);
    indexed_for(n_rows, exec, [&](std::size_t row) {
        std::vector<double> act(act_total(layout));
        forward_into(layout, params, batch.data() + row * layout.n_in(), act.data());
        losses[row] =
            row_loss(layout, act.data() + act_offset(layout, layout.n_layers()), targets, row);
    });
    double total = 0.0;
    for (double l : losses) total += l; // fixed row order
    return total / static_cast<double>(n_rows);
}

double mlp_batch_gradient(const MlpLayout& layout, const std::vector<double>& params,
                          const std::vector<double>& batch, std::size_t n_rows,
                          MlpTargets targets, std::vector<double>& grad_out, Exec exec) {
    check_batch(layout, params, batch, n_rows, targets);
    const std::size_t n_params = layout.param_count();
    std::vector<double> row_grads(n_rows * n_params);
    std::vector<double> losses(n_rows);

    indexed_for(n_rows, exec, [&](std::size_t row) {
        std::vector<double> act(act_total(layout));
        forward_into(layout, params, batch.data() + row * layout.n_in(), act.data());
        losses[row] =
            row_loss(layout, act.data() + act_offset(layout, layout.n_layers()), targets, row);
        backward_into(layout, params, act.data(), targets, row,
                      row_grads.data() + row * n_params);
    });

    // Mean over rows, reduced per parameter in ascending row order so the
    // result is identical for any thread count.
    grad_out.assign(n_params, 0.0);
    indexed_for(n_params, exec, [&](std::size_t p) {
        double s = 0.0;
        for (std::size_t row = 0; row < n_rows; ++row) s += row_grads[row * n_params + p];
        grad_out[p] = s / static_cast<double>(n_rows);
    });

    double total = 0.0;
    for (double l : losses) total += l;
    return total / static_cast<double>(n_rows);
}

} // namespace chronofill
