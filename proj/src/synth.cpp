#include "chronofill/synth.hpp"

#include <cmath>
#include <numbers>

#include "chronofill/common.hpp"
#include "chronofill/rng.hpp"

namespace chronofill {

void PseudoPeriodicConfig::validate() const {
    if (n_samples < 1) throw Error("n_samples must be at least 1");
    if (n_points < 2) throw Error("n_points must be at least 2");
    if (!(t_stop > t_start)) throw Error("t_stop must be greater than t_start");
    if (amplitude_sd < 0) throw Error("amplitude_sd must be non-negative");
    if (frequency_sd < 0) throw Error("frequency_sd must be non-negative");
    if (!std::isfinite(t_start) || !std::isfinite(t_stop) || !std::isfinite(amplitude) ||
        !std::isfinite(amplitude_sd) || !std::isfinite(frequency) ||
        !std::isfinite(frequency_sd) || !std::isfinite(phase))
        throw Error("pseudo-periodic config fields must be finite");
}

std::vector<double> regular_time_grid(double t_start, double t_stop, std::size_t n_points) {
    if (n_points < 2) throw Error("a time grid needs at least 2 points");
    if (!(t_stop > t_start)) throw Error("t_stop must be greater than t_start");
    std::vector<double> grid(n_points);
    const double step = (t_stop - t_start) / static_cast<double>(n_points - 1);
    for (std::size_t j = 0; j < n_points; ++j)
        grid[j] = t_start + static_cast<double>(j) * step;
    return grid;
}

Table generate_pseudo_periodic(const PseudoPeriodicConfig& config) {
    config.validate();
    const auto grid = regular_time_grid(config.t_start, config.t_stop, config.n_points);

    // Column-major draw buffer; sample k uses stream mix_seed(seed, k) so the
    // signal is independent of generation order.
    std::vector<std::vector<double>> samples(config.n_samples);
    for (std::size_t k = 0; k < config.n_samples; ++k) {
        GaussianSampler gauss(mix_seed(config.seed, static_cast<std::uint64_t>(k)));
        auto& series = samples[k];
        series.resize(config.n_points);
        for (std::size_t j = 0; j < config.n_points; ++j) {
            const double a = config.amplitude + config.amplitude_sd * gauss.next();
            const double f = config.frequency + config.frequency_sd * gauss.next();
            series[j] = a * std::sin(2.0 * std::numbers::pi * f * grid[j] + config.phase);
        }
    }

    std::vector<std::string> names;
    std::vector<ColumnKind> kinds;
    names.reserve(config.n_samples + 1);
    kinds.reserve(config.n_samples + 1);
    names.emplace_back("time");
    kinds.push_back(ColumnKind::time(TimeFormat::OrdinalIndex));
    for (std::size_t k = 0; k < config.n_samples; ++k) {
        names.push_back("s" + std::to_string(k + 1));
        kinds.push_back(ColumnKind::numeric());
    }

    std::vector<Cell> cells;
    cells.reserve(config.n_points * (config.n_samples + 1));
    for (std::size_t j = 0; j < config.n_points; ++j) {
        cells.push_back(Cell::number(grid[j]));
        for (std::size_t k = 0; k < config.n_samples; ++k)
            cells.push_back(Cell::number(samples[k][j]));
    }
    return Table(std::move(names), std::move(kinds), std::move(cells));
}

} // namespace chronofill
