#pragma once

#include <cstdint>
#include <vector>

#include "chronofill/table.hpp"

namespace chronofill {

// Pseudo-periodic signal generator: per sample k and grid point j,
//   x_k(t_j) = a·sin(2π·f·t_j + phase),  a ~ N(amplitude, amplitude_sd²),
//   f ~ N(frequency, frequency_sd²), redrawn at every point.
struct PseudoPeriodicConfig {
    std::size_t n_samples = 30;
    std::size_t n_points = 100;
    double t_start = 0.0;
    double t_stop = 20.0;
    double amplitude = 1.0;
    double amplitude_sd = 0.1;
    double frequency = 0.25;
    double frequency_sd = 0.01;
    double phase = 0.0;
    std::uint64_t seed = 0;

    void validate() const; // throws Error on a bad field
};

// Endpoint-inclusive regular grid: t_j = t_start + j·(t_stop−t_start)/(n−1).
std::vector<double> regular_time_grid(double t_start, double t_stop, std::size_t n_points);

// Table with a Time(OrdinalIndex) column "time" plus numeric columns
// "s1".."sN"; fully observed. Each sample draws from its own derived stream,
// so output is identical however generation is scheduled.
Table generate_pseudo_periodic(const PseudoPeriodicConfig& config);

} // namespace chronofill
