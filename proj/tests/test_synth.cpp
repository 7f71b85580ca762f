#include <doctest.h>

#include <cmath>

#include "chronofill/common.hpp"
#include "chronofill/synth.hpp"

using namespace chronofill;

TEST_CASE("regular grid hits both endpoints with equal spacing") {
    const auto grid = regular_time_grid(0.0, 20.0, 5);
    REQUIRE(grid.size() == 5);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 20.0);
    CHECK(grid[1] == doctest::Approx(5.0));
    CHECK(grid[3] - grid[2] == doctest::Approx(grid[2] - grid[1]));
}

TEST_CASE("generator produces the declared shape, fully observed") {
    PseudoPeriodicConfig config;
    config.n_samples = 4;
    config.n_points = 25;
    config.seed = 7;
    const Table table = generate_pseudo_periodic(config);
    CHECK(table.n_rows() == 25);
    CHECK(table.n_cols() == 5); // time + s1..s4
    CHECK(table.column_name(0) == "time");
    CHECK(table.column_name(1) == "s1");
    CHECK(table.column_name(4) == "s4");
    CHECK(table.kind(0).is_time());
    CHECK(table.kind(0).format == TimeFormat::OrdinalIndex);
    CHECK(table.count_missing() == 0);
    CHECK(table.cell(0, 0).number() == 0.0);
    CHECK(table.cell(24, 0).number() == doctest::Approx(20.0));
}

TEST_CASE("generation is a pure function of the seed") {
    PseudoPeriodicConfig config;
    config.n_samples = 3;
    config.n_points = 40;
    config.seed = 123;
    const Table a = generate_pseudo_periodic(config);
    const Table b = generate_pseudo_periodic(config);
    CHECK(a == b);
    config.seed = 124;
    CHECK_FALSE(generate_pseudo_periodic(config) == a);
}

TEST_CASE("samples draw from independent streams") {
    PseudoPeriodicConfig config;
    config.n_samples = 2;
    config.n_points = 50;
    config.t_start = 0.5; // at t=0 every sample is exactly a*sin(phase)=0
    config.seed = 5;
    const Table table = generate_pseudo_periodic(config);
    std::size_t equal = 0;
    for (std::size_t r = 0; r < table.n_rows(); ++r)
        equal += table.cell(r, 1).number() == table.cell(r, 2).number();
    CHECK(equal == 0);
}

TEST_CASE("values stay inside the amplitude envelope") {
    PseudoPeriodicConfig config;
    config.n_samples = 10;
    config.n_points = 200;
    config.amplitude = 2.0;
    config.amplitude_sd = 0.25;
    config.seed = 31;
    const Table table = generate_pseudo_periodic(config);
    // |a·sin| ≤ |a|, and a 10σ amplitude draw would be astronomical.
    const double bound = config.amplitude + 10.0 * config.amplitude_sd;
    for (std::size_t r = 0; r < table.n_rows(); ++r)
        for (std::size_t c = 1; c < table.n_cols(); ++c)
            CHECK(std::abs(table.cell(r, c).number()) <= bound);
}

TEST_CASE("per-point redraws make the signal pseudo-periodic, not exact") {
    PseudoPeriodicConfig config;
    config.n_samples = 1;
    config.n_points = 401;
    config.t_start = 0.0;
    config.t_stop = 40.0; // 10 periods at f=0.25, 40 points per period
    config.seed = 11;
    const Table table = generate_pseudo_periodic(config);
    // One full nominal period is 4 time units = 40 grid steps. An exactly
    // periodic signal would repeat; the redrawn amplitude/frequency harmonics
    // must not.
    std::size_t differing = 0;
    for (std::size_t r = 0; r + 40 < table.n_rows(); ++r)
        differing += table.cell(r, 1).number() != table.cell(r + 40, 1).number();
    CHECK(differing > 300);
}

TEST_CASE("config validation rejects impossible settings") {
    PseudoPeriodicConfig config;
    config.n_samples = 0;
    CHECK_THROWS_AS(config.validate(), Error);
    config = {};
    config.n_points = 1;
    CHECK_THROWS_AS(config.validate(), Error);
    config = {};
    config.t_stop = config.t_start;
    CHECK_THROWS_AS(config.validate(), Error);
    config = {};
    config.amplitude_sd = -0.1;
    CHECK_THROWS_AS(config.validate(), Error);
    config = {};
    config.frequency_sd = -1.0;
    CHECK_THROWS_AS(config.validate(), Error);
}
