#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chronofill/table.hpp"

namespace chronofill {

// (sin, cos) of 2π·value/period — the cyclical embedding all encoders share.
std::pair<double, double> cyclical_pair(double value, double period);

// Datetime encoding: year passes through; month/day/hour get unit-circle
// pairs with periods 12 / 30 / 24.
struct EncodedDatetime {
    long year = 0;
    double m_sine = 0, m_cosine = 0;
    double d_sine = 0, d_cosine = 0;
    double h_sine = 0, h_cosine = 0;
};
EncodedDatetime encode_cyclical_datetime(long year, int month, int day, int hour);

// Minute-of-day encoding: totalmin = hr*60 + min, plus its unit-circle pair
// over a 1440-minute day.
struct EncodedMinuteOfDay {
    int totalmin = 0;
    double min_sine = 0, min_cosine = 0;
};
EncodedMinuteOfDay encode_minute_of_day(int hr, int min);

// Continuous encoding of mm:ss:mmm as total milliseconds
// (e.g. 03:25:127 → 205127).
std::int64_t encode_continuous(std::int64_t min, int sec, int ms);

// 0-based ranks for an ascending time axis; ties keep their positions.
std::vector<std::size_t> encode_ordinal(const std::vector<double>& times);

// Featurizer support: expands a whole time column (canonical numeric values,
// ascending) into per-row feature vectors, with matching feature names.
// DatetimeYMDH → 7 features, HourMinute → 3, MinSecMs → 1, OrdinalIndex → 1
// (the rank).
std::vector<std::string> time_feature_names(TimeFormat format);
std::vector<std::vector<double>> expand_time_column(const std::vector<double>& canonical,
                                                    TimeFormat format);

} // namespace chronofill
