#include "chronofill/time_encode.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "chronofill/common.hpp"

namespace chronofill {

namespace {

void check_range(long value, long lo, long hi, const char* what) {
    if (value < lo || value > hi)
        throw Error(std::string(what) + " " + std::to_string(value) + " is outside [" +
                    std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

} // namespace

std::pair<double, double> cyclical_pair(double value, double period) {
    double angle = 2.0 * std::numbers::pi * value / period;
    return {std::sin(angle), std::cos(angle)};
}

EncodedDatetime encode_cyclical_datetime(long year, int month, int day, int hour) {
    if (year < 0) throw Error("year " + std::to_string(year) + " is negative");
    check_range(month, 1, 12, "month");
    check_range(day, 1, 31, "day");
    check_range(hour, 0, 23, "hour");
    EncodedDatetime e;
    e.year = year;
    std::tie(e.m_sine, e.m_cosine) = cyclical_pair(month, 12.0);
    std::tie(e.d_sine, e.d_cosine) = cyclical_pair(day, 30.0);
    std::tie(e.h_sine, e.h_cosine) = cyclical_pair(hour, 24.0);
    return e;
}

EncodedMinuteOfDay encode_minute_of_day(int hr, int min) {
    check_range(hr, 0, 23, "hour");
    check_range(min, 0, 59, "minute");
    EncodedMinuteOfDay e;
    e.totalmin = hr * 60 + min;
    std::tie(e.min_sine, e.min_cosine) = cyclical_pair(e.totalmin, 24.0 * 60.0);
    return e;
}

std::int64_t encode_continuous(std::int64_t min, int sec, int ms) {
    if (min < 0) throw Error("minute " + std::to_string(min) + " is negative");
    check_range(sec, 0, 59, "second");
    check_range(ms, 0, 999, "millisecond");
    return min * 60000 + sec * 1000 + ms;
}

std::vector<std::size_t> encode_ordinal(const std::vector<double>& times) {
    if (!std::is_sorted(times.begin(), times.end()))
        throw Error("ordinal encoding expects an ascending time axis");
    std::vector<std::size_t> ranks(times.size());
    std::iota(ranks.begin(), ranks.end(), std::size_t{0});
    return ranks;
}

std::vector<std::string> time_feature_names(TimeFormat format) {
    switch (format) {
    case TimeFormat::DatetimeYMDH:
        return {"year", "mSine", "mCosine", "dSine", "dCosine", "hSine", "hCosine"};
    case TimeFormat::HourMinute:
        return {"totalmin", "minSine", "minCosine"};
    case TimeFormat::MinSecMs:
        return {"continuous"};
    case TimeFormat::OrdinalIndex:
        return {"rank"};
    }
    throw Error("unknown time format");
}

std::vector<std::vector<double>> expand_time_column(const std::vector<double>& canonical,
                                                    TimeFormat format) {
    std::vector<std::vector<double>> rows;
    rows.reserve(canonical.size());
    switch (format) {
    case TimeFormat::DatetimeYMDH:
        for (double v : canonical) {
            long long packed = std::llround(v);
            auto e = encode_cyclical_datetime(packed / 1000000, (packed / 10000) % 100,
                                              (packed / 100) % 100, packed % 100);
            rows.push_back({static_cast<double>(e.year), e.m_sine, e.m_cosine, e.d_sine,
                            e.d_cosine, e.h_sine, e.h_cosine});
        }
        return rows;
    case TimeFormat::HourMinute:
        for (double v : canonical) {
            long long total = std::llround(v);
            auto e = encode_minute_of_day(static_cast<int>(total / 60),
                                          static_cast<int>(total % 60));
            rows.push_back({static_cast<double>(e.totalmin), e.min_sine, e.min_cosine});
        }
        return rows;
    case TimeFormat::MinSecMs:
        for (double v : canonical) {
            long long total = std::llround(v);
            rows.push_back({static_cast<double>(encode_continuous(
                total / 60000, static_cast<int>((total / 1000) % 60),
                static_cast<int>(total % 1000)))});
        }
        return rows;
    case TimeFormat::OrdinalIndex: {
        auto ranks = encode_ordinal(canonical);
        for (std::size_t rank : ranks) rows.push_back({static_cast<double>(rank)});
        return rows;
    }
    }
    throw Error("unknown time format");
}

} // namespace chronofill
