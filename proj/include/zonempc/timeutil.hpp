#pragma once

#include <cstdint>
#include <string>

namespace zonempc {

struct CivilDate {
    int year;
    unsigned month; // 1..12
    unsigned day;   // 1..31
};

// Days since 1970-01-01 in the proleptic Gregorian calendar.
std::int64_t days_from_civil(int y, unsigned m, unsigned d);
CivilDate civil_from_days(std::int64_t z);

// 0 = Sunday .. 6 = Saturday.
int weekday_from_days(std::int64_t z);

// 1 = Jan 1.
int day_of_year(const CivilDate& cd);

// Fixed format "YYYY-MM-DDTHH:MM:SSZ", UTC only. Returns Unix seconds.
// Throws std::invalid_argument on malformed input.
std::int64_t parse_iso8601(const std::string& s);
std::string format_iso8601(std::int64_t t);

inline std::int64_t seconds_of_day(std::int64_t t) {
    std::int64_t s = t % 86400;
    return s < 0 ? s + 86400 : s;
}

inline std::int64_t epoch_days(std::int64_t t) {
    std::int64_t d = t / 86400;
    if (t % 86400 < 0) --d;
    return d;
}

inline bool is_weekend(std::int64_t t) {
    int wd = weekday_from_days(epoch_days(t));
    return wd == 0 || wd == 6;
}

} // namespace zonempc
