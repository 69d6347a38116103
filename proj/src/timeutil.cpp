#include "zonempc/timeutil.hpp"

#include <cstdio>
#include <stdexcept>

namespace zonempc {

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), m, d};
}

int weekday_from_days(std::int64_t z) {
    return static_cast<int>(z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6);
}

int day_of_year(const CivilDate& cd) {
    std::int64_t jan1 = days_from_civil(cd.year, 1, 1);
    std::int64_t today = days_from_civil(cd.year, cd.month, cd.day);
    return static_cast<int>(today - jan1) + 1;
}

std::int64_t parse_iso8601(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char t = 0, z = 0;
    if (std::sscanf(s.c_str(), "%d-%2d-%2d%c%2d:%2d:%2d%c",
                    &y, &mo, &d, &t, &h, &mi, &sec, &z) != 8 ||
        t != 'T' || z != 'Z') {
        throw std::invalid_argument("malformed ISO 8601 timestamp: " + s);
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) {
        throw std::invalid_argument("timestamp field out of range: " + s);
    }
    return days_from_civil(y, static_cast<unsigned>(mo),
                           static_cast<unsigned>(d)) * 86400ll +
           h * 3600ll + mi * 60ll + sec;
}

std::string format_iso8601(std::int64_t t) {
    CivilDate cd = civil_from_days(epoch_days(t));
    std::int64_t sod = seconds_of_day(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ",
                  cd.year, cd.month, cd.day,
                  static_cast<long long>(sod / 3600),
                  static_cast<long long>(sod / 60 % 60),
                  static_cast<long long>(sod % 60));
    return buf;
}

} // namespace zonempc
