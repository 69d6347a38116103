#include "zonempc/weather.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "zonempc/errors.hpp"
#include "zonempc/timeutil.hpp"

namespace zonempc {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr long kStepsPerDay = 144;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}
} // namespace

WeatherSeries synth_weather(int days, double t_min_c, double t_max_c,
                            std::uint64_t seed,
                            const WeatherSynthParams& params) {
    if (days <= 0) {
        throw std::invalid_argument("synth_weather: days must be positive");
    }
    if (!(t_min_c < t_max_c)) {
        throw std::invalid_argument("synth_weather: t_min must be below t_max");
    }
    WeatherSeries series;
    series.start_s =
        days_from_civil(params.start_year, 1, 1) * 86400ll;
    series.step_s = 600.0;
    series.tout_c.reserve(static_cast<std::size_t>(days) * kStepsPerDay);

    const double mid = 0.5 * (t_min_c + t_max_c);
    const double amp = 0.5 * (t_max_c - t_min_c);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    for (long i = 0; i < days * kStepsPerDay; ++i) {
        double day = static_cast<double>(i) / kStepsPerDay;
        double hour = (static_cast<double>(i % kStepsPerDay) / kStepsPerDay) * 24.0;
        double annual =
            mid - amp * std::cos(2.0 * kPi * (day - params.coldest_day) / 365.0);
        double diurnal = params.diurnal_amp_c *
                         std::cos(2.0 * kPi * (hour - params.warmest_hour) / 24.0);
        double t = annual + diurnal;
        if (params.noise_std_c > 0.0) {
            t += params.noise_std_c * noise(rng);
        }
        series.tout_c.push_back(std::clamp(t, t_min_c, t_max_c));
    }
    return series;
}

WeatherSeries load_weather_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open weather CSV", path);
    }
    std::string line;
    long line_no = 1;
    if (!std::getline(in, line)) {
        throw SchemaError("weather CSV is empty: " + path);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp_iso8601,tout_c") {
        throw SchemaError("weather CSV header must be "
                          "'timestamp_iso8601,tout_c', got '" + line + "'");
    }
    WeatherSeries series;
    series.step_s = 0.0;
    std::int64_t prev_t = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError("weather CSV row missing comma", line_no);
        }
        std::int64_t t;
        try {
            t = parse_iso8601(line.substr(0, comma));
        } catch (const std::invalid_argument& e) {
            throw ParseError(std::string("weather CSV: ") + e.what(), line_no);
        }
        double v;
        std::size_t pos = 0;
        try {
            v = std::stod(line.substr(comma + 1), &pos);
        } catch (const std::exception&) {
            throw ParseError("weather CSV: unreadable temperature", line_no);
        }
        if (comma + 1 + pos != line.size()) {
            throw ParseError("weather CSV: trailing junk after temperature",
                             line_no);
        }
        if (first) {
            series.start_s = t;
            first = false;
        } else if (series.step_s == 0.0) {
            series.step_s = static_cast<double>(t - prev_t);
            if (series.step_s <= 0.0) {
                throw SchemaError("weather CSV timestamps must increase");
            }
        } else if (static_cast<double>(t - prev_t) != series.step_s) {
            throw SchemaError("weather CSV has a non-uniform timestamp step "
                              "at line " + std::to_string(line_no));
        }
        prev_t = t;
        series.tout_c.push_back(v);
    }
    if (series.tout_c.empty()) {
        throw SchemaError("weather CSV has no data rows: " + path);
    }
    if (series.step_s == 0.0) series.step_s = 600.0;
    return series;
}

void write_weather_csv(const WeatherSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write weather CSV", path);
    }
    out << "timestamp_iso8601,tout_c\n";
    for (long i = 0; i < series.size(); ++i) {
        out << format_iso8601(series.time_at(i)) << ','
            << format_double(series.tout_c[i]) << '\n';
    }
    if (!out) {
        throw IoError("short write on weather CSV", path);
    }
}

} // namespace zonempc
