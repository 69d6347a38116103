#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace zonempc {

struct WeatherSeries {
    std::int64_t start_s = 0; // Unix seconds, UTC
    double step_s = 600.0;
    std::vector<double> tout_c;

    std::int64_t time_at(long i) const {
        return start_s + static_cast<std::int64_t>(step_s * i);
    }
    long size() const { return static_cast<long>(tout_c.size()); }
};

struct WeatherSynthParams {
    double diurnal_amp_c = 5.0;
    double noise_std_c = 1.0;
    // Day of year (0-based) at which the annual sinusoid bottoms out.
    // 15 puts the coldest day in mid-January and the hottest mid-July.
    double coldest_day = 15.0;
    // Hour of day of the diurnal peak.
    double warmest_hour = 15.0;
    int start_year = 2021;
};

// Annual sinusoid spanning [t_min, t_max] plus a +-diurnal_amp_c diurnal
// sinusoid plus seeded Gaussian noise, the sum clipped back to
// [t_min, t_max]. 144 samples per day at 600 s. Deterministic per seed and
// free of global RNG state.
WeatherSeries synth_weather(int days, double t_min_c, double t_max_c,
                            std::uint64_t seed,
                            const WeatherSynthParams& params = {});

// CSV with exact header "timestamp_iso8601,tout_c".
// Malformed rows raise ParseError with the line number; a non-uniform
// timestamp step or wrong header raises SchemaError.
WeatherSeries load_weather_csv(const std::string& path);
void write_weather_csv(const WeatherSeries& series, const std::string& path);

} // namespace zonempc
