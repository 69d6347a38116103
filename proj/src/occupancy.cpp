#include "zonempc/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "zonempc/errors.hpp"
#include "zonempc/timeutil.hpp"

namespace zonempc {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr long kStepsPerDay = 144;

double smoothstep(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * (3.0 - 2.0 * x);
}
} // namespace

double weekday_profile_fraction(double second_of_day,
                                const OccupancyProfileParams& p) {
    double h = second_of_day / 3600.0;
    if (h <= p.ramp_up_start_h || h >= p.ramp_down_end_h) return 0.0;
    double f = 1.0;
    if (h < p.ramp_up_end_h) {
        f = smoothstep((h - p.ramp_up_start_h) /
                       (p.ramp_up_end_h - p.ramp_up_start_h));
    } else if (h >= p.ramp_down_start_h) {
        f = 1.0 - smoothstep((h - p.ramp_down_start_h) /
                             (p.ramp_down_end_h - p.ramp_down_start_h));
    }
    // Lunch dip carved out of whatever the ramps allow, with smooth edges.
    double dip_width = 0.5; // hours of shoulder on each side of the dip
    double dip = 1.0;
    if (h > p.lunch_start_h - dip_width && h < p.lunch_end_h + dip_width) {
        double depth = 1.0 - p.lunch_level;
        double enter = smoothstep((h - (p.lunch_start_h - dip_width)) / dip_width);
        double leave = smoothstep(((p.lunch_end_h + dip_width) - h) / dip_width);
        dip = 1.0 - depth * std::min(enter, leave);
    }
    return f * dip;
}

OccupancySchedule synth_occupancy(const std::vector<std::string>& zone_names,
                                  const std::vector<double>& zone_areas_m2,
                                  int days, std::uint64_t seed,
                                  const OccupancyProfileParams& params) {
    if (zone_names.empty() || zone_names.size() != zone_areas_m2.size()) {
        throw std::invalid_argument("synth_occupancy: zone name/area mismatch");
    }
    if (days <= 0) {
        throw std::invalid_argument("synth_occupancy: days must be positive");
    }
    OccupancySchedule sched;
    sched.start_s = days_from_civil(params.start_year, 1, 1) * 86400ll;
    sched.step_s = 600.0;
    sched.zone_names = zone_names;
    long steps = static_cast<long>(days) * kStepsPerDay;
    for (std::size_t z = 0; z < zone_names.size(); ++z) {
        if (!(zone_areas_m2[z] > 0.0)) {
            throw std::invalid_argument("synth_occupancy: non-positive area");
        }
        int cap = static_cast<int>(
            std::ceil(params.density_per_m2 * zone_areas_m2[z]));
        sched.max_count.push_back(cap);
        std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * (z + 1));
        std::normal_distribution<double> gauss(0.0, 1.0);
        double wander = 0.0;
        const double drive =
            params.fluct_sigma * std::sqrt(1.0 - params.fluct_rho * params.fluct_rho);
        std::vector<int> counts;
        counts.reserve(steps);
        for (long i = 0; i < steps; ++i) {
            // Advance the wander unconditionally so zone streams stay
            // deterministic regardless of the calendar.
            wander = params.fluct_rho * wander + drive * gauss(rng);
            wander = std::clamp(wander, -params.fluct_max, params.fluct_max);
            std::int64_t t = sched.time_at(i);
            double frac = 0.0;
            if (!is_weekend(t)) {
                frac = weekday_profile_fraction(
                    static_cast<double>(seconds_of_day(t)), params);
            }
            double value = cap * frac * (1.0 + wander);
            int count = static_cast<int>(std::lround(value));
            counts.push_back(std::clamp(count, 0, cap));
        }
        sched.counts.push_back(std::move(counts));
    }
    return sched;
}

void write_occupancy_csv(const OccupancySchedule& sched,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write occupancy CSV", path);
    }
    out << "timestamp_iso8601,zone,persons\n";
    for (long i = 0; i < sched.size(); ++i) {
        std::string ts = format_iso8601(sched.time_at(i));
        for (std::size_t z = 0; z < sched.zone_names.size(); ++z) {
            out << ts << ',' << sched.zone_names[z] << ','
                << sched.counts[z][i] << '\n';
        }
    }
    if (!out) {
        throw IoError("short write on occupancy CSV", path);
    }
}

OccupancySchedule load_occupancy_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open occupancy CSV", path);
    }
    std::string line;
    long line_no = 1;
    if (!std::getline(in, line)) {
        throw SchemaError("occupancy CSV is empty: " + path);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp_iso8601,zone,persons") {
        throw SchemaError("occupancy CSV header must be "
                          "'timestamp_iso8601,zone,persons', got '" + line + "'");
    }
    OccupancySchedule sched;
    sched.step_s = 0.0;
    std::int64_t prev_t = 0;
    bool have_first = false;
    long step_index = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto c1 = line.find(',');
        auto c2 = c1 == std::string::npos ? std::string::npos
                                          : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw ParseError("occupancy CSV row needs 3 fields", line_no);
        }
        std::int64_t t;
        try {
            t = parse_iso8601(line.substr(0, c1));
        } catch (const std::invalid_argument& e) {
            throw ParseError(std::string("occupancy CSV: ") + e.what(), line_no);
        }
        std::string zone = line.substr(c1 + 1, c2 - c1 - 1);
        int persons;
        try {
            std::size_t pos = 0;
            persons = std::stoi(line.substr(c2 + 1), &pos);
            if (c2 + 1 + pos != line.size()) {
                throw std::invalid_argument("trailing junk");
            }
        } catch (const std::exception&) {
            throw ParseError("occupancy CSV: unreadable person count", line_no);
        }
        if (persons < 0) {
            throw ParseError("occupancy CSV: negative person count", line_no);
        }
        if (!have_first) {
            sched.start_s = t;
            have_first = true;
        }
        if (t != prev_t || step_index < 0) {
            if (step_index >= 0) {
                double step = static_cast<double>(t - prev_t);
                if (sched.step_s == 0.0) {
                    if (step <= 0.0) {
                        throw SchemaError(
                            "occupancy CSV timestamps must increase");
                    }
                    sched.step_s = step;
                } else if (step != sched.step_s) {
                    throw SchemaError("occupancy CSV has a non-uniform step "
                                      "at line " + std::to_string(line_no));
                }
            }
            ++step_index;
            prev_t = t;
        }
        auto it = std::find(sched.zone_names.begin(), sched.zone_names.end(),
                            zone);
        std::size_t zi;
        if (it == sched.zone_names.end()) {
            if (step_index != 0) {
                throw SchemaError("occupancy CSV: zone '" + zone +
                                  "' appears after the first step");
            }
            zi = sched.zone_names.size();
            sched.zone_names.push_back(zone);
            sched.counts.emplace_back();
        } else {
            zi = static_cast<std::size_t>(it - sched.zone_names.begin());
        }
        if (static_cast<long>(sched.counts[zi].size()) != step_index) {
            throw SchemaError("occupancy CSV: duplicate or missing zone row "
                              "at line " + std::to_string(line_no));
        }
        sched.counts[zi].push_back(persons);
    }
    if (sched.zone_names.empty()) {
        throw SchemaError("occupancy CSV has no data rows: " + path);
    }
    for (const auto& c : sched.counts) {
        if (c.size() != sched.counts[0].size()) {
            throw SchemaError("occupancy CSV: ragged zone series");
        }
    }
    if (sched.step_s == 0.0) sched.step_s = 600.0;
    for (std::size_t z = 0; z < sched.counts.size(); ++z) {
        int cap = 0;
        for (int v : sched.counts[z]) cap = std::max(cap, v);
        sched.max_count.push_back(std::max(cap, 1));
    }
    return sched;
}

std::vector<double> build_features(const OccupancySchedule& sched,
                                   const WeatherSeries& weather, long t) {
    if (sched.start_s != weather.start_s || sched.step_s != weather.step_s ||
        sched.size() != weather.size()) {
        throw AlignmentError("build_features: schedule and weather series "
                             "are not aligned");
    }
    if (t < 2 || t >= sched.size()) {
        throw std::out_of_range("build_features: step index " +
                                std::to_string(t) + " outside [2, length)");
    }
    std::int64_t at = sched.time_at(t);
    double tod = static_cast<double>(seconds_of_day(at)) / 86400.0;
    CivilDate cd = civil_from_days(epoch_days(at));
    double doy = (day_of_year(cd) - 1) / 365.0;
    double tout = weather.tout_c[t];
    double tout_norm = 2.0 * (tout - kToutNormMin) /
                           (kToutNormMax - kToutNormMin) - 1.0;
    return {
        std::sin(2.0 * kPi * tod),
        std::cos(2.0 * kPi * tod),
        std::sin(2.0 * kPi * doy),
        std::cos(2.0 * kPi * doy),
        is_weekend(at) ? 0.0 : 1.0,
        tout_norm,
        std::sin(4.0 * kPi * tod),
        std::cos(4.0 * kPi * tod),
    };
}

double occupancy_to_temp_offset(double count, double c_j_per_k, double dt_s) {
    if (count < 0.0) {
        throw std::invalid_argument("occupancy_to_temp_offset: negative count");
    }
    if (!(c_j_per_k > 0.0) || !(dt_s > 0.0)) {
        throw std::invalid_argument("occupancy_to_temp_offset: C and dt must "
                                    "be positive");
    }
    return count * kOccupantHeatW * dt_s / c_j_per_k;
}

} // namespace zonempc
