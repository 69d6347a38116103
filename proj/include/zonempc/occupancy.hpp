#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zonempc/weather.hpp"

namespace zonempc {

// Sensible heat released per occupant (W), seated light office work.
constexpr double kOccupantHeatW = 100.0;

struct OccupancySchedule {
    std::int64_t start_s = 0;
    double step_s = 600.0;
    std::vector<std::string> zone_names;
    std::vector<int> max_count;            // per zone design cap
    std::vector<std::vector<int>> counts;  // [zone][step]

    long size() const {
        return counts.empty() ? 0 : static_cast<long>(counts[0].size());
    }
    std::int64_t time_at(long i) const {
        return start_s + static_cast<std::int64_t>(step_s * i);
    }
};

struct OccupancyProfileParams {
    double density_per_m2 = 0.1;
    double ramp_up_start_h = 7.0;
    double ramp_up_end_h = 9.0;
    double lunch_start_h = 12.0;
    double lunch_end_h = 13.0;
    double lunch_level = 0.6;      // fraction of plateau kept over lunch
    double ramp_down_start_h = 17.0;
    double ramp_down_end_h = 19.0;
    // Slow multiplicative wander applied to the weekday profile, clipped to
    // +-fluct_max. AR(1) per step; rho close to 1 keeps it smooth enough to
    // be trackable from recent samples.
    double fluct_max = 0.10;
    double fluct_sigma = 0.003;
    double fluct_rho = 0.995;
    int start_year = 2021;
};

// Deterministic weekday profile: smooth ramp up 07:00-09:00 to the design
// cap, plateau with seeded wander, dip over lunch, ramp down 17:00-19:00,
// zero overnight and on weekends. Counts are integers in [0, max_count].
OccupancySchedule synth_occupancy(const std::vector<std::string>& zone_names,
                                  const std::vector<double>& zone_areas_m2,
                                  int days, std::uint64_t seed,
                                  const OccupancyProfileParams& params = {});

// Deterministic weekday fraction of the design cap at a given second of day
// (no wander). Exposed for tests.
double weekday_profile_fraction(double second_of_day,
                                const OccupancyProfileParams& params);

// CSV with exact header "timestamp_iso8601,zone,persons", rows grouped per
// step in zone order.
void write_occupancy_csv(const OccupancySchedule& sched,
                         const std::string& path);
OccupancySchedule load_occupancy_csv(const std::string& path);

// Exogenous feature vector for step t of an aligned schedule/weather pair,
// each entry inside [-1, 1]:
//   [sin tod, cos tod, sin doy, cos doy, weekday flag, tout_norm,
//    sin 2*tod, cos 2*tod]
// tout_norm maps [-20, 40] degC affinely onto [-1, 1]. The second
// time-of-day harmonic sharpens the fit around schedule corners.
// Throws std::out_of_range for t < 2 (delay embedding needs history) or
// t >= length; AlignmentError if schedule and weather differ in start,
// step, or length.
std::vector<double> build_features(const OccupancySchedule& sched,
                                   const WeatherSeries& weather, long t);

constexpr int kFeatureDim = 8;
constexpr double kToutNormMin = -20.0;
constexpr double kToutNormMax = 40.0;

// Temperature rise over one step caused by `count` occupants in a zone of
// heat capacity c_j_per_k:  b = count * 100 W * dt / C.
double occupancy_to_temp_offset(double count, double c_j_per_k, double dt_s);

} // namespace zonempc
