#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "zonempc/mpc.hpp"
#include "zonempc/narx.hpp"
#include "zonempc/occupancy.hpp"
#include "zonempc/plant.hpp"
#include "zonempc/scenario.hpp"
#include "zonempc/sysid.hpp"
#include "zonempc/weather.hpp"

namespace zonempc {

// Comfort band used for the violation metrics, fixed independently of the
// controller's (possibly softer or tighter) configured band.
constexpr double kComfortMinC = 20.0;
constexpr double kComfortMaxC = 25.0;

struct ZoneSpec {
    std::string name;
    double area_m2 = 400.0;
    std::vector<std::string> layers; // construction material catalog names
    std::map<std::string, double> interzone_w_per_k;
};

struct ExperimentConfig {
    std::uint64_t seed = 42;
    int days = 365;
    int start_year = 2021;
    double initial_temp_c = 22.5;

    std::vector<ZoneSpec> zones;
    PowerLimits hvac{-5000.0, 10000.0};

    // weather block
    double weather_t_min_c = -16.6;
    double weather_t_max_c = 31.6;
    WeatherSynthParams weather;

    // occupancy block
    OccupancyProfileParams occupancy;

    // training block (NARX): window into the *previous* year's data.
    int training_start_doy = 181; // 0-based; 181 = July 1 in a common year
    int training_days = 184;      // July 1 .. December 31
    int training_max_epochs = 60;
    std::array<double, 3> training_split{0.7, 0.15, 0.15};
    std::uint64_t net_seed = 7;

    // excitation block (RLS identification run)
    int excitation_days = 30;
    double excitation_prbs_w = 1500.0;
    double excitation_kp_w_per_k = 500.0;
    double identify_lambda = 0.99;
    double identify_f0_scale = 1e6;

    MpcConfig controller;
};

// Parses the experiment JSON. Required: zones[] (with name, area_m2,
// layers[], interzone) and hvac {p_min_w, p_max_w}; every other field falls
// back to its default above. Throws IoError if the file cannot be read,
// ConfigError/SchemaError on malformed or inconsistent content.
ExperimentConfig load_config(const std::string& path);

// Previous-year data that feeds occupancy training and the conventional
// controller's average: a full synthetic year on seeds (seed+2, seed+3)
// with [w0, w1) marking the configured training window.
struct TrainingInputs {
    WeatherSeries weather;
    OccupancySchedule occupancy;
    long w0 = 0;
    long w1 = 0;
};
TrainingInputs make_training_inputs(const ExperimentConfig& cfg);

// Zone specs -> plant zone parameters via the lumped-assembly reduction.
std::vector<ZoneParams> build_zone_params(const ExperimentConfig& cfg);

struct ModeStats {
    double avg_cooling_power_w = 0.0; // mean |P| over P < 0 samples
    double avg_heating_power_w = 0.0; // mean P over P > 0 samples
    long cooling_samples = 0;
    long heating_samples = 0;
    double comfort_violation_fraction = 0.0; // occupied samples outside band
    double max_excursion_c = 0.0;            // worst distance outside band
    long occupied_samples = 0;
};

struct ComparisonReport {
    ModeStats learning;
    ModeStats conventional;
    // (conv - learn) / conv * 100; positive means the learning controller
    // used less. Zero when the denominator is zero.
    double cooling_pct_change = 0.0;
    double heating_pct_change = 0.0;
    // FNV-1a over each run's outdoor temperatures and true occupancy, used
    // to prove both controllers saw identical inputs.
    std::uint64_t input_hash_learning = 0;
    std::uint64_t input_hash_conventional = 0;
    long steps = 0;
    int zones = 0;
};

// Per-mode power/comfort statistics pooled across zones.
ModeStats mode_stats(const ScenarioLog& log);

// Hash of the exogenous inputs (tout and occupancy truth) of a run.
std::uint64_t input_hash(const ScenarioLog& log);

// Throws AlignmentError if the logs differ in shape, timestamps, or
// exogenous inputs.
ComparisonReport compute_report(const ScenarioLog& learn,
                                const ScenarioLog& conv);

void write_report_json(const ComparisonReport& report,
                       const std::string& path);
std::string report_summary(const ComparisonReport& report);

struct ExperimentResult {
    ComparisonReport report;
    TrainingReport narx_training;
    std::vector<IdentifiedModel> models;
    std::string learn_csv_path;
    std::string conv_csv_path;
    std::string narx_json_path;
    std::string models_json_path;
    std::string report_json_path;
};

// Full pipeline: synthesize inputs, train the occupancy network on the
// prior July-December window, identify the reduced thermal models from a
// closed-loop excitation log, run the year once per controller mode with
// identical inputs, and emit CSV logs plus a JSON report into out_dir.
// Stage failures are rethrown as StageError with a stage label; partially
// simulated year logs are flushed to disk first.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir);

} // namespace zonempc
