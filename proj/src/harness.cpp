#include "zonempc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "zonempc/errors.hpp"
#include "zonempc/timeutil.hpp"

namespace zonempc {

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    // An unreadable config is a configuration problem, not a runtime stage
    // failure; the CLI maps the two to different exit codes.
    if (!in) throw ConfigError("config: cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

std::uint64_t fnv1a_bytes(std::uint64_t h, const void* data, size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a_double(std::uint64_t h, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    return fnv1a_bytes(h, &bits, sizeof bits);
}

double pct_change(double conv, double learn) {
    if (conv == 0.0) return 0.0;
    return (conv - learn) / conv * 100.0;
}

void truncate_log(ScenarioLog& log, long n) {
    log.tout_c.resize(n);
    for (auto& c : log.tin_c) c.resize(n);
    for (auto& c : log.tin_pred_c) c.resize(n);
    for (auto& c : log.p_w) c.resize(n);
    for (auto& c : log.occ_true) c.resize(n);
    for (auto& c : log.occ_pred) c.resize(n);
}

} // namespace

ExperimentConfig load_config(const std::string& path) {
    json j = read_json_file(path);
    ExperimentConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.days = j.value("days", cfg.days);
        cfg.start_year = j.value("start_year", cfg.start_year);
        cfg.initial_temp_c = j.value("initial_temp_c", cfg.initial_temp_c);

        for (const auto& jz : j.at("zones")) {
            ZoneSpec z;
            z.name = jz.at("name").get<std::string>();
            z.area_m2 = jz.at("area_m2").get<double>();
            for (const auto& l : jz.at("layers")) {
                z.layers.push_back(l.get<std::string>());
            }
            if (jz.contains("interzone")) {
                for (const auto& [k, v] : jz.at("interzone").items()) {
                    z.interzone_w_per_k[k] = v.get<double>();
                }
            }
            cfg.zones.push_back(std::move(z));
        }
        const auto& jh = j.at("hvac");
        cfg.hvac.p_min_w = jh.at("p_min_w").get<double>();
        cfg.hvac.p_max_w = jh.at("p_max_w").get<double>();

        if (j.contains("weather")) {
            const auto& w = j["weather"];
            cfg.weather_t_min_c = w.value("t_min_c", cfg.weather_t_min_c);
            cfg.weather_t_max_c = w.value("t_max_c", cfg.weather_t_max_c);
            cfg.weather.diurnal_amp_c =
                w.value("diurnal_amp_c", cfg.weather.diurnal_amp_c);
            cfg.weather.noise_std_c =
                w.value("noise_std_c", cfg.weather.noise_std_c);
            cfg.weather.coldest_day =
                w.value("coldest_day", cfg.weather.coldest_day);
            cfg.weather.warmest_hour =
                w.value("warmest_hour", cfg.weather.warmest_hour);
        }
        if (j.contains("occupancy")) {
            const auto& o = j["occupancy"];
            cfg.occupancy.density_per_m2 =
                o.value("density_per_m2", cfg.occupancy.density_per_m2);
            cfg.occupancy.fluct_max =
                o.value("fluct_max", cfg.occupancy.fluct_max);
            cfg.occupancy.fluct_sigma =
                o.value("fluct_sigma", cfg.occupancy.fluct_sigma);
            cfg.occupancy.fluct_rho =
                o.value("fluct_rho", cfg.occupancy.fluct_rho);
        }
        if (j.contains("training")) {
            const auto& t = j["training"];
            cfg.training_start_doy =
                t.value("start_doy", cfg.training_start_doy);
            cfg.training_days = t.value("days", cfg.training_days);
            cfg.training_max_epochs =
                t.value("max_epochs", cfg.training_max_epochs);
            cfg.net_seed = t.value("net_seed", cfg.net_seed);
            if (t.contains("split")) {
                const auto& s = t["split"];
                if (!s.is_array() || s.size() != 3) {
                    throw SchemaError("config: training.split needs 3 entries");
                }
                for (int i = 0; i < 3; ++i) {
                    cfg.training_split[i] = s[i].get<double>();
                }
            }
        }
        if (j.contains("excitation")) {
            const auto& e = j["excitation"];
            cfg.excitation_days = e.value("days", cfg.excitation_days);
            cfg.excitation_prbs_w = e.value("prbs_w", cfg.excitation_prbs_w);
            cfg.excitation_kp_w_per_k =
                e.value("kp_w_per_k", cfg.excitation_kp_w_per_k);
            cfg.identify_lambda = e.value("lambda", cfg.identify_lambda);
            cfg.identify_f0_scale =
                e.value("f0_scale", cfg.identify_f0_scale);
        }
        if (j.contains("controller")) {
            const auto& c = j["controller"];
            MpcConfig& m = cfg.controller;
            m.n_horizon = c.value("n_horizon", m.n_horizon);
            m.q = c.value("q", m.q);
            m.r = c.value("r", m.r);
            m.t_d_c = c.value("t_d_c", m.t_d_c);
            m.t_min_c = c.value("t_min_c", m.t_min_c);
            m.t_max_c = c.value("t_max_c", m.t_max_c);
            m.p_min_w = c.value("p_min_w", m.p_min_w);
            m.p_max_w = c.value("p_max_w", m.p_max_w);
            m.soft_weight = c.value("soft_weight", m.soft_weight);
            if (c.contains("mode")) {
                m.mode = mpc_mode_from_string(c["mode"].get<std::string>());
            }
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config: ") + e.what());
    }

    if (cfg.zones.empty()) throw ConfigError("config: no zones");
    if (cfg.days < 1) throw ConfigError("config: days must be >= 1");
    if (cfg.training_start_doy < 0 || cfg.training_days < 1 ||
        cfg.training_start_doy + cfg.training_days > 365) {
        throw ConfigError("config: training window must fit inside a year");
    }
    if (cfg.excitation_days < 1 || cfg.excitation_days > cfg.days) {
        throw ConfigError("config: excitation window exceeds the run");
    }
    if (!(cfg.weather_t_min_c < cfg.weather_t_max_c)) {
        throw ConfigError("config: weather t_min_c must be below t_max_c");
    }
    if (!(cfg.identify_lambda > 0.9 && cfg.identify_lambda <= 1.0)) {
        throw ConfigError("config: excitation.lambda outside (0.9, 1]");
    }
    validate(cfg.controller);
    if (cfg.controller.p_min_w < cfg.hvac.p_min_w ||
        cfg.controller.p_max_w > cfg.hvac.p_max_w) {
        throw ConfigError("config: controller power box exceeds hvac limits");
    }

    // Prove the building is constructible now so a bad description fails
    // with a config error instead of a mid-run stage error.
    try {
        BuildingPlant probe(build_zone_params(cfg), cfg.hvac, 600.0);
        (void)probe;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

std::vector<ZoneParams> build_zone_params(const ExperimentConfig& cfg) {
    std::vector<ZoneParams> zones;
    for (const auto& spec : cfg.zones) {
        std::vector<MaterialLayer> layers;
        for (const auto& name : spec.layers) {
            layers.push_back(material_by_name(name));
        }
        LumpedAssembly lumped;
        try {
            lumped = lump_materials(layers, spec.area_m2);
        } catch (const std::exception& e) {
            throw ConfigError("config: zone '" + spec.name + "': " + e.what());
        }
        ZoneParams z;
        z.name = spec.name;
        z.floor_area_m2 = spec.area_m2;
        z.capacitance_j_per_k = lumped.capacitance_j_per_k;
        z.envelope_conductance_w_per_k = lumped.conductance_w_per_k;
        z.interzone_w_per_k = {spec.interzone_w_per_k.begin(),
                               spec.interzone_w_per_k.end()};
        zones.push_back(std::move(z));
    }
    return zones;
}

TrainingInputs make_training_inputs(const ExperimentConfig& cfg) {
    std::vector<std::string> names;
    std::vector<double> areas;
    for (const auto& z : cfg.zones) {
        names.push_back(z.name);
        areas.push_back(z.area_m2);
    }
    TrainingInputs t;
    WeatherSynthParams wp = cfg.weather;
    wp.start_year = cfg.start_year - 1;
    t.weather = synth_weather(365, cfg.weather_t_min_c, cfg.weather_t_max_c,
                              cfg.seed + 2, wp);
    OccupancyProfileParams op = cfg.occupancy;
    op.start_year = cfg.start_year - 1;
    t.occupancy = synth_occupancy(names, areas, 365, cfg.seed + 3, op);
    t.w0 = static_cast<long>(cfg.training_start_doy) * 144;
    t.w1 = t.w0 + static_cast<long>(cfg.training_days) * 144;
    return t;
}

ModeStats mode_stats(const ScenarioLog& log) {
    ModeStats s;
    double cool_sum = 0.0, heat_sum = 0.0;
    long violations = 0;
    for (int z = 0; z < log.n_zones(); ++z) {
        for (long t = 0; t < log.size(); ++t) {
            double p = log.p_w[z][t];
            if (p < 0.0) {
                cool_sum += -p;
                ++s.cooling_samples;
            } else if (p > 0.0) {
                heat_sum += p;
                ++s.heating_samples;
            }
            if (log.occ_true[z][t] > 0) {
                ++s.occupied_samples;
                double tin = log.tin_c[z][t];
                double exc = 0.0;
                if (tin > kComfortMaxC) exc = tin - kComfortMaxC;
                if (tin < kComfortMinC) exc = kComfortMinC - tin;
                if (exc > 0.0) ++violations;
                s.max_excursion_c = std::max(s.max_excursion_c, exc);
            }
        }
    }
    if (s.cooling_samples > 0) s.avg_cooling_power_w = cool_sum / s.cooling_samples;
    if (s.heating_samples > 0) s.avg_heating_power_w = heat_sum / s.heating_samples;
    if (s.occupied_samples > 0) {
        s.comfort_violation_fraction =
            static_cast<double>(violations) / s.occupied_samples;
    }
    return s;
}

std::uint64_t input_hash(const ScenarioLog& log) {
    std::uint64_t h = 14695981039346656037ULL;
    for (long t = 0; t < log.size(); ++t) h = fnv1a_double(h, log.tout_c[t]);
    for (int z = 0; z < log.n_zones(); ++z) {
        for (long t = 0; t < log.size(); ++t) {
            std::int64_t c = log.occ_true[z][t];
            h = fnv1a_bytes(h, &c, sizeof c);
        }
    }
    return h;
}

ComparisonReport compute_report(const ScenarioLog& learn,
                                const ScenarioLog& conv) {
    if (learn.size() != conv.size() || learn.n_zones() != conv.n_zones() ||
        learn.zone_names != conv.zone_names ||
        learn.start_s != conv.start_s || learn.step_s != conv.step_s) {
        throw AlignmentError("compute_report: logs are not aligned");
    }
    ComparisonReport rep;
    rep.input_hash_learning = input_hash(learn);
    rep.input_hash_conventional = input_hash(conv);
    if (rep.input_hash_learning != rep.input_hash_conventional) {
        throw AlignmentError(
            "compute_report: runs saw different weather or occupancy");
    }
    rep.learning = mode_stats(learn);
    rep.conventional = mode_stats(conv);
    rep.cooling_pct_change = pct_change(rep.conventional.avg_cooling_power_w,
                                        rep.learning.avg_cooling_power_w);
    rep.heating_pct_change = pct_change(rep.conventional.avg_heating_power_w,
                                        rep.learning.avg_heating_power_w);
    rep.steps = learn.size();
    rep.zones = learn.n_zones();
    return rep;
}

namespace {

json stats_json(const ModeStats& s) {
    return json{{"avg_cooling_power_w", s.avg_cooling_power_w},
                {"avg_heating_power_w", s.avg_heating_power_w},
                {"cooling_samples", s.cooling_samples},
                {"heating_samples", s.heating_samples},
                {"comfort_violation_fraction", s.comfort_violation_fraction},
                {"max_excursion_c", s.max_excursion_c},
                {"occupied_samples", s.occupied_samples}};
}

} // namespace

void write_report_json(const ComparisonReport& report,
                       const std::string& path) {
    json j{{"learning", stats_json(report.learning)},
           {"conventional", stats_json(report.conventional)},
           {"cooling_pct_change", report.cooling_pct_change},
           {"heating_pct_change", report.heating_pct_change},
           {"input_hash_learning", report.input_hash_learning},
           {"input_hash_conventional", report.input_hash_conventional},
           {"steps", report.steps},
           {"zones", report.zones}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot open report for writing", path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("short write", path);
}

std::string report_summary(const ComparisonReport& report) {
    char buf[256];
    std::ostringstream os;
    os << "steps: " << report.steps << "  zones: " << report.zones << "\n";
    std::snprintf(buf, sizeof buf,
                  "avg cooling power: conventional %.2f W, learning %.2f W, "
                  "change %.2f %%\n",
                  report.conventional.avg_cooling_power_w,
                  report.learning.avg_cooling_power_w,
                  report.cooling_pct_change);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "avg heating power: conventional %.2f W, learning %.2f W, "
                  "change %.2f %%\n",
                  report.conventional.avg_heating_power_w,
                  report.learning.avg_heating_power_w,
                  report.heating_pct_change);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "comfort violations (occupied steps): conventional %.4f "
                  "(max %.2f C), learning %.4f (max %.2f C)\n",
                  report.conventional.comfort_violation_fraction,
                  report.conventional.max_excursion_c,
                  report.learning.comfort_violation_fraction,
                  report.learning.max_excursion_c);
    os << buf;
    os << "paired inputs verified: "
       << (report.input_hash_learning == report.input_hash_conventional
               ? "yes"
               : "NO")
       << "\n";
    return os.str();
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir) {
    namespace fs = std::filesystem;
    {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
    }
    validate(cfg.controller);

    std::vector<ZoneParams> zone_params = build_zone_params(cfg);
    const int nz = static_cast<int>(zone_params.size());
    BuildingPlant plant(zone_params, cfg.hvac, 600.0);

    std::vector<std::string> zone_names;
    std::vector<double> zone_areas;
    for (const auto& z : zone_params) {
        zone_names.push_back(z.name);
        zone_areas.push_back(z.floor_area_m2);
    }

    ExperimentResult result;
    result.learn_csv_path = (fs::path(out_dir) / "learning.csv").string();
    result.conv_csv_path = (fs::path(out_dir) / "conventional.csv").string();
    result.narx_json_path = (fs::path(out_dir) / "narx.json").string();
    result.models_json_path = (fs::path(out_dir) / "models.json").string();
    result.report_json_path = (fs::path(out_dir) / "report.json").string();

    // Stage 1: exogenous inputs. The control year runs on (seed, seed+1);
    // the previous year, which supplies the occupancy training data and
    // the conventional controller's average, runs on (seed+2, seed+3).
    WeatherSeries weather;
    OccupancySchedule occ;
    TrainingInputs prev;
    try {
        WeatherSynthParams wp = cfg.weather;
        wp.start_year = cfg.start_year;
        weather = synth_weather(cfg.days, cfg.weather_t_min_c,
                                cfg.weather_t_max_c, cfg.seed, wp);
        OccupancyProfileParams op = cfg.occupancy;
        op.start_year = cfg.start_year;
        occ = synth_occupancy(zone_names, zone_areas, cfg.days, cfg.seed + 1,
                              op);
        prev = make_training_inputs(cfg);
    } catch (const std::exception& e) {
        throw StageError(std::string("stage 1 (inputs): ") + e.what());
    }

    // Stage 2: training window over the previous year.
    NarxDataset data;
    std::vector<double> b_bar_count(nz, 0.0);
    try {
        data = build_narx_dataset(prev.occupancy, prev.weather, 0, prev.w0,
                                  prev.w1);
        for (int z = 0; z < nz; ++z) {
            double sum = 0.0;
            for (long t = prev.w0; t < prev.w1; ++t) {
                sum += prev.occupancy.counts[z][t];
            }
            b_bar_count[z] = sum / static_cast<double>(prev.w1 - prev.w0);
        }
    } catch (const std::exception& e) {
        throw StageError(std::string("stage 2 (training data): ") + e.what());
    }

    // Stage 3: occupancy network. One net serves all zones; the zones
    // share a profile family, so zone 0's data generalizes.
    NarxNetwork net;
    try {
        net = make_narx(kFeatureDim, 10, 2, 2, cfg.net_seed);
        result.narx_training = train_narx(net, data, cfg.training_split,
                                          cfg.training_max_epochs);
        save_narx_json(net, result.narx_json_path);
    } catch (const std::exception& e) {
        throw StageError(std::string("stage 3 (occupancy training): ") +
                         e.what());
    }

    // Stage 4: closed-loop excitation run and per-zone identification.
    try {
        const long n_exc = static_cast<long>(cfg.excitation_days) * 144;
        ScenarioLog exc = make_log(zone_names, weather.start_s, 600.0, n_exc,
                                   "excitation");
        PlantState state = plant.initial_state(cfg.initial_temp_c);
        std::mt19937_64 prbs(cfg.seed + 4);
        std::bernoulli_distribution coin(0.5);
        HvacCommand cmd;
        cmd.power_w.resize(nz);
        std::vector<double> heat(nz);
        for (long t = 0; t < n_exc; ++t) {
            exc.tout_c[t] = weather.tout_c[t];
            for (int z = 0; z < nz; ++z) {
                double p = cfg.excitation_kp_w_per_k *
                               (cfg.controller.t_d_c - state.zone_temp_c[z]) +
                           (coin(prbs) ? cfg.excitation_prbs_w
                                       : -cfg.excitation_prbs_w);
                p = std::clamp(p, cfg.hvac.p_min_w, cfg.hvac.p_max_w);
                cmd.power_w[z] = p;
                heat[z] = occ.counts[z][t] * kOccupantHeatW;
                exc.tin_c[z][t] = state.zone_temp_c[z];
                exc.tin_pred_c[z][t] = state.zone_temp_c[z];
                exc.p_w[z][t] = p;
                exc.occ_true[z][t] = occ.counts[z][t];
                exc.occ_pred[z][t] = occ.counts[z][t];
            }
            state = plant.step(state, cmd, weather.tout_c[t], heat);
        }
        for (int z = 0; z < nz; ++z) {
            result.models.push_back(
                identify(exc, z, zone_params[z].capacitance_j_per_k,
                         cfg.identify_lambda, cfg.identify_f0_scale));
        }
        save_models_json(result.models, result.models_json_path);
    } catch (const std::exception& e) {
        throw StageError(std::string("stage 4 (identification): ") + e.what());
    }

    // Stages 5 and 6: one year per controller mode, identical inputs.
    auto run_year = [&](MpcMode mode, const std::string& csv_path,
                        const char* label) -> ScenarioLog {
        const long n = weather.size();
        ScenarioLog log =
            make_log(zone_names, weather.start_s, 600.0, n, to_string(mode));
        long done = 0;
        try {
            PlantState state = plant.initial_state(cfg.initial_temp_c);
            MpcConfig mc = cfg.controller;
            mc.mode = mode;
            std::vector<ZoneMpc> ctls;
            ctls.reserve(nz);
            for (int z = 0; z < nz; ++z) {
                ctls.emplace_back(result.models[z].model, mc, z, &occ,
                                  &weather,
                                  mode == MpcMode::learning ? &net : nullptr,
                                  b_bar_count[z]);
            }
            std::vector<double> pred_t(nz, cfg.initial_temp_c);
            std::vector<double> pred_o(nz);
            for (int z = 0; z < nz; ++z) pred_o[z] = occ.counts[z][0];
            HvacCommand cmd;
            cmd.power_w.resize(nz);
            std::vector<double> heat(nz);
            for (long t = 0; t < n; ++t) {
                log.tout_c[t] = weather.tout_c[t];
                for (int z = 0; z < nz; ++z) {
                    log.tin_c[z][t] = state.zone_temp_c[z];
                    log.tin_pred_c[z][t] = pred_t[z];
                    log.occ_true[z][t] = occ.counts[z][t];
                    log.occ_pred[z][t] = pred_o[z];
                    double p = ctls[z].step(t, state.zone_temp_c[z]);
                    log.p_w[z][t] = p;
                    cmd.power_w[z] = p;
                    pred_t[z] = ctls[z].one_step_temp_pred();
                    pred_o[z] = ctls[z].one_step_occ_pred();
                    heat[z] = occ.counts[z][t] * kOccupantHeatW;
                }
                done = t + 1;
                state = plant.step(state, cmd, weather.tout_c[t], heat);
            }
            export_csv(log, csv_path);
        } catch (const std::exception& e) {
            truncate_log(log, done);
            try {
                export_csv(log, csv_path);
            } catch (...) {
                // the partial flush is best-effort; the stage error wins
            }
            throw StageError(std::string(label) + ": " + e.what());
        }
        return log;
    };

    ScenarioLog learn = run_year(MpcMode::learning, result.learn_csv_path,
                                 "stage 5 (learning year)");
    ScenarioLog conv = run_year(MpcMode::conventional, result.conv_csv_path,
                                "stage 6 (conventional year)");

    // Stage 7: comparison report.
    try {
        result.report = compute_report(learn, conv);
        write_report_json(result.report, result.report_json_path);
    } catch (const std::exception& e) {
        throw StageError(std::string("stage 7 (report): ") + e.what());
    }
    return result;
}

} // namespace zonempc
