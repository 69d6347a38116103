#include <algorithm>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zonempc/errors.hpp"
#include "zonempc/harness.hpp"

namespace {

using namespace zonempc;

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 bool have_seed, std::uint64_t seed, int days) {
    ExperimentConfig cfg = load_config(config_path);
    if (have_seed) cfg.seed = seed;
    if (days > 0) {
        cfg.days = days;
        cfg.excitation_days = std::min(cfg.excitation_days, days);
    }
    ExperimentResult res = run_experiment(cfg, out_dir);
    std::cout << report_summary(res.report);
    std::cout << "occupancy model: " << res.narx_json_path
              << " (test mse " << res.narx_training.mse_test << ", "
              << res.narx_training.epochs_run << " epochs)\n";
    std::cout << "thermal models: " << res.models_json_path << "\n";
    for (const auto& m : res.models) {
        std::cout << "  " << m.zone << ": a=" << m.model.a
                  << " U=" << m.model.u_w_per_k << " W/K"
                  << " rms=" << m.rms_c << " C\n";
    }
    std::cout << "logs: " << res.learn_csv_path << ", " << res.conv_csv_path
              << "\n";
    std::cout << "report: " << res.report_json_path << "\n";
    return 0;
}

int cmd_train_occupancy(const std::string& config_path,
                        const std::string& out_path) {
    ExperimentConfig cfg = load_config(config_path);
    TrainingInputs prev = make_training_inputs(cfg);
    NarxDataset data =
        build_narx_dataset(prev.occupancy, prev.weather, 0, prev.w0, prev.w1);
    NarxNetwork net = make_narx(kFeatureDim, 10, 2, 2, cfg.net_seed);
    TrainingReport rep =
        train_narx(net, data, cfg.training_split, cfg.training_max_epochs);
    save_narx_json(net, out_path);
    std::cout << "trained on " << data.n() << " samples, " << rep.epochs_run
              << " epochs, stop: " << to_string(rep.stop_reason) << "\n";
    std::cout << "mse train/val/test: " << rep.mse_train << " / "
              << rep.mse_val << " / " << rep.mse_test << "\n";
    std::cout << "r train/val/test: " << rep.r_train << " / " << rep.r_val
              << " / " << rep.r_test << "\n";
    std::cout << "model written to " << out_path << "\n";
    return 0;
}

int cmd_identify(const std::string& log_path, const std::string& out_path,
                 const std::string& config_path, const std::string& only_zone,
                 double lambda, double f0_scale) {
    ExperimentConfig cfg = load_config(config_path);
    std::vector<ZoneParams> zones = build_zone_params(cfg);
    ScenarioLog log = import_csv(log_path);
    std::vector<IdentifiedModel> models;
    for (int z = 0; z < log.n_zones(); ++z) {
        const std::string& name = log.zone_names[z];
        if (!only_zone.empty() && name != only_zone) continue;
        auto it = std::find_if(zones.begin(), zones.end(),
                               [&](const ZoneParams& p) {
                                   return p.name == name;
                               });
        if (it == zones.end()) {
            throw ConfigError("identify: log zone '" + name +
                              "' is not in the building config");
        }
        models.push_back(
            identify(log, z, it->capacitance_j_per_k, lambda, f0_scale));
        const auto& m = models.back();
        std::cout << m.zone << ": a=" << m.model.a
                  << " U=" << m.model.u_w_per_k << " W/K rms=" << m.rms_c
                  << " C\n";
    }
    if (models.empty()) {
        throw ConfigError("identify: no matching zone in " + log_path);
    }
    save_models_json(models, out_path);
    std::cout << "models written to " << out_path << "\n";
    return 0;
}

int cmd_report(const std::string& learn_path, const std::string& conv_path,
               const std::string& out_path) {
    ScenarioLog learn = import_csv(learn_path);
    ScenarioLog conv = import_csv(conv_path);
    ComparisonReport rep = compute_report(learn, conv);
    std::cout << report_summary(rep);
    if (!out_path.empty()) {
        write_report_json(rep, out_path);
        std::cout << "report written to " << out_path << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learning-based MPC toolkit for a multi-zone building"};
    app.require_subcommand(1);

    std::string config_path, out_dir, out_path, log_path;
    std::string learn_path, conv_path, only_zone;
    std::uint64_t seed = 0;
    int days = 0;
    double lambda = 0.99, f0_scale = 1e6;

    auto* sim = app.add_subcommand(
        "simulate", "Run the full train/identify/control pipeline");
    sim->add_option("--config", config_path, "experiment JSON")->required();
    sim->add_option("--out-dir", out_dir, "artifact directory")->required();
    auto* seed_opt = sim->add_option("--seed", seed, "override config seed");
    sim->add_option("--days", days, "override simulated days");

    auto* train = app.add_subcommand(
        "train-occupancy", "Train the occupancy forecaster only");
    train->add_option("--config", config_path, "experiment JSON")->required();
    train->add_option("--out", out_path, "output model JSON")->required();

    auto* ident = app.add_subcommand(
        "identify", "Fit zone thermal models from a logged run");
    ident->add_option("--log", log_path, "scenario CSV")->required();
    ident->add_option("--out", out_path, "output models JSON")->required();
    ident->add_option("--config", config_path,
                      "building config supplying zone capacitances")
        ->required();
    ident->add_option("--zone", only_zone, "restrict to one zone");
    ident->add_option("--lambda", lambda, "forgetting factor");
    ident->add_option("--f0-scale", f0_scale, "initial gain scale");

    auto* rep = app.add_subcommand(
        "report", "Compare a learning log against a conventional log");
    rep->add_option("--learn", learn_path, "learning-mode CSV")->required();
    rep->add_option("--conv", conv_path, "conventional-mode CSV")->required();
    rep->add_option("--out", out_path, "optional report JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(sim)) {
            return cmd_simulate(config_path, out_dir, seed_opt->count() > 0,
                                seed, days);
        }
        if (app.got_subcommand(train)) {
            return cmd_train_occupancy(config_path, out_path);
        }
        if (app.got_subcommand(ident)) {
            return cmd_identify(log_path, out_path, config_path, only_zone,
                                lambda, f0_scale);
        }
        return cmd_report(learn_path, conv_path, out_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const StageError& e) {
        std::cerr << "stage error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
