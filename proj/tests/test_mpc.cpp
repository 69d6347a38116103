#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "zonempc/errors.hpp"
#include "zonempc/mpc.hpp"

using namespace zonempc;

namespace {

double soft_excess(double t, const MpcConfig& cfg) {
    if (t > cfg.t_max_c) return t - cfg.t_max_c;
    if (t < cfg.t_min_c) return t - cfg.t_min_c;
    return 0.0;
}

// Full objective (tracking + movement + soft band), evaluated the long way
// for brute-force comparisons.
double full_cost(const ThermalModel& model, const MpcConfig& cfg, double tin0,
                 double p_prev, const std::vector<double>& tout,
                 const std::vector<double>& b,
                 const std::vector<double>& powers) {
    auto temps = predict_trajectory(model, tin0, powers, tout, b);
    double j = mpc_cost(temps, powers, p_prev, cfg);
    for (double t : temps) {
        double s = soft_excess(t, cfg);
        j += cfg.soft_weight * s * s;
    }
    return j;
}

} // namespace

TEST_CASE("predict_trajectory") {
    ThermalModel m{1.0, 100.0, 1e6, 600.0};

    SUBCASE("hand evaluation, one step") {
        auto t = predict_trajectory(m, 20.0, {2000.0}, {10.0}, {0.0});
        REQUIRE(t.size() == 1);
        CHECK(t[0] == doctest::Approx(20.6).epsilon(1e-12));
    }
    SUBCASE("balanced heat flow holds the state") {
        // P exactly covers the envelope loss: U * (20 - 10) = 1000 W.
        std::vector<double> p(5, 1000.0), tout(5, 10.0), b(5, 0.0);
        auto t = predict_trajectory(m, 20.0, p, tout, b);
        for (double v : t) CHECK(v == doctest::Approx(20.0).epsilon(1e-12));
    }
    SUBCASE("superposition in the power input") {
        ThermalModel m2{0.98, 120.0, 2e6, 600.0};
        std::vector<double> tout = {5, 7, -3, 0, 10, 2};
        std::vector<double> b = {0.1, 0, 0.2, 0, 0, 0.05};
        std::vector<double> p1 = {500, -200, 0, 900, 300, -100};
        std::vector<double> p2 = {-50, 1000, 250, 0, -400, 600};
        std::vector<double> sum(6);
        for (int k = 0; k < 6; ++k) sum[k] = p1[k] + p2[k];
        auto ta = predict_trajectory(m2, 21.0, sum, tout, b);
        auto tb = predict_trajectory(m2, 21.0, p2, tout, b);
        Eigen::MatrixXd mm;
        Eigen::VectorXd vv;
        affine_prediction(m2, 21.0, tout, b, mm, vv);
        Eigen::Map<Eigen::VectorXd> p1v(p1.data(), 6);
        Eigen::VectorXd lin = mm * p1v;
        for (int k = 0; k < 6; ++k) {
            CHECK(std::abs((ta[k] - tb[k]) - lin[k]) < 1e-9);
        }
    }
    SUBCASE("affine form matches the rollout") {
        ThermalModel m2{0.995, 264.58, 4.757e6, 600.0};
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> uni(-2000.0, 4000.0);
        std::vector<double> p(6), tout(6), b(6);
        for (int k = 0; k < 6; ++k) {
            p[k] = uni(rng);
            tout[k] = -10.0 + k * 3.0;
            b[k] = 0.02 * k;
        }
        auto roll = predict_trajectory(m2, 22.0, p, tout, b);
        Eigen::MatrixXd mm;
        Eigen::VectorXd vv;
        affine_prediction(m2, 22.0, tout, b, mm, vv);
        Eigen::Map<Eigen::VectorXd> pv(p.data(), 6);
        Eigen::VectorXd lin = mm * pv + vv;
        for (int k = 0; k < 6; ++k) CHECK(std::abs(roll[k] - lin[k]) < 1e-9);
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(predict_trajectory(m, 20.0, {0.0}, {0.0, 1.0}, {0.0}),
                        std::invalid_argument);
        CHECK_THROWS_AS(predict_trajectory(m, 20.0, {}, {}, {}),
                        std::invalid_argument);
        ThermalModel bad{std::nan(""), 100.0, 1e6, 600.0};
        CHECK_THROWS_AS(predict_trajectory(bad, 20.0, {0.0}, {0.0}, {0.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("mpc_cost") {
    MpcConfig cfg;
    SUBCASE("perfect tracking, no movement") {
        std::vector<double> t(4, cfg.t_d_c), p(4, 800.0);
        CHECK(mpc_cost(t, p, 800.0, cfg) == 0.0);
    }
    SUBCASE("single quadratic term") {
        MpcConfig c1 = cfg;
        c1.n_horizon = 1;
        c1.r = 0.0;
        CHECK(mpc_cost({22.5}, {0.0}, 0.0, c1) == 0.0);
        CHECK(mpc_cost({20.0}, {0.0}, 0.0, c1) == doctest::Approx(6.25));
    }
    SUBCASE("two-step hand evaluation") {
        MpcConfig c2 = cfg;
        c2.q = 1.0;
        c2.r = 0.001;
        // (23-22.5)^2 + (21.5-22.5)^2 + 0.001*((1000-800)^2 + (1400-1000)^2)
        double want = 0.25 + 1.0 + 0.001 * (40000.0 + 160000.0);
        CHECK(mpc_cost({23.0, 21.5}, {1000.0, 1400.0}, 800.0, c2) ==
              doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_AS(mpc_cost({22.0}, {0.0, 1.0}, 0.0, cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("config validation") {
    MpcConfig ok;
    CHECK_NOTHROW(validate(ok));
    MpcConfig c = ok;
    c.n_horizon = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = ok;
    c.q = 0.0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = ok;
    c.r = -1.0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = ok;
    c.t_d_c = 19.0; // outside (t_min, t_max)
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = ok;
    c.p_min_w = c.p_max_w;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = ok;
    c.soft_weight = -5.0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    CHECK(mpc_mode_from_string("learning") == MpcMode::learning);
    CHECK(mpc_mode_from_string("conventional") == MpcMode::conventional);
    CHECK_THROWS_AS(mpc_mode_from_string("auto"), ConfigError);
}

TEST_CASE("solver trivial case does nothing") {
    ThermalModel m{1.0, 100.0, 1e6, 600.0};
    MpcConfig cfg; // N = 6 defaults
    std::vector<double> tout(6, 22.5), b(6, 0.0);
    auto sol = solve_mpc(m, cfg, 22.5, 0.0, tout, b);
    CHECK(sol.solver_status == SolverStatus::optimal);
    CHECK(sol.iterations == 0);
    CHECK(sol.cost == 0.0);
    for (double p : sol.powers) CHECK(p == 0.0);
    for (double t : sol.predicted_temps) CHECK(t == doctest::Approx(22.5));
}

TEST_CASE("N=1 grid-search oracle") {
    ThermalModel m{0.95, 80.0, 1e5, 600.0};
    MpcConfig cfg;
    cfg.n_horizon = 1;
    cfg.q = 1.0;
    cfg.r = 1e-7;
    cfg.p_min_w = -3000.0;
    cfg.p_max_w = 3000.0;
    cfg.soft_weight = 100.0;

    SUBCASE("interior optimum") {
        std::vector<double> tout = {-5.0}, b = {0.1};
        auto sol = solve_mpc(m, cfg, 20.0, 500.0, tout, b);
        double best_p = 0.0, best_c = 1e300;
        for (double p = cfg.p_min_w; p <= cfg.p_max_w + 1e-9; p += 0.1) {
            double c = full_cost(m, cfg, 20.0, 500.0, tout, b, {p});
            if (c < best_c) {
                best_c = c;
                best_p = p;
            }
        }
        CHECK(std::abs(sol.powers[0] - best_p) <= 0.2);
        CHECK(sol.cost <= best_c * 1.01 + 1e-12);
        CHECK(sol.solver_status == SolverStatus::optimal);
    }
    SUBCASE("clipped optimum with KKT certificate") {
        std::vector<double> tout = {-40.0}, b = {0.0};
        auto sol = solve_mpc(m, cfg, 18.0, 0.0, tout, b);
        CHECK(sol.powers[0] == cfg.p_max_w);
        CHECK(sol.kkt_residual < 1e-4);
        double grid_best = 1e300;
        for (double p = cfg.p_min_w; p <= cfg.p_max_w + 1e-9; p += 0.1) {
            grid_best = std::min(
                grid_best, full_cost(m, cfg, 18.0, 0.0, tout, b, {p}));
        }
        CHECK(sol.cost <= grid_best * 1.01 + 1e-12);
    }
}

TEST_CASE("N=2 oracle and exact clipping") {
    ThermalModel m{0.97, 80.0, 1e5, 600.0};
    MpcConfig cfg;
    cfg.n_horizon = 2;
    cfg.q = 1.0;
    cfg.r = 1e-7;
    cfg.p_min_w = -3000.0;
    cfg.p_max_w = 3000.0;

    SUBCASE("mild instance within 1% of the 5 W grid") {
        std::vector<double> tout = {2.0, 4.0}, b = {0.05, 0.1};
        auto sol = solve_mpc(m, cfg, 21.0, 200.0, tout, b);
        double best = 1e300;
        for (double p0 = cfg.p_min_w; p0 <= cfg.p_max_w + 1e-9; p0 += 5.0) {
            for (double p1 = cfg.p_min_w; p1 <= cfg.p_max_w + 1e-9;
                 p1 += 5.0) {
                best = std::min(best, full_cost(m, cfg, 21.0, 200.0, tout, b,
                                                {p0, p1}));
            }
        }
        CHECK(sol.cost <= best * 1.01 + 1e-12);
        CHECK(sol.solver_status == SolverStatus::optimal);
    }
    SUBCASE("very cold weather clips both inputs at P^max") {
        std::vector<double> tout = {-40.0, -40.0}, b = {0.0, 0.0};
        auto sol = solve_mpc(m, cfg, 18.0, 0.0, tout, b);
        CHECK(sol.powers[0] == cfg.p_max_w);
        CHECK(sol.powers[1] == cfg.p_max_w);
        CHECK(sol.kkt_residual < 1e-4);
    }
}

TEST_CASE("objective trace is nonincreasing") {
    ThermalModel m{0.99, 264.58, 4.757e6, 600.0};
    MpcConfig cfg;
    cfg.n_horizon = 12;
    cfg.q = 0.05;
    cfg.r = 1e-6;
    cfg.soft_weight = 5.0;
    std::vector<double> tout(12), b(12, 0.05);
    for (int k = 0; k < 12; ++k) tout[k] = -10.0 + 0.5 * k;
    std::vector<double> trace;
    auto sol = solve_mpc(m, cfg, 26.0, -500.0, tout, b, nullptr, &trace);
    REQUIRE(trace.size() >= 2);
    for (size_t i = 1; i < trace.size(); ++i) {
        CHECK(trace[i] <= trace[i - 1] + 1e-12);
    }
    CHECK(sol.cost == doctest::Approx(trace.back()));
}

TEST_CASE("softened infeasibility is reported") {
    // Undersized cooling against a hot start: the band cannot be reached.
    ThermalModel m{1.0, 100.0, 1e7, 600.0};
    MpcConfig cfg;
    cfg.n_horizon = 2;
    cfg.p_min_w = -500.0;
    cfg.p_max_w = 500.0;
    std::vector<double> tout(2, 30.0), b(2, 0.0);
    auto sol = solve_mpc(m, cfg, 30.0, 0.0, tout, b);
    CHECK(sol.solver_status == SolverStatus::infeasible_softened);
    CHECK(sol.powers[0] == cfg.p_min_w); // flat out cooling
    for (double t : sol.predicted_temps) CHECK(t > cfg.t_max_c + 1e-6);
}

TEST_CASE("iteration cap reports max_iter") {
    // Deliberately miserable conditioning: a long horizon with the movement
    // penalty dominating makes the Hessian condition number grow like
    // (2N+1)^2, so exact-line-search descent zigzags past the cap.
    ThermalModel m{0.999, 264.58, 3.6e6, 600.0};
    MpcConfig cfg;
    cfg.n_horizon = 48;
    cfg.q = 1.0;
    cfg.r = 10.0;
    cfg.soft_weight = 0.0;
    cfg.p_min_w = -1e6;
    cfg.p_max_w = 1e6;
    std::vector<double> tout(48, -30.0), b(48, 0.0);
    auto sol = solve_mpc(m, cfg, 5.0, 3e5, tout, b);
    CHECK(sol.solver_status == SolverStatus::max_iter);
    CHECK(sol.iterations == 5000);
    for (double p : sol.powers) {
        CHECK(p >= cfg.p_min_w);
        CHECK(p <= cfg.p_max_w);
    }
}

TEST_CASE("shift stability on an unconstrained instance") {
    ThermalModel m{0.98, 80.0, 1e5, 600.0};
    MpcConfig cfg;
    cfg.n_horizon = 6;
    cfg.p_min_w = -50000.0;
    cfg.p_max_w = 50000.0;
    std::vector<double> tout(6, 10.0), b(6, 0.0);
    auto first = solve_mpc(m, cfg, 20.0, 0.0, tout, b);
    REQUIRE(first.solver_status == SolverStatus::optimal);
    auto second = solve_mpc(m, cfg, first.predicted_temps[0],
                            first.powers[0], tout, b);
    CHECK(std::abs(second.powers[0] - first.powers[1]) <= 0.1);
}

TEST_CASE("solver input validation") {
    ThermalModel m{1.0, 100.0, 1e6, 600.0};
    MpcConfig cfg;
    std::vector<double> tout(6, 10.0), b(6, 0.0);
    std::vector<double> short_b(5, 0.0);
    CHECK_THROWS_AS(solve_mpc(m, cfg, 20.0, 0.0, tout, short_b),
                    std::invalid_argument);
    std::vector<double> warm(5, 0.0);
    CHECK_THROWS_AS(solve_mpc(m, cfg, 20.0, 0.0, tout, b, &warm),
                    std::invalid_argument);
    CHECK_THROWS_AS(solve_mpc(m, cfg, std::nan(""), 0.0, tout, b),
                    std::invalid_argument);
    MpcConfig bad = cfg;
    bad.q = -1.0;
    CHECK_THROWS_AS(solve_mpc(m, bad, 20.0, 0.0, tout, b), ConfigError);
}

TEST_CASE("additive occupancy monotonicity: more free heat, less heating") {
    ThermalModel m{0.99, 100.0, 1e6, 600.0};
    MpcConfig cfg;
    cfg.n_horizon = 6;
    std::vector<double> tout(6, 0.0);
    std::vector<double> b_low(6, 0.3);  // conventional average assumption
    std::vector<double> b_high(6, 1.8); // a full afternoon crowd
    auto conv = solve_mpc(m, cfg, 21.0, 0.0, tout, b_low);
    auto learn = solve_mpc(m, cfg, 21.0, 0.0, tout, b_high);
    CHECK(learn.powers[0] < conv.powers[0] - 100.0);
}

TEST_CASE("receding horizon controller") {
    // Constant occupancy: 12 people around the clock in a 40-cap zone.
    OccupancySchedule sched;
    sched.start_s = 1609459200;
    sched.step_s = 600.0;
    sched.zone_names = {"z1"};
    sched.max_count = {40};
    sched.counts = {std::vector<int>(400, 12)};
    WeatherSeries weather;
    weather.start_s = sched.start_s;
    weather.step_s = 600.0;
    weather.tout_c.assign(400, 10.0);

    ThermalModel model{0.999, 100.0, 1e6, 600.0};
    auto net = make_narx(kFeatureDim, 10, 2, 2, 1);
    net.w1.setZero();
    net.b1.setZero();
    net.w2.setZero();
    net.b2 = 12.0 / 40.0; // constant forecast of 12 people
    net.norm.target_max = 40.0;

    SUBCASE("modes coincide under constant occupancy") {
        MpcConfig lc;
        lc.mode = MpcMode::learning;
        MpcConfig cc;
        cc.mode = MpcMode::conventional;
        ZoneMpc learn(model, lc, 0, &sched, &weather, &net, 12.0);
        ZoneMpc conv(model, cc, 0, &sched, &weather, nullptr, 12.0);
        for (long t = 0; t < 120; ++t) {
            double tin = 21.0 + 0.01 * (t % 7);
            double pl = learn.step(t, tin);
            double pc = conv.step(t, tin);
            CHECK(pl == pc);
        }
        CHECK(learn.one_step_occ_pred() == 12.0);
        CHECK(conv.one_step_occ_pred() == 12.0);
    }

    SUBCASE("closed loop settles at the steady-state balance") {
        // Plant here is the model itself; empty building.
        OccupancySchedule empty = sched;
        empty.counts = {std::vector<int>(400, 0)};
        WeatherSeries cool = weather;
        cool.tout_c.assign(400, 5.0);
        MpcConfig cfg;
        cfg.mode = MpcMode::conventional;
        ZoneMpc ctl(model, cfg, 0, &empty, &cool, nullptr, 0.0);
        double tin = 18.0;
        double p = 0.0;
        for (long t = 0; t < 250; ++t) {
            p = ctl.step(t, tin);
            tin = predict_trajectory(model, tin, {p}, {5.0}, {0.0})[0];
        }
        double balance = model.u_w_per_k * (cfg.t_d_c - 5.0);
        CHECK(std::abs(p - balance) <= 0.2 * balance);
        CHECK(std::abs(tin - cfg.t_d_c) < 0.5);
    }

    SUBCASE("horizon truncates near the end of the previews") {
        MpcConfig cfg;
        cfg.mode = MpcMode::conventional;
        ZoneMpc ctl(model, cfg, 0, &sched, &weather, nullptr, 12.0);
        ctl.step(393, 21.0);
        CHECK(ctl.last_solution().powers.size() == 6);
        ctl.step(396, 21.0);
        CHECK(ctl.last_solution().powers.size() == 4);
        ctl.step(399, 21.0);
        CHECK(ctl.last_solution().powers.size() == 1);
        CHECK_THROWS_AS(ctl.step(400, 21.0), std::out_of_range);
    }

    SUBCASE("constructor validation") {
        MpcConfig cfg;
        CHECK_THROWS_AS(ZoneMpc(model, cfg, 0, nullptr, &weather, &net, 0.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(ZoneMpc(model, cfg, 2, &sched, &weather, &net, 0.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(ZoneMpc(model, cfg, 0, &sched, &weather, nullptr,
                                0.0),
                        std::invalid_argument); // learning without net
        WeatherSeries off = weather;
        off.start_s += 600;
        CHECK_THROWS_AS(ZoneMpc(model, cfg, 0, &sched, &off, &net, 0.0),
                        AlignmentError);
        MpcConfig conv;
        conv.mode = MpcMode::conventional;
        CHECK_THROWS_AS(ZoneMpc(model, conv, 0, &sched, &weather, nullptr,
                                -1.0),
                        std::invalid_argument);
    }
}
