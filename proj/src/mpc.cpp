#include "zonempc/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zonempc/errors.hpp"

namespace zonempc {

namespace {

void check_model(const ThermalModel& model) {
    if (!std::isfinite(model.a) || !std::isfinite(model.u_w_per_k) ||
        !std::isfinite(model.c_j_per_k) || !std::isfinite(model.dt_s) ||
        !(model.c_j_per_k > 0.0) || !(model.dt_s > 0.0)) {
        throw std::invalid_argument("mpc: non-finite or non-positive model "
                                    "parameters");
    }
}

// One-sided quadratic comfort penalty: distance to the band, zero inside.
inline double band_excess(double t, const MpcConfig& cfg) {
    if (t > cfg.t_max_c) return t - cfg.t_max_c;
    if (t < cfg.t_min_c) return t - cfg.t_min_c;
    return 0.0;
}

} // namespace

const char* to_string(MpcMode m) {
    return m == MpcMode::learning ? "learning" : "conventional";
}

MpcMode mpc_mode_from_string(const std::string& s) {
    if (s == "learning") return MpcMode::learning;
    if (s == "conventional") return MpcMode::conventional;
    throw ConfigError("unknown MPC mode '" + s +
                      "' (expected learning or conventional)");
}

const char* to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::optimal: return "optimal";
        case SolverStatus::max_iter: return "max_iter";
        case SolverStatus::infeasible_softened: return "infeasible_softened";
    }
    return "unknown";
}

void validate(const MpcConfig& cfg) {
    auto fin = [](double v) { return std::isfinite(v); };
    if (cfg.n_horizon < 1) throw ConfigError("mpc config: N must be >= 1");
    if (!fin(cfg.q) || !(cfg.q > 0.0))
        throw ConfigError("mpc config: Q must be positive");
    if (!fin(cfg.r) || cfg.r < 0.0)
        throw ConfigError("mpc config: R must be nonnegative");
    if (!fin(cfg.t_d_c) || !fin(cfg.t_min_c) || !fin(cfg.t_max_c) ||
        !(cfg.t_min_c < cfg.t_d_c) || !(cfg.t_d_c < cfg.t_max_c)) {
        throw ConfigError("mpc config: need t_min < t_d < t_max");
    }
    if (!fin(cfg.p_min_w) || !fin(cfg.p_max_w) ||
        !(cfg.p_min_w < cfg.p_max_w)) {
        throw ConfigError("mpc config: need p_min < p_max");
    }
    if (!fin(cfg.soft_weight) || cfg.soft_weight < 0.0) {
        throw ConfigError("mpc config: soft weight must be nonnegative");
    }
}

std::vector<double> predict_trajectory(const ThermalModel& model, double tin0,
                                       const std::vector<double>& powers,
                                       const std::vector<double>& tout_future,
                                       const std::vector<double>& b_future) {
    check_model(model);
    size_t n = powers.size();
    if (n == 0 || tout_future.size() != n || b_future.size() != n) {
        throw std::invalid_argument("predict_trajectory: vectors must share "
                                    "a nonzero length");
    }
    if (!std::isfinite(tin0)) {
        throw std::invalid_argument("predict_trajectory: non-finite state");
    }
    std::vector<double> temps(n);
    double t = tin0;
    double dt_c = model.dt_s / model.c_j_per_k;
    for (size_t k = 0; k < n; ++k) {
        t = model.a *
                (t + dt_c * (powers[k] -
                             model.u_w_per_k * (t - tout_future[k]))) +
            b_future[k];
        temps[k] = t;
    }
    return temps;
}

void affine_prediction(const ThermalModel& model, double tin0,
                       const std::vector<double>& tout_future,
                       const std::vector<double>& b_future,
                       Eigen::MatrixXd& m_out, Eigen::VectorXd& v_out) {
    check_model(model);
    long n = static_cast<long>(tout_future.size());
    if (n == 0 || static_cast<long>(b_future.size()) != n) {
        throw std::invalid_argument("affine_prediction: vectors must share "
                                    "a nonzero length");
    }
    double dt_c = model.dt_s / model.c_j_per_k;
    double alpha = model.a * (1.0 - model.u_w_per_k * dt_c);
    double beta = model.a * dt_c;
    double gamma = model.a * model.u_w_per_k * dt_c;

    m_out = Eigen::MatrixXd::Zero(n, n);
    for (long j = 0; j < n; ++j) {
        double coef = beta;
        for (long k = j; k < n; ++k) {
            m_out(k, j) = coef;
            coef *= alpha;
        }
    }
    v_out.resize(n);
    double v = tin0;
    for (long k = 0; k < n; ++k) {
        v = alpha * v + gamma * tout_future[k] + b_future[k];
        v_out[k] = v;
    }
}

double mpc_cost(const std::vector<double>& predicted_temps,
                const std::vector<double>& powers, double p_prev,
                const MpcConfig& cfg) {
    size_t n = predicted_temps.size();
    if (n == 0 || powers.size() != n) {
        throw std::invalid_argument("mpc_cost: vectors must share a nonzero "
                                    "length");
    }
    double j = 0.0;
    double prev = p_prev;
    for (size_t k = 0; k < n; ++k) {
        double dt = predicted_temps[k] - cfg.t_d_c;
        double dp = powers[k] - prev;
        j += cfg.q * dt * dt + cfg.r * dp * dp;
        prev = powers[k];
    }
    return j;
}

MpcSolution solve_mpc(const ThermalModel& model, const MpcConfig& cfg,
                      double tin0, double p_prev,
                      const std::vector<double>& tout_future,
                      const std::vector<double>& b_future,
                      const std::vector<double>* warm_start,
                      std::vector<double>* objective_trace) {
    validate(cfg);
    check_model(model);
    const long n = cfg.n_horizon;
    if (static_cast<long>(tout_future.size()) != n ||
        static_cast<long>(b_future.size()) != n) {
        throw std::invalid_argument("solve_mpc: previews must have length N");
    }
    if (!std::isfinite(tin0) || !std::isfinite(p_prev)) {
        throw std::invalid_argument("solve_mpc: non-finite state");
    }
    if (warm_start && static_cast<long>(warm_start->size()) != n) {
        throw std::invalid_argument("solve_mpc: warm start has wrong length");
    }

    Eigen::MatrixXd m;
    Eigen::VectorXd v;
    affine_prediction(model, tin0, tout_future, b_future, m, v);

    const double lo = cfg.p_min_w, hi = cfg.p_max_w;
    auto clamp_box = [&](Eigen::VectorXd& x) {
        for (long k = 0; k < n; ++k) x[k] = std::clamp(x[k], lo, hi);
    };

    Eigen::VectorXd x(n);
    if (warm_start) {
        for (long k = 0; k < n; ++k) x[k] = (*warm_start)[k];
    } else {
        x.setConstant(p_prev);
    }
    clamp_box(x);

    // Movement differences: delta = D x - e1 * p_prev.
    auto diff_of = [&](const Eigen::VectorXd& p, double anchor) {
        Eigen::VectorXd d(n);
        d[0] = p[0] - anchor;
        for (long k = 1; k < n; ++k) d[k] = p[k] - p[k - 1];
        return d;
    };
    auto diff_adjoint = [&](const Eigen::VectorXd& w) {
        Eigen::VectorXd g(n);
        for (long k = 0; k < n - 1; ++k) g[k] = w[k] - w[k + 1];
        g[n - 1] = w[n - 1];
        return g;
    };

    auto objective = [&](const Eigen::VectorXd& temps,
                         const Eigen::VectorXd& p) {
        double j = 0.0;
        double prev = p_prev;
        for (long k = 0; k < n; ++k) {
            double e = temps[k] - cfg.t_d_c;
            double dp = p[k] - prev;
            double s = band_excess(temps[k], cfg);
            j += cfg.q * e * e + cfg.r * dp * dp + cfg.soft_weight * s * s;
            prev = p[k];
        }
        return j;
    };

    Eigen::VectorXd temps = m * x + v;
    // Curvature bound for the trial-step scale; the exact line search does
    // the real work, this only needs the right order of magnitude.
    double m_norm1 = 0.0, m_norminf = 0.0;
    for (long j = 0; j < n; ++j) {
        m_norm1 = std::max(m_norm1, m.col(j).cwiseAbs().sum());
        m_norminf = std::max(m_norminf, m.row(j).cwiseAbs().sum());
    }
    double lip = 2.0 * (cfg.q + cfg.soft_weight) * m_norm1 * m_norminf +
                 8.0 * cfg.r + 1e-300;

    MpcSolution sol;
    if (objective_trace) objective_trace->push_back(objective(temps, x));

    const double kkt_tol = 1e-6;
    const int max_iterations = 5000;
    double kkt = 0.0;
    Eigen::VectorXd grad(n), trial(n), d(n), d_temps(n), d_diff(n);
    while (true) {
        // Gradient of the full objective at x.
        Eigen::VectorXd track = temps.array() - cfg.t_d_c;
        Eigen::VectorXd soft(n);
        for (long k = 0; k < n; ++k) soft[k] = band_excess(temps[k], cfg);
        Eigen::VectorXd delta = diff_of(x, p_prev);
        grad = 2.0 * cfg.q * (m.transpose() * track) +
               2.0 * cfg.r * diff_adjoint(delta) +
               2.0 * cfg.soft_weight * (m.transpose() * soft);

        kkt = 0.0;
        for (long k = 0; k < n; ++k) {
            double proj = std::clamp(x[k] - grad[k], lo, hi);
            kkt = std::max(kkt, std::abs(x[k] - proj));
        }
        if (kkt < kkt_tol) {
            sol.solver_status = SolverStatus::optimal;
            break;
        }
        if (sol.iterations >= max_iterations) {
            sol.solver_status = SolverStatus::max_iter;
            break;
        }

        trial = x - grad / lip;
        clamp_box(trial);
        d = trial - x;
        d_temps.noalias() = m * d;
        d_diff = diff_of(d, 0.0);

        // The ray x + beta d stays inside the box up to beta_cap >= 1;
        // searching the whole feasible segment instead of [0, 1] avoids
        // creeping along flat directions one short step at a time.
        double beta_cap = std::numeric_limits<double>::infinity();
        for (long k = 0; k < n; ++k) {
            if (d[k] > 0.0) beta_cap = std::min(beta_cap, (hi - x[k]) / d[k]);
            else if (d[k] < 0.0) beta_cap = std::min(beta_cap, (lo - x[k]) / d[k]);
        }
        if (!std::isfinite(beta_cap)) beta_cap = 1.0;
        beta_cap = std::max(beta_cap, 1.0);

        // Exact minimization of the piecewise-quadratic f(x + beta d) over
        // beta in [0, beta_cap]. Pieces change where a predicted temperature
        // crosses a band edge; the derivative is continuous and
        // nondecreasing, so scan intervals left to right.
        std::vector<double> cuts;
        cuts.reserve(2 * n + 2);
        cuts.push_back(0.0);
        cuts.push_back(beta_cap);
        for (long k = 0; k < n; ++k) {
            if (d_temps[k] == 0.0) continue;
            for (double edge : {cfg.t_max_c, cfg.t_min_c}) {
                double b = (edge - temps[k]) / d_temps[k];
                if (b > 0.0 && b < beta_cap) cuts.push_back(b);
            }
        }
        std::sort(cuts.begin(), cuts.end());

        double a0 = 0.0, b0 = 0.0; // always-active quadratic: a0 b^2 + b0 b
        Eigen::VectorXd delta0 = diff_of(x, p_prev);
        for (long k = 0; k < n; ++k) {
            a0 += cfg.q * d_temps[k] * d_temps[k] +
                  cfg.r * d_diff[k] * d_diff[k];
            b0 += 2.0 * (cfg.q * d_temps[k] * (temps[k] - cfg.t_d_c) +
                         cfg.r * d_diff[k] * delta0[k]);
        }
        double beta = beta_cap;
        bool placed = false;
        for (size_t seg = 0; seg + 1 < cuts.size() && !placed; ++seg) {
            double ba = cuts[seg], bb = cuts[seg + 1];
            if (!(bb > ba)) continue;
            double bm = 0.5 * (ba + bb);
            double a_seg = a0, b_seg = b0;
            for (long k = 0; k < n; ++k) {
                double tk = temps[k] + bm * d_temps[k];
                double edge;
                if (tk > cfg.t_max_c) edge = cfg.t_max_c;
                else if (tk < cfg.t_min_c) edge = cfg.t_min_c;
                else continue;
                a_seg += cfg.soft_weight * d_temps[k] * d_temps[k];
                b_seg += 2.0 * cfg.soft_weight * d_temps[k] *
                         (temps[k] - edge);
            }
            double slope_at_start = 2.0 * a_seg * ba + b_seg;
            if (slope_at_start >= 0.0) {
                beta = ba;
                placed = true;
            } else if (a_seg > 0.0) {
                double opt = -b_seg / (2.0 * a_seg);
                if (opt <= bb) {
                    beta = std::clamp(opt, ba, bb);
                    placed = true;
                }
            }
        }
        if (beta > 0.0) {
            x += beta * d;
            clamp_box(x); // guards rounding at the box faces
            temps.noalias() = m * x + v;
        }
        ++sol.iterations;
        if (objective_trace) objective_trace->push_back(objective(temps, x));
        if (beta == 0.0) {
            // Exact line search refuses to move: numerically converged.
            sol.solver_status = SolverStatus::optimal;
            break;
        }
    }

    double violation = 0.0;
    for (long k = 0; k < n; ++k) {
        violation = std::max(violation, std::abs(band_excess(temps[k], cfg)));
    }
    if (sol.solver_status != SolverStatus::max_iter && violation > 1e-6) {
        sol.solver_status = SolverStatus::infeasible_softened;
    }
    sol.powers.assign(x.data(), x.data() + n);
    sol.predicted_temps.assign(temps.data(), temps.data() + n);
    sol.cost = objective(temps, x);
    sol.kkt_residual = kkt;
    return sol;
}

ZoneMpc::ZoneMpc(ThermalModel model, MpcConfig cfg, int zone,
                 const OccupancySchedule* occupancy,
                 const WeatherSeries* weather, const NarxNetwork* forecaster,
                 double b_bar_count)
    : model_(model), cfg_(cfg), zone_(zone), occupancy_(occupancy),
      weather_(weather), forecaster_(forecaster), b_bar_count_(b_bar_count) {
    validate(cfg_);
    check_model(model_);
    if (!occupancy_ || !weather_) {
        throw std::invalid_argument("ZoneMpc: occupancy and weather previews "
                                    "are required");
    }
    if (zone_ < 0 || zone_ >= static_cast<int>(occupancy_->zone_names.size())) {
        throw std::invalid_argument("ZoneMpc: zone out of range");
    }
    if (occupancy_->start_s != weather_->start_s ||
        occupancy_->step_s != weather_->step_s ||
        occupancy_->size() != weather_->size()) {
        throw AlignmentError("ZoneMpc: occupancy and weather previews are "
                             "not aligned");
    }
    if (cfg_.mode == MpcMode::learning && !forecaster_) {
        throw std::invalid_argument("ZoneMpc: learning mode needs a trained "
                                    "forecaster");
    }
    if (!std::isfinite(b_bar_count_) || b_bar_count_ < 0.0) {
        throw std::invalid_argument("ZoneMpc: average occupancy must be a "
                                    "nonnegative count");
    }
    next_occ_pred_ = cfg_.mode == MpcMode::conventional ? b_bar_count_ : 0.0;
}

double ZoneMpc::step(long t, double tin_measured) {
    if (t < 0 || t >= occupancy_->size()) {
        throw std::out_of_range("ZoneMpc::step: step index outside previews");
    }
    if (!std::isfinite(tin_measured)) {
        throw std::invalid_argument("ZoneMpc::step: non-finite measurement");
    }
    const long n_avail = occupancy_->size() - t;
    const int n_eff =
        static_cast<int>(std::min<long>(cfg_.n_horizon, n_avail));
    const double c = model_.c_j_per_k, dt = model_.dt_s;

    std::vector<double> tout(n_eff), b(n_eff);
    for (int k = 0; k < n_eff; ++k) tout[k] = weather_->tout_c[t + k];

    if (cfg_.mode == MpcMode::conventional) {
        double bb = occupancy_to_temp_offset(b_bar_count_, c, dt);
        for (int k = 0; k < n_eff; ++k) b[k] = bb;
        next_occ_pred_ = b_bar_count_;
    } else {
        int now = occupancy_->counts[zone_][t];
        b[0] = occupancy_to_temp_offset(now, c, dt);
        if (n_eff >= 2) {
            if (t >= 3) {
                auto roll = predict_horizon(*forecaster_, *occupancy_,
                                            *weather_, zone_, t, n_eff - 1);
                for (int k = 1; k < n_eff; ++k) {
                    b[k] = occupancy_to_temp_offset(std::round(roll[k - 1]),
                                                    c, dt);
                }
                next_occ_pred_ = roll[0];
            } else {
                // Not enough history for the delay buffers yet.
                for (int k = 1; k < n_eff; ++k) b[k] = b[0];
                next_occ_pred_ = now;
            }
        } else {
            next_occ_pred_ = now;
        }
    }

    // Warm start: previous plan shifted one step, last entry repeated.
    std::vector<double> warm;
    if (!warm_.empty()) {
        warm.resize(n_eff);
        for (int k = 0; k < n_eff; ++k) {
            size_t src = std::min(warm_.size() - 1, static_cast<size_t>(k + 1));
            warm[k] = warm_[src];
        }
    }

    MpcConfig local = cfg_;
    local.n_horizon = n_eff;
    last_solution_ = solve_mpc(model_, local, tin_measured, p_prev_, tout, b,
                               warm.empty() ? nullptr : &warm);
    p_prev_ = last_solution_.powers[0];
    warm_ = last_solution_.powers;
    return p_prev_;
}

} // namespace zonempc
