#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zonempc/narx.hpp"
#include "zonempc/occupancy.hpp"
#include "zonempc/sysid.hpp"

namespace zonempc {

enum class MpcMode { learning, conventional };
const char* to_string(MpcMode m);
MpcMode mpc_mode_from_string(const std::string& s);

struct MpcConfig {
    int n_horizon = 6;
    double q = 1.0;
    double r = 1e-7;
    double t_d_c = 22.5;
    double t_min_c = 20.0;
    double t_max_c = 25.0;
    double p_min_w = -5000.0;
    double p_max_w = 10000.0;
    // Quadratic penalty on comfort-band violations; the band is soft
    // because the power box can make it unreachable on design days.
    double soft_weight = 100.0;
    MpcMode mode = MpcMode::learning;
};

// Throws ConfigError when any invariant fails (N >= 1, Q > 0, R >= 0,
// t_min < t_d < t_max, p_min < p_max, soft_weight >= 0, all finite).
void validate(const MpcConfig& cfg);

enum class SolverStatus { optimal, max_iter, infeasible_softened };
const char* to_string(SolverStatus s);

struct MpcSolution {
    std::vector<double> powers;          // W, inside the box
    std::vector<double> predicted_temps; // degC, one per horizon step
    // Full objective at the returned point, soft comfort penalty included
    // (mpc_cost() reports the tracking + movement terms alone).
    double cost = 0.0;
    SolverStatus solver_status = SolverStatus::optimal;
    int iterations = 0;
    double kkt_residual = 0.0; // projected-gradient infinity norm
};

// Rolls the reduced model forward:
//   T(k) = a * [T(k-1) + (dt/C) * (P(k-1) - U * (T(k-1) - T_out(k-1)))]
//          + b(k)
// powers, tout_future, and b_future share length N; entry k-1 of each
// feeds the step that produces T(k). Throws std::invalid_argument on
// length mismatch or non-finite model parameters.
std::vector<double> predict_trajectory(const ThermalModel& model, double tin0,
                                       const std::vector<double>& powers,
                                       const std::vector<double>& tout_future,
                                       const std::vector<double>& b_future);

// Same recursion folded into T = M P + v; M is lower triangular with
// M(k, j) = beta * alpha^(k-1-j), alpha = a (1 - U dt / C), beta = a dt / C.
void affine_prediction(const ThermalModel& model, double tin0,
                       const std::vector<double>& tout_future,
                       const std::vector<double>& b_future,
                       Eigen::MatrixXd& m_out, Eigen::VectorXd& v_out);

// Tracking + input-movement objective only:
//   J = sum_k Q (T(k) - T_d)^2 + sum_k R (P(k) - P(k-1))^2,  P(0) == p_prev.
double mpc_cost(const std::vector<double>& predicted_temps,
                const std::vector<double>& powers, double p_prev,
                const MpcConfig& cfg);

// Box-constrained convex QP solved by projected gradient with exact line
// search; stops when the projected-gradient infinity norm drops below
// 1e-6 or after 5000 iterations. A converged solution whose predicted
// trajectory still violates the comfort band by more than 1e-6 degC is
// flagged infeasible_softened. warm_start (if given, length N) seeds the
// iteration; objective_trace (if given) receives the objective after the
// initial point and every iteration.
MpcSolution solve_mpc(const ThermalModel& model, const MpcConfig& cfg,
                      double tin0, double p_prev,
                      const std::vector<double>& tout_future,
                      const std::vector<double>& b_future,
                      const std::vector<double>* warm_start = nullptr,
                      std::vector<double>* objective_trace = nullptr);

// One zone's receding-horizon controller. Owns the identified model, the
// previous applied input, and the warm-start buffer; borrows the
// occupancy truth, weather preview, and (learning mode) the trained
// forecaster. Conventional mode replaces the forecast with the constant
// offset b_bar.
class ZoneMpc {
  public:
    // occupancy/weather must outlive the controller. forecaster may be
    // null in conventional mode. b_bar_count is the average head-count the
    // conventional controller assumes at every step.
    ZoneMpc(ThermalModel model, MpcConfig cfg, int zone,
            const OccupancySchedule* occupancy, const WeatherSeries* weather,
            const NarxNetwork* forecaster, double b_bar_count);

    // Solves at step t from the measured zone temperature and returns the
    // first power of the plan. The horizon shrinks near the end of the
    // previews (minimum 1). The first three steps of a learning run fall
    // back to persistence forecasts (the delay buffers need history).
    double step(long t, double tin_measured);

    const MpcSolution& last_solution() const { return last_solution_; }
    // Prediction of the zone temperature after the applied step.
    double one_step_temp_pred() const {
        return last_solution_.predicted_temps.empty()
                   ? 0.0
                   : last_solution_.predicted_temps[0];
    }
    // Head-count forecast for the next step (learning) or the constant
    // assumption (conventional); persistence before any solve.
    double one_step_occ_pred() const { return next_occ_pred_; }
    double p_prev() const { return p_prev_; }
    const ThermalModel& model() const { return model_; }

  private:
    ThermalModel model_;
    MpcConfig cfg_;
    int zone_;
    const OccupancySchedule* occupancy_;
    const WeatherSeries* weather_;
    const NarxNetwork* forecaster_;
    double b_bar_count_;
    double p_prev_ = 0.0;
    double next_occ_pred_ = 0.0;
    std::vector<double> warm_;
    MpcSolution last_solution_;
};

} // namespace zonempc
