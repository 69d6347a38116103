#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zonempc/scenario.hpp"

namespace zonempc {

// Reduced single-zone thermal model
//   T(t) = a * [T(t-1) + (dt/C) * (P(t-1) - U * (T(t-1) - T_out(t-1)))] + b(t)
// with b the occupancy-driven temperature offset. a and U come from
// identification; C is fixed by the envelope lumping and dt by the plant.
struct ThermalModel {
    double a = 1.0;
    double u_w_per_k = 0.0;
    double c_j_per_k = 0.0;
    double dt_s = 600.0;
};

// Sanity bands: 0 < a <= 1.05, U > 0, C > 0, dt > 0.
bool thermal_model_sane(const ThermalModel& m);

// Linear-in-parameters form with theta = [a, a*U*dt/C]:
//   y   = T_in(t) - b(t)
//   phi = [T_in(t-1) + (dt/C) * P(t-1), -(T_in(t-1) - T_out(t-1))]
// The current measurement and the dt/C ratio are needed to assemble the
// pair even though only previous-step quantities enter phi. Throws
// std::invalid_argument on non-finite input or C <= 0.
struct Regressor {
    Eigen::Vector2d phi;
    double y = 0.0;
};
Regressor regressor(double tin_t, double tin_prev, double tout_prev,
                    double p_prev, double b_t, double c_j_per_k, double dt_s);

// theta -> (a, U) and back. Recovery throws IdentificationError when
// theta_1 is numerically zero or the result leaves the sanity bands.
struct RecoveredParams {
    double a = 0.0;
    double u_w_per_k = 0.0;
};
RecoveredParams recover_params(const Eigen::Vector2d& theta,
                               double c_j_per_k, double dt_s);
Eigen::Vector2d theta_from_params(double a, double u_w_per_k,
                                  double c_j_per_k, double dt_s);

// Recursive least squares with forgetting. The gain matrix stays symmetric
// positive definite (re-symmetrized every update); lambda is restricted to
// (0.9, 1] since shorter memories make no sense at a 600 s step.
class RlsEstimator {
  public:
    RlsEstimator(int dim, double lambda, double f0_scale);

    const Eigen::VectorXd& theta() const { return theta_; }
    const Eigen::MatrixXd& gain() const { return f_; }
    double lambda() const { return lambda_; }
    // Most recent regressor; empty before the first update.
    const Eigen::VectorXd& last_phi() const { return last_phi_; }

    friend RlsEstimator rls_update(const RlsEstimator& est,
                                   const Eigen::VectorXd& phi, double y);

  private:
    Eigen::VectorXd theta_;
    Eigen::MatrixXd f_;
    double lambda_;
    Eigen::VectorXd last_phi_;
};

// One recursion of the forgetting-factor update:
//   F <- (1/lambda) * [F - F phi phi' F / (lambda + phi' F phi)]
//   e  = y - theta' phi          (innovation against the OLD estimate)
//   theta <- theta + F_new phi e
// Throws NumericalError if the denominator is not positive (impossible
// while F stays positive definite) and std::invalid_argument on a
// dimension mismatch.
void rls_update_raw(Eigen::VectorXd& theta, Eigen::MatrixXd& f, double lambda,
                    const Eigen::VectorXd& phi, double y);
RlsEstimator rls_update(const RlsEstimator& est, const Eigen::VectorXd& phi,
                        double y);

struct IdentifiedModel {
    std::string zone;
    ThermalModel model;
    double rms_c = 0.0;
    double lambda = 0.99;
};

// Streams rls_update over one zone of a logged run, subtracting the true
// occupancy offset, then reports the recovered model and the RMS residual
// of the final estimate replayed over the same log. Requires at least 100
// steps (std::invalid_argument otherwise); recovery failures surface as
// IdentificationError.
IdentifiedModel identify(const ScenarioLog& log, int zone, double c_j_per_k,
                         double lambda = 0.99, double f0_scale = 1e6);

// JSON array of {zone, a, U_w_per_k, C_j_per_k, dt_s, rms_c, lambda}.
void save_models_json(const std::vector<IdentifiedModel>& models,
                      const std::string& path);
std::vector<IdentifiedModel> load_models_json(const std::string& path);

} // namespace zonempc
