#include "zonempc/sysid.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "zonempc/errors.hpp"
#include "zonempc/occupancy.hpp"

namespace zonempc {

namespace {
using json = nlohmann::json;
}

bool thermal_model_sane(const ThermalModel& m) {
    return std::isfinite(m.a) && std::isfinite(m.u_w_per_k) &&
           std::isfinite(m.c_j_per_k) && std::isfinite(m.dt_s) &&
           m.a > 0.0 && m.a <= 1.05 && m.u_w_per_k > 0.0 &&
           m.c_j_per_k > 0.0 && m.dt_s > 0.0;
}

Regressor regressor(double tin_t, double tin_prev, double tout_prev,
                    double p_prev, double b_t, double c_j_per_k, double dt_s) {
    if (!std::isfinite(tin_t) || !std::isfinite(tin_prev) ||
        !std::isfinite(tout_prev) || !std::isfinite(p_prev) ||
        !std::isfinite(b_t)) {
        throw std::invalid_argument("regressor: non-finite input");
    }
    if (!(c_j_per_k > 0.0) || !(dt_s > 0.0)) {
        throw std::invalid_argument("regressor: C and dt must be positive");
    }
    Regressor r;
    r.phi[0] = tin_prev + (dt_s / c_j_per_k) * p_prev;
    r.phi[1] = -(tin_prev - tout_prev);
    r.y = tin_t - b_t;
    return r;
}

RecoveredParams recover_params(const Eigen::Vector2d& theta,
                               double c_j_per_k, double dt_s) {
    if (!(c_j_per_k > 0.0) || !(dt_s > 0.0)) {
        throw std::invalid_argument("recover_params: C and dt must be "
                                    "positive");
    }
    if (!theta.allFinite() || std::abs(theta[0]) < 1e-12) {
        throw IdentificationError("degenerate estimate: a is numerically "
                                  "zero or non-finite",
                                  theta[0], theta[1]);
    }
    RecoveredParams p;
    p.a = theta[0];
    p.u_w_per_k = theta[1] * c_j_per_k / (dt_s * theta[0]);
    if (!(p.a > 0.0) || !(p.a <= 1.05)) {
        throw IdentificationError("recovered decay coefficient outside "
                                  "(0, 1.05]",
                                  theta[0], theta[1]);
    }
    if (!(p.u_w_per_k > 0.0)) {
        throw IdentificationError("recovered conductance is not positive",
                                  theta[0], theta[1]);
    }
    return p;
}

Eigen::Vector2d theta_from_params(double a, double u_w_per_k,
                                  double c_j_per_k, double dt_s) {
    if (!(c_j_per_k > 0.0) || !(dt_s > 0.0)) {
        throw std::invalid_argument("theta_from_params: C and dt must be "
                                    "positive");
    }
    return {a, a * u_w_per_k * dt_s / c_j_per_k};
}

RlsEstimator::RlsEstimator(int dim, double lambda, double f0_scale)
    : lambda_(lambda) {
    if (dim < 1) {
        throw std::invalid_argument("RlsEstimator: dimension must be "
                                    "positive");
    }
    if (!(lambda > 0.9) || !(lambda <= 1.0)) {
        throw std::invalid_argument("RlsEstimator: lambda must be in "
                                    "(0.9, 1]");
    }
    if (!(f0_scale > 0.0) || !std::isfinite(f0_scale)) {
        throw std::invalid_argument("RlsEstimator: F0 scale must be a "
                                    "positive finite number");
    }
    theta_ = Eigen::VectorXd::Zero(dim);
    f_ = f0_scale * Eigen::MatrixXd::Identity(dim, dim);
}

void rls_update_raw(Eigen::VectorXd& theta, Eigen::MatrixXd& f, double lambda,
                    const Eigen::VectorXd& phi, double y) {
    if (phi.size() != theta.size() || f.rows() != theta.size() ||
        f.cols() != theta.size()) {
        throw std::invalid_argument("rls_update: dimension mismatch");
    }
    Eigen::VectorXd fphi = f * phi;
    double denom = lambda + phi.dot(fphi);
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        throw NumericalError("rls_update: gain denominator is not positive "
                             "(F lost positive definiteness)");
    }
    f -= (fphi * fphi.transpose()) / denom;
    f /= lambda;
    double e = y - theta.dot(phi);
    theta += f * phi * e;
    f = 0.5 * (f + f.transpose()).eval();
}

RlsEstimator rls_update(const RlsEstimator& est, const Eigen::VectorXd& phi,
                        double y) {
    RlsEstimator next = est;
    rls_update_raw(next.theta_, next.f_, next.lambda_, phi, y);
    next.last_phi_ = phi;
    return next;
}

IdentifiedModel identify(const ScenarioLog& log, int zone, double c_j_per_k,
                         double lambda, double f0_scale) {
    if (zone < 0 || zone >= log.n_zones()) {
        throw std::invalid_argument("identify: zone out of range");
    }
    if (log.size() < 100) {
        throw std::invalid_argument("identify: need at least 100 log steps, "
                                    "got " + std::to_string(log.size()));
    }
    if (!(c_j_per_k > 0.0)) {
        throw std::invalid_argument("identify: C must be positive");
    }
    const double dt = log.step_s;
    const auto& tin = log.tin_c[zone];
    const auto& p = log.p_w[zone];
    const auto& occ = log.occ_true[zone];
    long n = log.size();

    RlsEstimator est(2, lambda, f0_scale);
    for (long t = 1; t < n; ++t) {
        double b = occupancy_to_temp_offset(occ[t - 1], c_j_per_k, dt);
        auto reg = regressor(tin[t], tin[t - 1], log.tout_c[t - 1], p[t - 1],
                             b, c_j_per_k, dt);
        est = rls_update(est, reg.phi, reg.y);
    }

    auto params = recover_params(est.theta(), c_j_per_k, dt);

    // Validation RMS: the final estimate replayed over the whole log.
    double sse = 0.0;
    for (long t = 1; t < n; ++t) {
        double b = occupancy_to_temp_offset(occ[t - 1], c_j_per_k, dt);
        auto reg = regressor(tin[t], tin[t - 1], log.tout_c[t - 1], p[t - 1],
                             b, c_j_per_k, dt);
        double e = reg.y - est.theta().dot(reg.phi);
        sse += e * e;
    }

    IdentifiedModel out;
    out.zone = log.zone_names[zone];
    out.model = {params.a, params.u_w_per_k, c_j_per_k, dt};
    out.rms_c = std::sqrt(sse / (n - 1));
    out.lambda = lambda;
    return out;
}

void save_models_json(const std::vector<IdentifiedModel>& models,
                      const std::string& path) {
    json doc = json::array();
    for (const auto& m : models) {
        doc.push_back({{"zone", m.zone},
                       {"a", m.model.a},
                       {"U_w_per_k", m.model.u_w_per_k},
                       {"C_j_per_k", m.model.c_j_per_k},
                       {"dt_s", m.model.dt_s},
                       {"rms_c", m.rms_c},
                       {"lambda", m.lambda}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model JSON", path);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("short write on model JSON", path);
}

std::vector<IdentifiedModel> load_models_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model JSON", path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw SchemaError("model JSON is not valid JSON: " +
                          std::string(e.what()));
    }
    if (!doc.is_array()) {
        throw SchemaError("model JSON: expected an array of models");
    }
    std::vector<IdentifiedModel> out;
    try {
        for (const auto& item : doc) {
            IdentifiedModel m;
            m.zone = item.at("zone").get<std::string>();
            m.model.a = item.at("a").get<double>();
            m.model.u_w_per_k = item.at("U_w_per_k").get<double>();
            m.model.c_j_per_k = item.at("C_j_per_k").get<double>();
            m.model.dt_s = item.at("dt_s").get<double>();
            m.rms_c = item.at("rms_c").get<double>();
            m.lambda = item.at("lambda").get<double>();
            if (!thermal_model_sane(m.model)) {
                throw SchemaError("model JSON: parameters outside sanity "
                                  "bands for zone " + m.zone);
            }
            out.push_back(std::move(m));
        }
    } catch (const json::exception& e) {
        throw SchemaError("model JSON: missing or mistyped field: " +
                          std::string(e.what()));
    }
    return out;
}

} // namespace zonempc
