#include "zonempc/narx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "zonempc/errors.hpp"

namespace zonempc {

namespace {

using json = nlohmann::json;

Eigen::VectorXd pack_params(const NarxNetwork& net) {
    long p = net.parameter_count();
    Eigen::VectorXd theta(p);
    long k = 0;
    for (int i = 0; i < net.hidden_width; ++i)
        for (int j = 0; j < net.total_inputs(); ++j) theta[k++] = net.w1(i, j);
    for (int i = 0; i < net.hidden_width; ++i) theta[k++] = net.b1[i];
    for (int i = 0; i < net.hidden_width; ++i) theta[k++] = net.w2[i];
    theta[k++] = net.b2;
    return theta;
}

void unpack_params(NarxNetwork& net, const Eigen::VectorXd& theta) {
    long k = 0;
    for (int i = 0; i < net.hidden_width; ++i)
        for (int j = 0; j < net.total_inputs(); ++j) net.w1(i, j) = theta[k++];
    for (int i = 0; i < net.hidden_width; ++i) net.b1[i] = theta[k++];
    for (int i = 0; i < net.hidden_width; ++i) net.w2[i] = theta[k++];
    net.b2 = theta[k++];
}

// Batch forward pass; rows of X are samples.
Eigen::VectorXd forward_all(const NarxNetwork& net, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd act = x * net.w1.transpose();
    act.rowwise() += net.b1.transpose();
    Eigen::MatrixXd hidden = act.array().tanh().matrix();
    return (hidden * net.w2.transpose()).array() + net.b2;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    long n = a.size();
    if (n < 2) return 0.0;
    double ma = a.mean(), mb = b.mean();
    Eigen::ArrayXd da = a.array() - ma, db = b.array() - mb;
    double sa = std::sqrt((da * da).sum()), sb = std::sqrt((db * db).sum());
    if (sa < 1e-15 || sb < 1e-15) return 0.0;
    return (da * db).sum() / (sa * sb);
}

double mse_of(const NarxNetwork& net, const Eigen::MatrixXd& x,
              const Eigen::VectorXd& y) {
    if (x.rows() == 0) return 0.0;
    return (forward_all(net, x) - y).squaredNorm() / x.rows();
}

} // namespace

Normalization default_feature_normalization() {
    Normalization norm;
    norm.feature_ranges = {
        {{-1.0, 1.0}}, {{-1.0, 1.0}},              // sin/cos time of day
        {{-1.0, 1.0}}, {{-1.0, 1.0}},              // sin/cos day of year
        {{0.0, 1.0}},                              // weekday flag
        {{kToutNormMin, kToutNormMax}},            // outdoor temperature
        {{-1.0, 1.0}}, {{-1.0, 1.0}},              // second harmonic of tod
    };
    norm.target_max = 1.0;
    return norm;
}

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::validation_worsened: return "validation_worsened";
        case StopReason::max_epochs: return "max_epochs";
        case StopReason::gradient_small: return "gradient_small";
    }
    return "unknown";
}

NarxNetwork make_narx(int input_dim, int hidden_width, int d_x, int d_y,
                      std::uint64_t seed) {
    if (input_dim < 1 || hidden_width < 1 || d_x < 1 || d_y < 1) {
        throw std::invalid_argument("make_narx: dimensions must be positive");
    }
    NarxNetwork net;
    net.d_x = d_x;
    net.d_y = d_y;
    net.hidden_width = hidden_width;
    net.input_dim = input_dim;
    int m = net.total_inputs();
    net.w1.resize(hidden_width, m);
    net.b1.resize(hidden_width);
    net.w2.resize(hidden_width);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    for (int i = 0; i < hidden_width; ++i)
        for (int j = 0; j < m; ++j) net.w1(i, j) = uni(rng);
    for (int i = 0; i < hidden_width; ++i) net.b1[i] = uni(rng);
    for (int i = 0; i < hidden_width; ++i) net.w2[i] = uni(rng);
    net.b2 = uni(rng);
    if (input_dim == kFeatureDim) {
        net.norm = default_feature_normalization();
    } else {
        net.norm.feature_ranges.assign(input_dim, {-1.0, 1.0});
        net.norm.target_max = 1.0;
    }
    return net;
}

double narx_forward_packed(const NarxNetwork& net,
                           const Eigen::Ref<const Eigen::VectorXd>& input) {
    if (input.size() != net.total_inputs() ||
        net.w1.rows() != net.hidden_width ||
        net.w1.cols() != net.total_inputs() ||
        net.b1.size() != net.hidden_width || net.w2.size() != net.hidden_width) {
        throw std::invalid_argument("narx_forward: shape mismatch");
    }
    Eigen::VectorXd hidden = ((net.w1 * input + net.b1).array().tanh()).matrix();
    return net.w2.dot(hidden) + net.b2;
}

double narx_forward(const NarxNetwork& net,
                    const std::vector<std::vector<double>>& x_delays,
                    const std::vector<double>& y_delays) {
    if (static_cast<int>(x_delays.size()) != net.d_x ||
        static_cast<int>(y_delays.size()) != net.d_y) {
        throw std::invalid_argument("narx_forward: delay buffer sizes do not "
                                    "match d_x/d_y");
    }
    Eigen::VectorXd input(net.total_inputs());
    long k = 0;
    for (const auto& x : x_delays) {
        if (static_cast<int>(x.size()) != net.input_dim) {
            throw std::invalid_argument("narx_forward: feature vector has "
                                        "wrong dimension");
        }
        for (double v : x) input[k++] = v;
    }
    for (double v : y_delays) input[k++] = v;
    return narx_forward_packed(net, input);
}

NarxDataset build_narx_dataset(const OccupancySchedule& sched,
                               const WeatherSeries& weather, int zone,
                               long t_begin, long t_end) {
    if (zone < 0 || zone >= static_cast<int>(sched.zone_names.size())) {
        throw std::invalid_argument("build_narx_dataset: zone out of range");
    }
    const int d_x = 2, d_y = 2;
    // Feature vectors start at index 2 and each sample needs x back to t-2.
    long lo = std::max(t_begin, static_cast<long>(2 + d_x));
    if (t_end > sched.size()) {
        throw std::invalid_argument("build_narx_dataset: window past the end "
                                    "of the schedule");
    }
    if (lo >= t_end) {
        throw std::invalid_argument("build_narx_dataset: empty window");
    }
    NarxDataset data;
    data.input_dim = kFeatureDim;
    data.d_x = d_x;
    data.d_y = d_y;
    data.target_max = std::max(1, sched.max_count[zone]);
    data.norm = default_feature_normalization();
    data.norm.target_max = data.target_max;

    // Features for steps [lo - d_x, t_end - 1]; feats[i] is step lo-d_x+i.
    long f0 = lo - d_x;
    std::vector<std::vector<double>> feats;
    feats.reserve(t_end - f0);
    for (long t = f0; t < t_end; ++t) {
        feats.push_back(build_features(sched, weather, t));
    }
    long n = t_end - lo;
    int m = kFeatureDim * d_x + d_y;
    data.inputs.resize(n, m);
    data.targets.resize(n);
    const auto& counts = sched.counts[zone];
    for (long i = 0; i < n; ++i) {
        long t = lo + i;
        long col = 0;
        for (int d = 1; d <= d_x; ++d) {
            const auto& x = feats[t - d - f0];
            for (int j = 0; j < kFeatureDim; ++j) data.inputs(i, col++) = x[j];
        }
        for (int d = 1; d <= d_y; ++d) {
            data.inputs(i, col++) = counts[t - d] / data.target_max;
        }
        data.targets[i] = counts[t] / data.target_max;
    }
    return data;
}

TrainingReport train_narx(NarxNetwork& net, const NarxDataset& data,
                          const std::array<double, 3>& split, int max_epochs) {
    if (net.input_dim != data.input_dim || net.d_x != data.d_x ||
        net.d_y != data.d_y || net.w1.cols() != net.total_inputs()) {
        throw std::invalid_argument("train_narx: network does not match the "
                                    "dataset layout");
    }
    for (double f : split) {
        if (!(f > 0.0)) {
            throw std::invalid_argument("train_narx: split fractions must be "
                                        "positive");
        }
    }
    if (std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9) {
        throw std::invalid_argument("train_narx: split fractions must sum "
                                    "to 1");
    }
    long n = data.n();
    if (n < 10 * net.parameter_count()) {
        throw std::invalid_argument(
            "train_narx: need at least 10 samples per parameter (" +
            std::to_string(10 * net.parameter_count()) + "), got " +
            std::to_string(n));
    }
    if (max_epochs < 1) {
        throw std::invalid_argument("train_narx: max_epochs must be positive");
    }
    long n_train = static_cast<long>(split[0] * n);
    long n_val = static_cast<long>(split[1] * n);
    long n_test = n - n_train - n_val;
    if (n_train < 1 || n_val < 1 || n_test < 1) {
        throw std::invalid_argument("train_narx: a split is empty");
    }
    net.norm = data.norm;

    Eigen::MatrixXd x_train = data.inputs.topRows(n_train);
    Eigen::VectorXd y_train = data.targets.head(n_train);
    Eigen::MatrixXd x_val = data.inputs.middleRows(n_train, n_val);
    Eigen::VectorXd y_val = data.targets.segment(n_train, n_val);
    Eigen::MatrixXd x_test = data.inputs.bottomRows(n_test);
    Eigen::VectorXd y_test = data.targets.tail(n_test);

    TrainingReport report;
    double mean_t = y_train.mean();
    report.degenerate_target =
        (y_train.array() - mean_t).abs().maxCoeff() < 1e-12;

    const long p = net.parameter_count();
    const int h = net.hidden_width;
    const int m = net.total_inputs();
    Eigen::VectorXd theta = pack_params(net);
    Eigen::VectorXd best_theta = theta;
    double best_val = std::numeric_limits<double>::infinity();
    int bad_checks = 0;

    Eigen::MatrixXd jac(n_train, p);
    auto build_jacobian_and_residual =
        [&](Eigen::VectorXd& resid, double& sse) {
            Eigen::MatrixXd act = x_train * net.w1.transpose();
            act.rowwise() += net.b1.transpose();
            Eigen::MatrixXd hidden = act.array().tanh().matrix();
            resid = (hidden * net.w2.transpose()).array() + net.b2;
            resid -= y_train;
            sse = resid.squaredNorm();
            for (long i = 0; i < n_train; ++i) {
                for (int j = 0; j < h; ++j) {
                    double hv = hidden(i, j);
                    double s = net.w2[j] * (1.0 - hv * hv);
                    for (int k = 0; k < m; ++k) {
                        jac(i, static_cast<long>(j) * m + k) =
                            s * x_train(i, k);
                    }
                    jac(i, static_cast<long>(h) * m + j) = s;       // b1
                    jac(i, static_cast<long>(h) * (m + 1) + j) = hv; // w2
                }
                jac(i, p - 1) = 1.0;
            }
        };

    Eigen::VectorXd resid;
    double sse = 0.0;
    build_jacobian_and_residual(resid, sse);
    Eigen::VectorXd grad = jac.transpose() * resid;
    Eigen::MatrixXd jtj = Eigen::MatrixXd::Zero(p, p);
    jtj.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());

    double mu = 1e-3;
    const double mu_max = 1e10, grad_tol = 1e-7;
    report.stop_reason = StopReason::max_epochs;
    bool stop = false;
    while (!stop) {
        if (grad.lpNorm<Eigen::Infinity>() < grad_tol) {
            report.stop_reason = StopReason::gradient_small;
            break;
        }
        if (report.epochs_run >= max_epochs) {
            report.stop_reason = StopReason::max_epochs;
            break;
        }
        // Damped step; inflate mu until the step reduces the SSE.
        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = jtj.selfadjointView<Eigen::Lower>();
            damped.diagonal().array() += mu;
            Eigen::VectorXd delta = damped.ldlt().solve(-grad);
            Eigen::VectorXd trial = theta + delta;
            unpack_params(net, trial);
            double trial_sse =
                (forward_all(net, x_train) - y_train).squaredNorm();
            if (trial_sse < sse) {
                accepted = true;
                theta = trial;
                mu = std::max(mu * 0.1, 1e-12);
                ++report.epochs_run;
                build_jacobian_and_residual(resid, sse);
                grad.noalias() = jac.transpose() * resid;
                jtj.setZero();
                jtj.selfadjointView<Eigen::Lower>().rankUpdate(
                    jac.transpose());
                report.train_mse_history.push_back(sse / n_train);
                double val = mse_of(net, x_val, y_val);
                if (val < best_val) {
                    best_val = val;
                    best_theta = theta;
                    bad_checks = 0;
                } else if (++bad_checks >= 6) {
                    report.stop_reason = StopReason::validation_worsened;
                    theta = best_theta;
                    unpack_params(net, theta);
                    stop = true;
                }
            } else {
                mu *= 10.0;
                if (mu > mu_max) {
                    // No descent direction left at any damping; treat as
                    // converged.
                    unpack_params(net, theta);
                    report.stop_reason = StopReason::gradient_small;
                    stop = true;
                    break;
                }
            }
        }
    }
    unpack_params(net, theta);
    report.mse_train = mse_of(net, x_train, y_train);
    report.mse_val = mse_of(net, x_val, y_val);
    report.mse_test = mse_of(net, x_test, y_test);
    report.r_train = pearson(forward_all(net, x_train), y_train);
    report.r_val = pearson(forward_all(net, x_val), y_val);
    report.r_test = pearson(forward_all(net, x_test), y_test);
    return report;
}

std::vector<double> predict_horizon(const NarxNetwork& net,
                                    const OccupancySchedule& history,
                                    const WeatherSeries& weather, int zone,
                                    long t, int n_steps) {
    if (n_steps < 1) {
        throw std::invalid_argument("predict_horizon: n_steps must be >= 1");
    }
    if (zone < 0 || zone >= static_cast<int>(history.zone_names.size())) {
        throw std::invalid_argument("predict_horizon: zone out of range");
    }
    if (net.d_x != 2 || net.d_y != 2 || net.input_dim != kFeatureDim) {
        throw std::invalid_argument("predict_horizon: unsupported network "
                                    "layout");
    }
    if (t < 3 || t + n_steps > history.size()) {
        throw std::out_of_range("predict_horizon: window [t+1, t+n] needs "
                                "features for steps t-2 .. t+n-1");
    }
    double tm = std::max(1, history.max_count[zone]);
    // y-delay buffer in normalized units, most recent first.
    double y1 = history.counts[zone][t] / tm;
    double y2 = history.counts[zone][t - 1] / tm;
    std::vector<double> out;
    out.reserve(n_steps);
    Eigen::VectorXd input(net.total_inputs());
    std::vector<double> x_prev = build_features(history, weather, t - 1);
    std::vector<double> x_cur = build_features(history, weather, t);
    for (int k = 1; k <= n_steps; ++k) {
        long col = 0;
        for (int j = 0; j < kFeatureDim; ++j) input[col++] = x_cur[j];
        for (int j = 0; j < kFeatureDim; ++j) input[col++] = x_prev[j];
        input[col++] = y1;
        input[col++] = y2;
        double y = narx_forward_packed(net, input);
        y = std::clamp(y, 0.0, 1.0);
        out.push_back(y * tm);
        y2 = y1;
        y1 = y;
        if (k < n_steps) {
            x_prev = std::move(x_cur);
            x_cur = build_features(history, weather, t + k);
        }
    }
    return out;
}

void save_narx_json(const NarxNetwork& net, const std::string& path) {
    json doc;
    doc["d_x"] = net.d_x;
    doc["d_y"] = net.d_y;
    doc["hidden_width"] = net.hidden_width;
    doc["input_dim"] = net.input_dim;
    std::vector<double> w1;
    w1.reserve(net.w1.size());
    for (int i = 0; i < net.w1.rows(); ++i)
        for (int j = 0; j < net.w1.cols(); ++j) w1.push_back(net.w1(i, j));
    doc["W1"] = w1;
    doc["b1"] = std::vector<double>(net.b1.data(), net.b1.data() + net.b1.size());
    doc["W2"] = std::vector<double>(net.w2.data(), net.w2.data() + net.w2.size());
    doc["b2"] = net.b2;
    json ranges = json::array();
    for (const auto& r : net.norm.feature_ranges) ranges.push_back({r[0], r[1]});
    doc["normalization"] = {{"feature_ranges", ranges},
                            {"target_max", net.norm.target_max}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write NARX model", path);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("short write on NARX model", path);
}

NarxNetwork load_narx_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open NARX model", path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw SchemaError("NARX model is not valid JSON: " +
                          std::string(e.what()));
    }
    NarxNetwork net;
    try {
        net.d_x = doc.at("d_x").get<int>();
        net.d_y = doc.at("d_y").get<int>();
        net.hidden_width = doc.at("hidden_width").get<int>();
        net.input_dim = doc.at("input_dim").get<int>();
        if (net.d_x < 1 || net.d_y < 1 || net.hidden_width < 1 ||
            net.input_dim < 1) {
            throw SchemaError("NARX model: non-positive dimension");
        }
        auto w1 = doc.at("W1").get<std::vector<double>>();
        auto b1 = doc.at("b1").get<std::vector<double>>();
        auto w2 = doc.at("W2").get<std::vector<double>>();
        int m = net.total_inputs();
        if (static_cast<long>(w1.size()) !=
            static_cast<long>(net.hidden_width) * m) {
            throw SchemaError("NARX model: W1 has wrong shape");
        }
        if (static_cast<int>(b1.size()) != net.hidden_width ||
            static_cast<int>(w2.size()) != net.hidden_width) {
            throw SchemaError("NARX model: bias/output shapes wrong");
        }
        net.w1.resize(net.hidden_width, m);
        for (int i = 0; i < net.hidden_width; ++i)
            for (int j = 0; j < m; ++j) net.w1(i, j) = w1[i * m + j];
        net.b1 = Eigen::Map<Eigen::VectorXd>(b1.data(), b1.size());
        net.w2 = Eigen::Map<Eigen::RowVectorXd>(w2.data(), w2.size());
        net.b2 = doc.at("b2").get<double>();
        const auto& norm = doc.at("normalization");
        for (const auto& r : norm.at("feature_ranges")) {
            if (r.size() != 2) {
                throw SchemaError("NARX model: feature range needs [lo, hi]");
            }
            net.norm.feature_ranges.push_back(
                {r[0].get<double>(), r[1].get<double>()});
        }
        if (static_cast<int>(net.norm.feature_ranges.size()) != net.input_dim) {
            throw SchemaError("NARX model: feature_ranges does not match "
                              "input_dim");
        }
        net.norm.target_max = norm.at("target_max").get<double>();
    } catch (const json::exception& e) {
        throw SchemaError("NARX model: missing or mistyped field: " +
                          std::string(e.what()));
    }
    if (!net.w1.allFinite() || !net.b1.allFinite() || !net.w2.allFinite() ||
        !std::isfinite(net.b2) || !std::isfinite(net.norm.target_max)) {
        throw SchemaError("NARX model: non-finite weight");
    }
    for (const auto& r : net.norm.feature_ranges) {
        if (!std::isfinite(r[0]) || !std::isfinite(r[1]) || !(r[1] > r[0])) {
            throw SchemaError("NARX model: bad feature range");
        }
    }
    return net;
}

} // namespace zonempc
