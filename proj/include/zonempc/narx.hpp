#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zonempc/occupancy.hpp"

namespace zonempc {

// Affine maps used to bring each exogenous feature into [-1, 1], plus the
// head-count that denormalizes the target. Stored with the trained network
// so a serialized model is self-describing.
struct Normalization {
    std::vector<std::array<double, 2>> feature_ranges;
    double target_max = 1.0;
};

Normalization default_feature_normalization();

// One hidden tanh layer, linear output. The input vector is the
// concatenation of d_x delayed exogenous feature vectors followed by d_y
// delayed (normalized) outputs.
struct NarxNetwork {
    int d_x = 2;
    int d_y = 2;
    int hidden_width = 10;
    int input_dim = kFeatureDim;
    Eigen::MatrixXd w1;     // hidden_width x total_inputs()
    Eigen::VectorXd b1;     // hidden_width
    Eigen::RowVectorXd w2;  // 1 x hidden_width
    double b2 = 0.0;
    Normalization norm;

    int total_inputs() const { return input_dim * d_x + d_y; }
    long parameter_count() const {
        return static_cast<long>(hidden_width) * (total_inputs() + 2) + 1;
    }
};

// Weights drawn uniformly from [-0.5, 0.5], deterministic per seed.
NarxNetwork make_narx(int input_dim, int hidden_width, int d_x, int d_y,
                      std::uint64_t seed);

// y_hat = w2 * tanh(w1 * [x(t-1) .. x(t-d_x), y(t-1) .. y(t-d_y)] + b1) + b2.
// All quantities in normalized units. Throws std::invalid_argument on a
// shape mismatch.
double narx_forward(const NarxNetwork& net,
                    const std::vector<std::vector<double>>& x_delays,
                    const std::vector<double>& y_delays);

// Same forward pass on an already-assembled input row.
double narx_forward_packed(const NarxNetwork& net,
                           const Eigen::Ref<const Eigen::VectorXd>& input);

// Teacher-forced regression samples: row t has inputs
// [x(t-1), x(t-2), y(t-1), y(t-2)] and target y(t), with y normalized by
// the zone cap. Deterministic; all units normalized.
struct NarxDataset {
    Eigen::MatrixXd inputs;
    Eigen::VectorXd targets;
    int input_dim = 0;
    int d_x = 2;
    int d_y = 2;
    double target_max = 1.0;
    Normalization norm;

    long n() const { return inputs.rows(); }
};

// Samples drawn for t in [t_begin, t_end); t_begin is raised to the first
// step with a full delay buffer. Throws std::invalid_argument on a bad
// zone or window, AlignmentError if schedule and weather disagree.
NarxDataset build_narx_dataset(const OccupancySchedule& sched,
                               const WeatherSeries& weather, int zone,
                               long t_begin, long t_end);

enum class StopReason { validation_worsened, max_epochs, gradient_small };
const char* to_string(StopReason r);

struct TrainingReport {
    double mse_train = 0.0;
    double mse_val = 0.0;
    double mse_test = 0.0;
    double r_train = 0.0;
    double r_val = 0.0;
    double r_test = 0.0;
    int epochs_run = 0;
    StopReason stop_reason = StopReason::max_epochs;
    // A constant target makes the regression degenerate; training still
    // runs but the condition is surfaced instead of silently absorbed.
    bool degenerate_target = false;
    // Training-split MSE after each accepted Levenberg-Marquardt step;
    // nonincreasing by construction (rejected steps roll back).
    std::vector<double> train_mse_history;
};

// Levenberg-Marquardt on sum-squared error over the (contiguous) training
// split; damping starts at 1e-3, x10 on a rejected step, /10 on an
// accepted one. Stops on six consecutive validation worsenings (restoring
// the best-validation weights), on an infinity-norm gradient below 1e-7,
// or at max_epochs. Requires dataset length >= 10x parameter count and
// positive split fractions summing to 1.
TrainingReport train_narx(NarxNetwork& net, const NarxDataset& data,
                          const std::array<double, 3>& split, int max_epochs);

// Closed-loop rollout: predictions replace ground truth in the y-delay
// buffer. Returns n_steps denormalized head-counts for steps
// t+1 .. t+n_steps, each clipped to [0, max count], not rounded.
// Requires 3 <= t and t + n_steps <= schedule length (the last rollout
// step consumes features at t + n_steps - 1).
std::vector<double> predict_horizon(const NarxNetwork& net,
                                    const OccupancySchedule& history,
                                    const WeatherSeries& weather, int zone,
                                    long t, int n_steps);

// JSON round trip: {d_x, d_y, hidden_width, input_dim, W1 (row-major),
// b1, W2, b2, normalization: {feature_ranges, target_max}}.
void save_narx_json(const NarxNetwork& net, const std::string& path);
NarxNetwork load_narx_json(const std::string& path);

} // namespace zonempc
