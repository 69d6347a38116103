#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace zonempc {

// One closed-loop run: per-step outdoor temperature plus, for every zone,
// the plant temperature, the controller's one-step prediction, the applied
// power, and occupancy truth/forecast. Column-oriented; all per-zone
// vectors share the step axis.
struct ScenarioLog {
    std::int64_t start_s = 0;
    double step_s = 600.0;
    std::string mode; // "learning" or "conventional"
    std::vector<std::string> zone_names;
    std::vector<double> tout_c;                  // [step]
    std::vector<std::vector<double>> tin_c;      // [zone][step]
    std::vector<std::vector<double>> tin_pred_c; // [zone][step]
    std::vector<std::vector<double>> p_w;        // [zone][step]
    std::vector<std::vector<int>> occ_true;      // [zone][step]
    std::vector<std::vector<double>> occ_pred;   // [zone][step]

    long size() const { return static_cast<long>(tout_c.size()); }
    int n_zones() const { return static_cast<int>(zone_names.size()); }
    std::int64_t time_at(long i) const {
        return start_s + static_cast<std::int64_t>(step_s * i);
    }
};

// Preallocates the per-zone columns for n_steps steps.
ScenarioLog make_log(const std::vector<std::string>& zone_names,
                     std::int64_t start_s, double step_s, long n_steps,
                     const std::string& mode);

// CSV with exact header
//   timestamp,zone,tout_c,tin_c,tin_pred_c,p_w,occ_true,occ_pred,mode
// one row per zone per step, grouped per step in zone order. Doubles are
// written with 10 significant digits, comfortably lossless at the 6 the
// format promises. Throws std::invalid_argument on a ragged log, IoError
// on IO failure.
void export_csv(const ScenarioLog& log, const std::string& path);

// Inverse of export_csv. Wrong header, inconsistent zone grouping, mixed
// mode strings, disagreeing tout within a step, or a non-uniform timestamp
// step raise SchemaError; malformed fields raise ParseError with the line
// number; a missing file raises IoError.
ScenarioLog import_csv(const std::string& path);

} // namespace zonempc
