#pragma once

#include <map>
#include <string>
#include <vector>

#include "zonempc/materials.hpp"

namespace zonempc {

struct ZoneParams {
    std::string name;
    double floor_area_m2;
    double capacitance_j_per_k;
    double envelope_conductance_w_per_k;
    // Neighbor zone name -> coupling conductance (W/K). Must be symmetric
    // across the building description.
    std::map<std::string, double> interzone_w_per_k;
};

struct PowerLimits {
    double p_min_w;
    double p_max_w;
};

struct PlantState {
    long step = 0;
    std::vector<double> zone_temp_c;
};

struct HvacCommand {
    std::vector<double> power_w; // per zone, heating positive
};

// Ground-truth building: one thermal node per zone, explicit Euler update.
//
//   T_z' = T_z + (dt/C_z) * (P_z + occ_z - U_env,z (T_z - T_out)
//                            - sum_n U_zn (T_z - T_n))
//
// Interzone coupling is present here but deliberately absent from the
// controller's model; the identified model has to absorb it.
class BuildingPlant {
public:
    BuildingPlant(std::vector<ZoneParams> zones, PowerLimits limits,
                  double dt_s);

    int n_zones() const { return static_cast<int>(zones_.size()); }
    const std::vector<ZoneParams>& zones() const { return zones_; }
    const ZoneParams& zone(int i) const { return zones_.at(i); }
    int zone_index(const std::string& name) const;
    double dt_s() const { return dt_s_; }

    PowerLimits zone_power_limits(int zone) const;

    PlantState initial_state(double temp_c) const;

    // occupant_heat_w: direct internal gain per zone (W).
    // Throws std::invalid_argument on size mismatch or a commanded power
    // outside the zone limits; DivergenceError if any updated temperature
    // leaves [-50, 60] degC or turns non-finite.
    PlantState step(const PlantState& state, const HvacCommand& command,
                    double tout_c,
                    const std::vector<double>& occupant_heat_w) const;

private:
    std::vector<ZoneParams> zones_;
    PowerLimits limits_;
    double dt_s_;
    std::vector<std::vector<std::pair<int, double>>> neighbors_;
};

} // namespace zonempc
