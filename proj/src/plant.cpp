#include "zonempc/plant.hpp"

#include <cmath>
#include <stdexcept>

#include "zonempc/errors.hpp"

namespace zonempc {

BuildingPlant::BuildingPlant(std::vector<ZoneParams> zones, PowerLimits limits,
                             double dt_s)
    : zones_(std::move(zones)), limits_(limits), dt_s_(dt_s) {
    if (zones_.empty()) {
        throw ConfigError("plant: at least one zone required");
    }
    if (!(dt_s_ > 0.0)) {
        throw ConfigError("plant: dt must be positive");
    }
    if (!(limits_.p_min_w < limits_.p_max_w)) {
        throw ConfigError("plant: p_min must be below p_max");
    }
    for (const auto& z : zones_) {
        if (!(z.capacitance_j_per_k > 0.0) ||
            !(z.envelope_conductance_w_per_k > 0.0) ||
            !(z.floor_area_m2 > 0.0)) {
            throw ConfigError("plant: non-positive parameter in zone '" +
                              z.name + "'");
        }
    }
    neighbors_.resize(zones_.size());
    for (std::size_t i = 0; i < zones_.size(); ++i) {
        for (const auto& [nbr, u] : zones_[i].interzone_w_per_k) {
            if (!(u > 0.0)) {
                throw ConfigError("plant: non-positive interzone conductance " +
                                  zones_[i].name + " - " + nbr);
            }
            int j = zone_index(nbr);
            if (j == static_cast<int>(i)) {
                throw ConfigError("plant: zone '" + nbr +
                                  "' coupled to itself");
            }
            auto it = zones_[j].interzone_w_per_k.find(zones_[i].name);
            if (it == zones_[j].interzone_w_per_k.end() || it->second != u) {
                throw ConfigError("plant: asymmetric interzone coupling " +
                                  zones_[i].name + " - " + nbr);
            }
            neighbors_[i].emplace_back(j, u);
        }
    }
    // Explicit Euler is only meaningful when the per-step decay factor stays
    // positive; reject configurations violating dt*(U_env+sum U_zn)/C < 1.
    for (std::size_t i = 0; i < zones_.size(); ++i) {
        double u_total = zones_[i].envelope_conductance_w_per_k;
        for (const auto& [j, u] : neighbors_[i]) {
            (void)j;
            u_total += u;
        }
        if (!(dt_s_ * u_total / zones_[i].capacitance_j_per_k < 1.0)) {
            throw ConfigError("plant: explicit Euler stability bound violated "
                              "in zone '" + zones_[i].name + "'");
        }
    }
}

int BuildingPlant::zone_index(const std::string& name) const {
    for (std::size_t i = 0; i < zones_.size(); ++i) {
        if (zones_[i].name == name) return static_cast<int>(i);
    }
    throw ConfigError("plant: unknown zone '" + name + "'");
}

PowerLimits BuildingPlant::zone_power_limits(int zone) const {
    zones_.at(zone);
    return limits_;
}

PlantState BuildingPlant::initial_state(double temp_c) const {
    PlantState s;
    s.step = 0;
    s.zone_temp_c.assign(zones_.size(), temp_c);
    return s;
}

PlantState BuildingPlant::step(const PlantState& state,
                               const HvacCommand& command, double tout_c,
                               const std::vector<double>& occupant_heat_w) const {
    const std::size_t n = zones_.size();
    if (state.zone_temp_c.size() != n || command.power_w.size() != n ||
        occupant_heat_w.size() != n) {
        throw std::invalid_argument("plant: state/command size mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
        double p = command.power_w[i];
        if (!(p >= limits_.p_min_w && p <= limits_.p_max_w)) {
            throw std::invalid_argument("plant: commanded power outside limits "
                                        "in zone '" + zones_[i].name + "'");
        }
    }
    PlantState next;
    next.step = state.step + 1;
    next.zone_temp_c.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& z = zones_[i];
        double t = state.zone_temp_c[i];
        double flux = command.power_w[i] + occupant_heat_w[i] -
                      z.envelope_conductance_w_per_k * (t - tout_c);
        for (const auto& [j, u] : neighbors_[i]) {
            flux -= u * (t - state.zone_temp_c[j]);
        }
        double t_next = t + dt_s_ / z.capacitance_j_per_k * flux;
        if (!std::isfinite(t_next) || t_next < -50.0 || t_next > 60.0) {
            throw DivergenceError("plant: zone '" + z.name +
                                  "' temperature diverged at step " +
                                  std::to_string(next.step));
        }
        next.zone_temp_c[i] = t_next;
    }
    return next;
}

} // namespace zonempc
