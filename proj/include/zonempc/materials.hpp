#pragma once

#include <string>
#include <vector>

namespace zonempc {

struct MaterialLayer {
    std::string name;
    double thickness_m;
    double conductivity_w_per_mk;
    double density_kg_per_m3;
    double specific_heat_j_per_kgk;
};

struct LumpedAssembly {
    double conductance_w_per_k;
    double capacitance_j_per_k;
};

// Collapses a layered assembly of the given face area into a single
// conductance (series resistances) and a single capacitance (summed
// per-area heat capacity):
//
//   U = area / sum_i(d_i / k_i)
//   C = area * sum_i(d_i * rho_i * c_i)
//
// Throws std::invalid_argument on an empty layer list, non-positive area,
// or any non-positive layer property.
LumpedAssembly lump_materials(const std::vector<MaterialLayer>& layers,
                              double area_m2);

// Built-in construction material catalog (ASHRAE-style assemblies).
const std::vector<MaterialLayer>& material_catalog();

// Throws SchemaError if the name is not in the catalog.
const MaterialLayer& material_by_name(const std::string& name);

} // namespace zonempc
