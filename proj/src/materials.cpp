#include "zonempc/materials.hpp"

#include <stdexcept>

#include "zonempc/errors.hpp"

namespace zonempc {

LumpedAssembly lump_materials(const std::vector<MaterialLayer>& layers,
                              double area_m2) {
    if (layers.empty()) {
        throw std::invalid_argument("lump_materials: empty layer list");
    }
    if (!(area_m2 > 0.0)) {
        throw std::invalid_argument("lump_materials: area must be positive");
    }
    double r_per_m2 = 0.0;  // m^2 K / W
    double c_per_m2 = 0.0;  // J / (m^2 K)
    for (const auto& l : layers) {
        if (!(l.thickness_m > 0.0) || !(l.conductivity_w_per_mk > 0.0) ||
            !(l.density_kg_per_m3 > 0.0) || !(l.specific_heat_j_per_kgk > 0.0)) {
            throw std::invalid_argument(
                "lump_materials: non-positive property in layer '" + l.name + "'");
        }
        r_per_m2 += l.thickness_m / l.conductivity_w_per_mk;
        c_per_m2 += l.thickness_m * l.density_kg_per_m3 * l.specific_heat_j_per_kgk;
    }
    return LumpedAssembly{area_m2 / r_per_m2, area_m2 * c_per_m2};
}

const std::vector<MaterialLayer>& material_catalog() {
    static const std::vector<MaterialLayer> catalog = {
        {"4 inch dense face brick", 0.1014684, 1.245296, 2082.400, 920.4800},
        {"2 inch insulation", 0.050901, 0.043239, 32.03693, 836.8000},
        {"4 inch concrete block", 0.1014984, 0.3805070, 608.7016, 836.8000},
        {"3/4 inch plaster board", 0.019050, 0.7264224, 1601.846, 836.8000},
        {"1/8 inch hardwood", 0.003169, 0.1591211, 720.8308, 1255.200},
        {"8 inch concrete block", 0.2033016, 0.5707605, 608.7016, 836.8000},
        {"acoustic tile", 0.019050, 0.060535, 480.5539, 836.8000},
        {"1/2 inch stone", 0.012710, 1.435549, 881.0155, 1673.600},
        {"3/8 inch membrane", 0.009540, 0.1902535, 1121.292, 1673.600},
    };
    return catalog;
}

const MaterialLayer& material_by_name(const std::string& name) {
    for (const auto& m : material_catalog()) {
        if (m.name == name) return m;
    }
    throw SchemaError("unknown construction material: " + name);
}

} // namespace zonempc
