#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "zonempc/errors.hpp"
#include "zonempc/materials.hpp"
#include "zonempc/plant.hpp"

using namespace zonempc;

namespace {

ZoneParams simple_zone(const std::string& name, double c, double u) {
    ZoneParams z;
    z.name = name;
    z.floor_area_m2 = 400.0;
    z.capacitance_j_per_k = c;
    z.envelope_conductance_w_per_k = u;
    return z;
}

} // namespace

TEST_CASE("lump_materials: single brick layer") {
    // Hand evaluation of U = k/d and C = d*rho*cp for a 1 m^2 face:
    //   1.245296 / 0.1014684        = 12.272746983297263
    //   0.1014684 * 2082.4 * 920.48 = 194495.3954093568
    std::vector<MaterialLayer> layers = {
        {"4 inch dense face brick", 0.1014684, 1.245296, 2082.400, 920.4800}};
    auto lumped = lump_materials(layers, 1.0);
    CHECK(lumped.conductance_w_per_k ==
          doctest::Approx(12.272746983297263).epsilon(1e-12));
    CHECK(lumped.capacitance_j_per_k ==
          doctest::Approx(194495.3954093568).epsilon(1e-12));
}

TEST_CASE("lump_materials: series resistance and summed capacity") {
    std::vector<MaterialLayer> layers = {
        {"a", 0.1, 0.5, 1000.0, 900.0},
        {"b", 0.05, 0.04, 30.0, 800.0},
    };
    double r = 0.1 / 0.5 + 0.05 / 0.04;
    double c = 0.1 * 1000.0 * 900.0 + 0.05 * 30.0 * 800.0;
    auto lumped = lump_materials(layers, 12.0);
    CHECK(lumped.conductance_w_per_k == doctest::Approx(12.0 / r).epsilon(1e-12));
    CHECK(lumped.capacitance_j_per_k == doctest::Approx(12.0 * c).epsilon(1e-12));
}

TEST_CASE("lump_materials: scaling in area") {
    std::vector<MaterialLayer> layers = {
        {"a", 0.02, 0.7, 1600.0, 830.0}};
    auto one = lump_materials(layers, 1.0);
    auto big = lump_materials(layers, 37.5);
    CHECK(big.conductance_w_per_k ==
          doctest::Approx(37.5 * one.conductance_w_per_k));
    CHECK(big.capacitance_j_per_k ==
          doctest::Approx(37.5 * one.capacitance_j_per_k));
}

TEST_CASE("lump_materials: parameter validation") {
    std::vector<MaterialLayer> good = {{"a", 0.1, 0.5, 1000.0, 900.0}};
    CHECK_THROWS_AS(lump_materials({}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(lump_materials(good, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(lump_materials(good, -2.0), std::invalid_argument);
    std::vector<MaterialLayer> bad = {{"a", 0.1, 0.0, 1000.0, 900.0}};
    CHECK_THROWS_AS(lump_materials(bad, 1.0), std::invalid_argument);
    bad = {{"a", -0.1, 0.5, 1000.0, 900.0}};
    CHECK_THROWS_AS(lump_materials(bad, 1.0), std::invalid_argument);
}

TEST_CASE("material catalog lookup") {
    const auto& brick = material_by_name("4 inch dense face brick");
    CHECK(brick.thickness_m == doctest::Approx(0.1014684));
    CHECK(brick.specific_heat_j_per_kgk == doctest::Approx(920.48));
    CHECK(material_catalog().size() == 9);
    CHECK_THROWS_AS(material_by_name("unobtainium"), SchemaError);
}

TEST_CASE("plant step: single zone hand-computed update") {
    // T' = 20 + (600/1e6) * (2000 - 100*(20-10)) = 20.6
    BuildingPlant plant({simple_zone("z", 1e6, 100.0)}, {-5000.0, 10000.0},
                        600.0);
    PlantState s = plant.initial_state(20.0);
    auto next = plant.step(s, {{2000.0}}, 10.0, {0.0});
    CHECK(next.zone_temp_c[0] == doctest::Approx(20.6).epsilon(1e-12));
    CHECK(next.step == 1);
}

TEST_CASE("plant step: single-zone energy balance is exact") {
    double c = 3.7e6, u = 212.5, dt = 600.0;
    BuildingPlant plant({simple_zone("z", c, u)}, {-5000.0, 10000.0}, dt);
    PlantState s = plant.initial_state(21.37);
    double p = -1234.5, occ = 1700.0, tout = 28.9;
    auto next = plant.step(s, {{p}}, tout, {occ});
    double lhs = c * (next.zone_temp_c[0] - s.zone_temp_c[0]);
    double rhs = dt * (p + occ - u * (s.zone_temp_c[0] - tout));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("plant: passive relaxation toward outdoor temperature") {
    BuildingPlant plant({simple_zone("a", 5e6, 250.0)}, {-5000.0, 10000.0},
                        600.0);
    double tout = 5.0;
    PlantState s = plant.initial_state(30.0);
    double prev_gap = std::abs(s.zone_temp_c[0] - tout);
    for (int i = 0; i < 2000; ++i) {
        s = plant.step(s, {{0.0}}, tout, {0.0});
        double gap = std::abs(s.zone_temp_c[0] - tout);
        CHECK(gap <= prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 0.01);
}

TEST_CASE("plant: zone label symmetry") {
    auto za = simple_zone("a", 4.7e6, 260.0);
    auto zb = simple_zone("b", 4.7e6, 260.0);
    za.interzone_w_per_k["b"] = 150.0;
    zb.interzone_w_per_k["a"] = 150.0;
    BuildingPlant p1({za, zb}, {-5000.0, 10000.0}, 600.0);
    BuildingPlant p2({zb, za}, {-5000.0, 10000.0}, 600.0);

    PlantState s1;
    s1.zone_temp_c = {22.0, 19.5};
    PlantState s2;
    s2.zone_temp_c = {19.5, 22.0};
    for (int i = 0; i < 50; ++i) {
        s1 = p1.step(s1, {{800.0, -300.0}}, 3.0, {400.0, 0.0});
        s2 = p2.step(s2, {{-300.0, 800.0}}, 3.0, {0.0, 400.0});
        CHECK(s1.zone_temp_c[0] == doctest::Approx(s2.zone_temp_c[1]).epsilon(1e-14));
        CHECK(s1.zone_temp_c[1] == doctest::Approx(s2.zone_temp_c[0]).epsilon(1e-14));
    }
}

TEST_CASE("plant: constructor rejects unstable discretization") {
    // dt*U/C = 600*300/1e5 = 1.8 >= 1
    CHECK_THROWS_AS(
        BuildingPlant({simple_zone("z", 1e5, 300.0)}, {-5000.0, 10000.0}, 600.0),
        ConfigError);
}

TEST_CASE("plant: constructor rejects asymmetric interzone coupling") {
    auto za = simple_zone("a", 4.7e6, 260.0);
    auto zb = simple_zone("b", 4.7e6, 260.0);
    za.interzone_w_per_k["b"] = 150.0;
    SUBCASE("missing reverse edge") {
        CHECK_THROWS_AS(BuildingPlant({za, zb}, {-5000.0, 10000.0}, 600.0),
                        ConfigError);
    }
    SUBCASE("mismatched conductance") {
        zb.interzone_w_per_k["a"] = 151.0;
        CHECK_THROWS_AS(BuildingPlant({za, zb}, {-5000.0, 10000.0}, 600.0),
                        ConfigError);
    }
    SUBCASE("unknown neighbor") {
        za.interzone_w_per_k.clear();
        za.interzone_w_per_k["ghost"] = 10.0;
        CHECK_THROWS_AS(BuildingPlant({za, zb}, {-5000.0, 10000.0}, 600.0),
                        ConfigError);
    }
}

TEST_CASE("plant: command validation and limits") {
    BuildingPlant plant({simple_zone("z", 4.7e6, 260.0)}, {-5000.0, 10000.0},
                        600.0);
    auto lim = plant.zone_power_limits(0);
    CHECK(lim.p_min_w == -5000.0);
    CHECK(lim.p_max_w == 10000.0);
    PlantState s = plant.initial_state(22.0);
    CHECK_THROWS_AS(plant.step(s, {{10001.0}}, 0.0, {0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(plant.step(s, {{-5000.1}}, 0.0, {0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(plant.step(s, {{0.0, 0.0}}, 0.0, {0.0, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("plant: divergence guard") {
    BuildingPlant plant({simple_zone("z", 4.7e6, 260.0)}, {-50000.0, 50000.0},
                        600.0);
    PlantState s = plant.initial_state(59.0);
    // Pump maximum heat into an already-hot zone until the guard fires.
    CHECK_THROWS_AS([&] {
        for (int i = 0; i < 10000; ++i) {
            s = plant.step(s, {{50000.0}}, 40.0, {0.0});
        }
    }(), DivergenceError);
}
