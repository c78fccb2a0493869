#include <doctest.h>

#include <cmath>

#include "afdc/aero.hpp"
#include "test_support.hpp"

using namespace afdc;
using namespace afdc::test;

namespace {
const double kPi = std::acos(-1.0);
double deg2rad(double d) { return d * kPi / 180.0; }
} // namespace

TEST_CASE("build_panels places vortices and collocations by the 1/4-3/4 rule") {
    // Uniform 4-panel flat plate: vortex x = 1/16, 5/16, 9/16, 13/16.
    const auto nodes = flat_camber_nodes(4, /*cosine=*/false);
    const PanelSystem sys = build_panels(nodes, 0.0, std::nullopt);
    REQUIRE(sys.panel_count() == 4);
    CHECK(sys.vortex[0].x == doctest::Approx(1.0 / 16).epsilon(1e-12));
    CHECK(sys.vortex[1].x == doctest::Approx(5.0 / 16).epsilon(1e-12));
    CHECK(sys.vortex[2].x == doctest::Approx(9.0 / 16).epsilon(1e-12));
    CHECK(sys.vortex[3].x == doctest::Approx(13.0 / 16).epsilon(1e-12));
    CHECK(sys.collocation[0].x == doctest::Approx(3.0 / 16).epsilon(1e-12));
    for (const auto& n : sys.normal) {
        CHECK(n.x == doctest::Approx(0.0));
        CHECK(n.y == doctest::Approx(1.0));
    }
}

TEST_CASE("build_panels normals are unit length and upward") {
    const auto g = normalize(make_naca4(0.04, 0.4, 0.12));
    const auto nodes = camber_line(g, 50);
    const PanelSystem sys = build_panels(nodes, 12.0, 0.4);
    for (const auto& n : sys.normal) {
        CHECK(std::abs(std::hypot(n.x, n.y) - 1.0) < 1e-12);
        CHECK(n.y > 0.0);
    }
}

TEST_CASE("build_panels ground handling") {
    const auto nodes = flat_camber_nodes(20);
    SUBCASE("h/c 0.05 at aoa 20 is valid after elevation") {
        const PanelSystem sys = build_panels(nodes, 20.0, 0.05);
        for (const auto& v : sys.vortex) CHECK(v.y > 0.0);
    }
    SUBCASE("non-positive clearance becomes ground contact") {
        CHECK_THROWS_WITH_AS(build_panels(nodes, 5.0, 0.0), doctest::Contains("GroundContact"),
                             Error);
        CHECK_THROWS_AS(build_panels(nodes, 5.0, -0.2), Error);
    }
    SUBCASE("free air needs no clearance") {
        CHECK_NOTHROW(build_panels(nodes, 5.0, std::nullopt));
    }
}

TEST_CASE("flat plate cl matches 2 pi sin(alpha) within 1 percent at n = 200") {
    const auto nodes = flat_camber_nodes(200);
    for (double alpha : {2.0, 5.0}) {
        PanelSystem sys = build_panels(nodes, alpha, std::nullopt);
        solve_circulations(sys);
        const double cl = lift_coefficient(sys);
        const double exact = 2.0 * kPi * std::sin(deg2rad(alpha));
        CHECK(std::abs(cl - exact) / exact < 0.01);
    }
}

TEST_CASE("flat plate aoa 2 frozen value") {
    // 2 pi sin(2 deg) = 0.21930335...
    const auto nodes = flat_camber_nodes(200);
    PanelSystem sys = build_panels(nodes, 2.0, std::nullopt);
    solve_circulations(sys);
    CHECK(lift_coefficient(sys) == doctest::Approx(0.2193).epsilon(0.01));
}

TEST_CASE("zero camber at aoa 0 gives zero circulation everywhere") {
    const auto nodes = flat_camber_nodes(60);
    PanelSystem sys = build_panels(nodes, 0.0, std::nullopt);
    solve_circulations(sys);
    for (double g : sys.gamma) CHECK(g == 0.0);
    CHECK(lift_coefficient(sys) == 0.0);
}

TEST_CASE("image system cancels vertical velocity on the ground plane") {
    // For any vortex strength, the mirrored pair induces zero normal flow at
    // y = 0 by antisymmetry; probe the summed field directly.
    const auto nodes = flat_camber_nodes(30);
    PanelSystem sys = build_panels(nodes, 6.0, 0.4);
    solve_circulations(sys);
    for (double probe_x : {-0.5, 0.2, 0.7, 1.9}) {
        double v_total = 0.0;
        for (std::size_t j = 0; j < sys.panel_count(); ++j) {
            const double g = sys.gamma[j];
            auto v_of = [&](double vx, double vy, double sign) {
                const double dx = probe_x - vx;
                const double dy = 0.0 - vy;
                const double r2 = dx * dx + dy * dy;
                return sign * g * (-dx) / (2.0 * kPi * r2);
            };
            v_total += v_of(sys.vortex[j].x, sys.vortex[j].y, 1.0);
            v_total += v_of(sys.vortex[j].x, -sys.vortex[j].y, -1.0);
        }
        CHECK(std::abs(v_total) < 1e-10);
    }
}

TEST_CASE("lift_coefficient is linear in the circulations") {
    const auto nodes = flat_camber_nodes(40);
    PanelSystem sys = build_panels(nodes, 3.0, std::nullopt);
    solve_circulations(sys);
    const double cl = lift_coefficient(sys);
    for (auto& g : sys.gamma) g *= 2.0;
    CHECK(lift_coefficient(sys) == doctest::Approx(2.0 * cl).epsilon(1e-14));
}

TEST_CASE("small-angle linearity: cl(2)/cl(1) within [1.98, 2.02]") {
    const auto nodes = flat_camber_nodes(200);
    auto cl_at = [&](double alpha) {
        PanelSystem sys = build_panels(nodes, alpha, std::nullopt);
        solve_circulations(sys);
        return lift_coefficient(sys);
    };
    const double ratio = cl_at(2.0) / cl_at(1.0);
    CHECK(ratio > 1.98);
    CHECK(ratio < 2.02);
}

TEST_CASE("solver residual stays at solver precision") {
    const auto g = normalize(make_naca4(0.06, 0.4, 0.15));
    const auto nodes = camber_line(g, 200);
    PanelSystem sys = build_panels(nodes, 10.0, 0.25);
    solve_circulations(sys);
    CHECK(sys.residual <= 1e-10);
}

TEST_CASE("drag polar") {
    CHECK(drag_estimate(0.0) == 0.008);
    CHECK(drag_estimate(1.0) == doctest::Approx(0.018).epsilon(1e-15));
    CHECK(drag_estimate(-1.3) == drag_estimate(1.3));
    DragPolar custom{0.01, 0.02};
    CHECK(drag_estimate(2.0, custom) == doctest::Approx(0.09).epsilon(1e-15));
}

TEST_CASE("label composes the full path") {
    SUBCASE("flat plate at aoa 0 in free air") {
        const AirfoilGeometry plate = normalize(make_flat_plate());
        OracleConfig oc;
        oc.panels = 100;
        const AeroLabel lbl = label(plate, 0.0, oc);
        CHECK(lbl.cl == 0.0);
        CHECK(lbl.cd == 0.008);
        CHECK(lbl.ratio == 0.0);
    }
    SUBCASE("ratio is cl/cd exactly and cd is always positive") {
        const auto g = normalize(make_naca4(0.04, 0.4, 0.12));
        OracleConfig oc;
        oc.clearance = 0.3;
        const AeroLabel lbl = label(g, 6.0, oc);
        CHECK(lbl.cd > 0.0);
        CHECK(lbl.ratio == lbl.cl / lbl.cd);
        CHECK((lbl.ratio > 0) == (lbl.cl > 0));
    }
    SUBCASE("grid convergence: n = 100 vs n = 400 within 0.5 percent") {
        const auto g = normalize(make_naca4(0.02, 0.4, 0.12));
        OracleConfig coarse, fine;
        coarse.panels = 100;
        fine.panels = 400;
        coarse.clearance = fine.clearance = 0.3;
        const double a = label(g, 5.0, coarse).cl;
        const double b = label(g, 5.0, fine).cl;
        CHECK(std::abs(a - b) / std::abs(b) < 0.005);
    }
    SUBCASE("ground effect shifts cl beyond the convergence tolerance at h/c 0.3") {
        const auto g = normalize(make_naca4(0.02, 0.4, 0.12));
        OracleConfig free_air, ground;
        free_air.panels = ground.panels = 400;
        ground.clearance = 0.3;
        const double cl_free = label(g, 5.0, free_air).cl;
        const double cl_ground = label(g, 5.0, ground).cl;
        CHECK(std::abs(cl_ground - cl_free) / std::abs(cl_free) > 0.005);
    }
    SUBCASE("free-air labels ignore the clearance parameter bitwise") {
        const auto g = normalize(make_naca4(0.03, 0.5, 0.10));
        OracleConfig oc; // clearance unset = free air
        const AeroLabel a = label(g, 4.0, oc);
        const AeroLabel b = label(g, 4.0, oc);
        CHECK(a.cl == b.cl);
        CHECK(a.ratio == b.ratio);
    }
}

TEST_CASE("singular system is reported") {
    // Two coincident camber nodes collapse a panel to zero length upstream;
    // instead drive the solver with a duplicated vortex/collocation pair.
    PanelSystem sys;
    sys.vortex = {{0.1, 0.0}, {0.1, 0.0}, {0.5, 0.0}, {0.7, 0.0}, {0.9, 0.0},
                  {0.2, 0.0}, {0.3, 0.0}, {0.4, 0.0}, {0.6, 0.0}, {0.8, 0.0}};
    sys.collocation = sys.vortex;
    for (auto& c : sys.collocation) c.x += 0.05;
    sys.collocation[1] = sys.collocation[0]; // duplicated row
    sys.normal.assign(10, {0.0, 1.0});
    sys.gamma.assign(10, 0.0);
    CHECK_THROWS_WITH_AS(solve_circulations(sys), doctest::Contains("SingularSystem"), Error);
}
