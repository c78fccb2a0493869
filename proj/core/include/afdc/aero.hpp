#pragma once

#include <optional>
#include <vector>

#include "afdc/geometry.hpp"

namespace afdc {

/// Parabolic drag polar cd = cd0 + k * cl^2. Potential flow predicts zero
/// drag, so this surrogate supplies the denominator of cl/cd; the constants
/// are representative low-speed values, not measured data.
struct DragPolar {
    double cd0 = 0.008;
    double k = 0.01;
};

struct AeroLabel {
    double cl = 0.0;
    double cd = 0.0;
    double ratio = 0.0; // cl / cd
};

/// Lumped-vortex discretization of a camber line: one point vortex at each
/// panel quarter-chord, flow tangency enforced at the three-quarter-chord
/// collocation point. Ground effect uses opposite-sign mirror vortices
/// across y = 0. Circulation is positive clockwise so that lift = rho*U*Gamma
/// and cl = 2 * sum(Gamma) with U = c = 1.
struct PanelSystem {
    std::vector<Vec2> vortex;      // panel quarter-chord points
    std::vector<Vec2> collocation; // panel three-quarter-chord points
    std::vector<Vec2> normal;      // unit normals, y >= 0
    std::vector<double> gamma;     // circulations, filled by solve_circulations
    bool ground_effect = false;
    double residual = 0.0; // max |A*gamma - rhs| from the last solve

    std::size_t panel_count() const { return vortex.size(); }
};

/// Rotates the camber nodes by -aoa_deg about (0.25, 0) (leading edge up for
/// positive aoa, matching pose) and, in ground-effect mode, elevates them so
/// the lowest node sits at y = ground_clearance. A nullopt clearance selects
/// free air: no elevation and no image system.
PanelSystem build_panels(const std::vector<Vec2>& camber_nodes, double aoa_deg,
                         std::optional<double> ground_clearance);

/// Dense direct solve (partial-pivot factorization) of the flow-tangency
/// system; fills sys.gamma and sys.residual.
void solve_circulations(PanelSystem& sys, double freestream = 1.0);

/// Kutta-Joukowski sum: cl = 2 * sum(Gamma) / (U * c) with U = c = 1.
double lift_coefficient(const PanelSystem& sys);

double drag_estimate(double cl, const DragPolar& polar = {});

struct OracleConfig {
    std::size_t panels = 200;
    std::optional<double> clearance; // nullopt = free air
    DragPolar polar;
};

/// Full label path: camber_line -> build_panels -> solve -> cl -> cd -> ratio.
AeroLabel label(const AirfoilGeometry& normalized, double aoa_deg, const OracleConfig& config);

} // namespace afdc
