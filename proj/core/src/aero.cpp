#include "afdc/aero.hpp"

#include <algorithm>
#include <cmath>

#include "afdc/error.hpp"

namespace afdc {

namespace {

constexpr double kPivotTolerance = 1e-12;

// Velocity at (px, py) induced by a unit clockwise-positive point vortex at
// (vx, vy): u = dy / (2 pi r^2), v = -dx / (2 pi r^2).
inline void unit_vortex_velocity(double px, double py, double vx, double vy,
                                 double& u, double& v) {
    const double dx = px - vx;
    const double dy = py - vy;
    const double r2 = dx * dx + dy * dy;
    const double coef = 1.0 / (2.0 * std::acos(-1.0) * r2);
    u = coef * dy;
    v = -coef * dx;
}

// In-place LU with partial pivoting; returns false on a pivot below threshold.
bool lu_solve(std::vector<double>& a, std::vector<double>& x, std::size_t n) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(a[perm[col] * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(a[perm[r] * n + col]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best < kPivotTolerance) return false;
        std::swap(perm[col], perm[piv]);
        const std::size_t prow = perm[col];
        const double pivot = a[prow * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const std::size_t row = perm[r] * n;
            const double f = a[row + col] / pivot;
            a[row + col] = f;
            for (std::size_t c = col + 1; c < n; ++c)
                a[row + c] -= f * a[prow * n + c];
        }
    }

    // Forward/back substitution through the permutation.
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[perm[i]];
        for (std::size_t j = 0; j < i; ++j) s -= a[perm[i] * n + j] * y[j];
        y[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[perm[i] * n + j] * x[j];
        x[i] = s / a[perm[i] * n + i];
    }
    return true;
}

} // namespace

PanelSystem build_panels(const std::vector<Vec2>& camber_nodes, double aoa_deg,
                         std::optional<double> ground_clearance) {
    if (camber_nodes.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "need at least one panel (2 camber nodes)");
    if (!std::isfinite(aoa_deg))
        throw Error(ErrorCode::InvalidArgument, "angle of attack must be finite");

    const double theta = -aoa_deg * std::acos(-1.0) / 180.0;
    const double cth = std::cos(theta), sth = std::sin(theta);
    std::vector<Vec2> nodes(camber_nodes.size());
    double min_y = 0.0;
    for (std::size_t i = 0; i < camber_nodes.size(); ++i) {
        const double dx = camber_nodes[i].x - 0.25;
        const double dy = camber_nodes[i].y;
        nodes[i] = {0.25 + dx * cth - dy * sth, dx * sth + dy * cth};
        min_y = (i == 0) ? nodes[i].y : std::min(min_y, nodes[i].y);
    }

    PanelSystem sys;
    sys.ground_effect = ground_clearance.has_value();
    if (sys.ground_effect) {
        const double lift = *ground_clearance - min_y;
        for (auto& p : nodes) p.y += lift;
        for (const auto& p : nodes)
            if (p.y <= 0.0)
                throw Error(ErrorCode::GroundContact, "camber point at or below the ground plane");
    }

    const std::size_t n = nodes.size() - 1;
    sys.vortex.resize(n);
    sys.collocation.resize(n);
    sys.normal.resize(n);
    sys.gamma.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = nodes[i];
        const Vec2& b = nodes[i + 1];
        sys.vortex[i] = {a.x + 0.25 * (b.x - a.x), a.y + 0.25 * (b.y - a.y)};
        sys.collocation[i] = {a.x + 0.75 * (b.x - a.x), a.y + 0.75 * (b.y - a.y)};
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double len = std::hypot(dx, dy);
        if (!(len > 0.0))
            throw Error(ErrorCode::InvalidArgument, "zero-length panel");
        Vec2 nrm{-dy / len, dx / len};
        if (nrm.y < 0.0) {
            nrm.x = -nrm.x;
            nrm.y = -nrm.y;
        }
        sys.normal[i] = nrm;
    }
    return sys;
}

void solve_circulations(PanelSystem& sys, double freestream) {
    const std::size_t n = sys.panel_count();
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty panel system");

    std::vector<double> a(n * n);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& cp = sys.collocation[i];
        const Vec2& ni = sys.normal[i];
        for (std::size_t j = 0; j < n; ++j) {
            double u, v;
            unit_vortex_velocity(cp.x, cp.y, sys.vortex[j].x, sys.vortex[j].y, u, v);
            double w = u * ni.x + v * ni.y;
            if (sys.ground_effect) {
                // Opposite-sign mirror vortex below y = 0.
                double ui, vi;
                unit_vortex_velocity(cp.x, cp.y, sys.vortex[j].x, -sys.vortex[j].y, ui, vi);
                w -= ui * ni.x + vi * ni.y;
            }
            a[i * n + j] = w;
        }
        rhs[i] = -freestream * ni.x;
    }

    std::vector<double> lu = a;
    std::vector<double> sol = rhs;
    if (!lu_solve(lu, sol, n))
        throw Error(ErrorCode::SingularSystem, "pivot below 1e-12 in tangency system");
    sys.gamma = sol;

    double max_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = -rhs[i];
        for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] * sys.gamma[j];
        max_res = std::max(max_res, std::abs(s));
    }
    sys.residual = max_res;
}

double lift_coefficient(const PanelSystem& sys) {
    double total = 0.0;
    for (double g : sys.gamma) total += g;
    return 2.0 * total;
}

double drag_estimate(double cl, const DragPolar& polar) {
    if (!std::isfinite(cl))
        throw Error(ErrorCode::InvalidArgument, "cl must be finite");
    return polar.cd0 + polar.k * cl * cl;
}

AeroLabel label(const AirfoilGeometry& normalized, double aoa_deg, const OracleConfig& config) {
    const auto camber = camber_line(normalized, config.panels);
    PanelSystem sys = build_panels(camber, aoa_deg, config.clearance);
    solve_circulations(sys);
    AeroLabel out;
    out.cl = lift_coefficient(sys);
    out.cd = drag_estimate(out.cl, config.polar);
    out.ratio = out.cl / out.cd;
    return out;
}

} // namespace afdc
