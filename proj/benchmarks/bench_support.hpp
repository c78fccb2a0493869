#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "afdc/geometry.hpp"

namespace afdc::bench {

// NACA 4-digit section with camber applied vertically; enough fidelity for
// throughput measurements.
inline AirfoilGeometry naca4(double camber, double camber_pos, double thickness,
                             std::size_t pts_per_surface = 80) {
    const double pi = std::acos(-1.0);
    auto camber_y = [&](double x) {
        if (camber == 0.0) return 0.0;
        if (x < camber_pos)
            return camber / (camber_pos * camber_pos) * (2.0 * camber_pos * x - x * x);
        const double q = 1.0 - camber_pos;
        return camber / (q * q) * ((1.0 - 2.0 * camber_pos) + 2.0 * camber_pos * x - x * x);
    };
    auto thick_y = [&](double x) {
        return 5.0 * thickness *
               (0.2969 * std::sqrt(x) - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x -
                0.1036 * x * x * x * x);
    };

    AirfoilGeometry g;
    g.name = "naca-bench";
    for (std::size_t i = 0; i <= pts_per_surface; ++i) {
        const double x = 0.5 * (1.0 + std::cos(pi * static_cast<double>(i) /
                                               static_cast<double>(pts_per_surface)));
        g.points.push_back({x, camber_y(x) + thick_y(x)});
    }
    for (std::size_t i = 1; i <= pts_per_surface; ++i) {
        const double x = 0.5 * (1.0 - std::cos(pi * static_cast<double>(i) /
                                               static_cast<double>(pts_per_surface)));
        g.points.push_back({x, camber_y(x) - thick_y(x)});
    }
    return normalize(g);
}

} // namespace afdc::bench
