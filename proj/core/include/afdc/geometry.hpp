#pragma once

#include <string>
#include <vector>

#include "afdc/error.hpp"

namespace afdc {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

enum class DatFormat { Selig, Lednicer };

/// Ordered coordinate loop of an airfoil section in chord units.
/// Points follow the Selig convention: upper surface TE -> LE, then lower
/// surface LE -> TE, a single closed traversal.
struct AirfoilGeometry {
    std::string name;
    std::vector<Vec2> points;
};

/// A section rotated to an angle of attack and elevated above the ground
/// plane y = 0. ground_clearance is the height of the lowest polygon point.
struct PosedSection {
    std::vector<Vec2> polygon;
    double aoa_deg = 0.0;
    double ground_clearance = 0.0;
};

/// Classifies UIUC .dat contents. Lednicer files carry a point-count header
/// ("61. 61.") as their second non-blank line; coordinate values never
/// exceed 1 in both columns, so counts > 1 in both identify the format.
DatFormat detect_format(const std::string& text);

AirfoilGeometry parse_selig(const std::string& text);
AirfoilGeometry parse_lednicer(const std::string& text);

/// detect_format + the matching parser.
AirfoilGeometry parse_dat(const std::string& text);

std::string serialize_selig(const AirfoilGeometry& g);
std::string serialize_lednicer(const AirfoilGeometry& g);

/// Translates so min x = 0 and scales uniformly (x and y alike) so the chord
/// becomes exactly 1.
AirfoilGeometry normalize(const AirfoilGeometry& g);

/// Rotates by -aoa_deg about the quarter-chord point (0.25, 0) so that a
/// positive angle of attack pitches the leading edge up, then translates
/// vertically so the lowest polygon point sits at y = ground_clearance.
PosedSection pose(const AirfoilGeometry& g, double aoa_deg, double ground_clearance);

/// Mean line of the section: midpoints of the upper and lower surfaces
/// sampled at n+1 cosine-spaced stations over [0, 1]. Requires a normalized
/// geometry whose leading edge can be located on the point loop.
std::vector<Vec2> camber_line(const AirfoilGeometry& g, std::size_t n_panels);

} // namespace afdc
