#include "afdc/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace afdc {

namespace {

struct Line {
    std::size_t number; // 1-based in the original text
    std::string text;
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<Line> non_blank_lines(const std::string& text) {
    std::vector<Line> out;
    std::size_t lineno = 0;
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string t = trim(raw);
        if (!t.empty()) out.push_back({lineno, std::move(t)});
    }
    return out;
}

bool parse_double(const std::string& token, double& out) {
    const char* begin = token.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + token.size() && end != begin && std::isfinite(out);
}

std::vector<std::string> split_tokens(const std::string& s) {
    std::vector<std::string> toks;
    std::istringstream in(s);
    std::string t;
    while (in >> t) toks.push_back(std::move(t));
    return toks;
}

// Parses a "x y" coordinate line; throws MalformedLine otherwise.
Vec2 parse_point_line(const Line& line) {
    auto toks = split_tokens(line.text);
    Vec2 p;
    if (toks.size() != 2 || !parse_double(toks[0], p.x) || !parse_double(toks[1], p.y))
        throw Error(ErrorCode::MalformedLine, line.number, "expected two numbers, got \"" + line.text + "\"");
    return p;
}

// True if the line holds exactly two numbers, both > 1 (a Lednicer count header).
bool is_count_header(const std::string& text) {
    auto toks = split_tokens(text);
    if (toks.size() != 2) return false;
    double a, b;
    if (!parse_double(toks[0], a) || !parse_double(toks[1], b)) return false;
    return a > 1.0 && b > 1.0;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Index of the leading-edge point (minimum x; first on ties).
std::size_t leading_edge_index(const std::vector<Vec2>& pts) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].x < pts[best].x) best = i;
    return best;
}

struct SurfacePair {
    std::vector<Vec2> upper; // LE -> TE
    std::vector<Vec2> lower; // LE -> TE
};

SurfacePair split_surfaces(const AirfoilGeometry& g) {
    const auto& pts = g.points;
    std::size_t le = leading_edge_index(pts);
    if (le == 0 || le + 1 >= pts.size())
        throw Error(ErrorCode::SurfaceSplitFailure,
                    "leading edge not locatable on the point loop of \"" + g.name + "\"");
    SurfacePair s;
    s.upper.assign(pts.rbegin() + (pts.size() - 1 - le), pts.rend()); // reverse of [0..le]
    s.lower.assign(pts.begin() + le, pts.end());
    return s;
}

// Piecewise-linear surface height; points are sorted by x before evaluation.
class SurfaceInterp {
public:
    explicit SurfaceInterp(std::vector<Vec2> pts) : pts_(std::move(pts)) {
        std::stable_sort(pts_.begin(), pts_.end(),
                         [](const Vec2& a, const Vec2& b) { return a.x < b.x; });
    }

    double operator()(double x) const {
        if (x <= pts_.front().x) return pts_.front().y;
        if (x >= pts_.back().x) return pts_.back().y;
        auto it = std::upper_bound(pts_.begin(), pts_.end(), x,
                                   [](double v, const Vec2& p) { return v < p.x; });
        const Vec2& hi = *it;
        const Vec2& lo = *(it - 1);
        if (hi.x == lo.x) return lo.y;
        double t = (x - lo.x) / (hi.x - lo.x);
        return lo.y + t * (hi.y - lo.y);
    }

private:
    std::vector<Vec2> pts_;
};

} // namespace

DatFormat detect_format(const std::string& text) {
    auto lines = non_blank_lines(text);
    if (lines.empty()) throw Error(ErrorCode::EmptyFile, "no content");
    if (lines.size() >= 2 && is_count_header(lines[1].text)) return DatFormat::Lednicer;
    return DatFormat::Selig;
}

AirfoilGeometry parse_selig(const std::string& text) {
    auto lines = non_blank_lines(text);
    if (lines.empty()) throw Error(ErrorCode::EmptyFile, "no content");
    AirfoilGeometry g;
    g.name = lines[0].text;
    for (std::size_t i = 1; i < lines.size(); ++i)
        g.points.push_back(parse_point_line(lines[i]));
    if (g.points.size() < 3)
        throw Error(ErrorCode::TooFewPoints,
                    "need at least 3 points, got " + std::to_string(g.points.size()));
    return g;
}

AirfoilGeometry parse_lednicer(const std::string& text) {
    auto lines = non_blank_lines(text);
    if (lines.empty()) throw Error(ErrorCode::EmptyFile, "no content");
    if (lines.size() < 2 || !is_count_header(lines[1].text))
        throw Error(ErrorCode::MalformedLine, lines.size() < 2 ? lines[0].number : lines[1].number,
                    "missing Lednicer point-count header");

    auto counts = split_tokens(lines[1].text);
    double nu_d, nl_d;
    parse_double(counts[0], nu_d);
    parse_double(counts[1], nl_d);
    const std::size_t nu = static_cast<std::size_t>(std::llround(nu_d));
    const std::size_t nl = static_cast<std::size_t>(std::llround(nl_d));

    std::vector<Vec2> pts;
    for (std::size_t i = 2; i < lines.size(); ++i)
        pts.push_back(parse_point_line(lines[i]));
    if (pts.size() != nu + nl)
        throw Error(ErrorCode::CountMismatch,
                    "header promises " + std::to_string(nu) + "+" + std::to_string(nl) +
                        " points, file holds " + std::to_string(pts.size()));

    // Upper LE->TE and lower LE->TE blocks; rebuild the Selig loop and drop
    // the duplicated leading-edge point where the blocks meet.
    AirfoilGeometry g;
    g.name = lines[0].text;
    g.points.reserve(pts.size());
    for (std::size_t i = nu; i-- > 0;) g.points.push_back(pts[i]);
    std::size_t lower_start = 0;
    if (nl > 0 && pts[nu].x == g.points.back().x && pts[nu].y == g.points.back().y)
        lower_start = 1;
    for (std::size_t i = lower_start; i < nl; ++i) g.points.push_back(pts[nu + i]);

    if (g.points.size() < 3)
        throw Error(ErrorCode::TooFewPoints,
                    "need at least 3 points, got " + std::to_string(g.points.size()));
    return g;
}

AirfoilGeometry parse_dat(const std::string& text) {
    return detect_format(text) == DatFormat::Lednicer ? parse_lednicer(text) : parse_selig(text);
}

std::string serialize_selig(const AirfoilGeometry& g) {
    std::string out = g.name + "\n";
    for (const auto& p : g.points)
        out += format_double(p.x) + " " + format_double(p.y) + "\n";
    return out;
}

std::string serialize_lednicer(const AirfoilGeometry& g) {
    SurfacePair s = split_surfaces(g);
    std::string out = g.name + "\n";
    out += format_double(static_cast<double>(s.upper.size())) + " " +
           format_double(static_cast<double>(s.lower.size())) + "\n\n";
    for (const auto& p : s.upper) out += format_double(p.x) + " " + format_double(p.y) + "\n";
    out += "\n";
    for (const auto& p : s.lower) out += format_double(p.x) + " " + format_double(p.y) + "\n";
    return out;
}

AirfoilGeometry normalize(const AirfoilGeometry& g) {
    if (g.points.size() < 3)
        throw Error(ErrorCode::TooFewPoints, "normalize needs at least 3 points");
    double min_x = g.points[0].x, max_x = g.points[0].x;
    for (const auto& p : g.points) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
    }
    const double chord = max_x - min_x;
    if (!(chord > 0.0))
        throw Error(ErrorCode::DegenerateChord, "max x equals min x");
    AirfoilGeometry out;
    out.name = g.name;
    out.points.reserve(g.points.size());
    for (const auto& p : g.points)
        out.points.push_back({(p.x - min_x) / chord, p.y / chord});
    return out;
}

PosedSection pose(const AirfoilGeometry& g, double aoa_deg, double ground_clearance) {
    if (!(ground_clearance > 0.0))
        throw Error(ErrorCode::NonPositiveClearance,
                    "ground clearance must be positive, got " + std::to_string(ground_clearance));
    if (!std::isfinite(aoa_deg))
        throw Error(ErrorCode::InvalidArgument, "angle of attack must be finite");
    if (g.points.size() < 3)
        throw Error(ErrorCode::TooFewPoints, "pose needs at least 3 points");

    const double theta = -aoa_deg * std::acos(-1.0) / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double px = 0.25, py = 0.0;

    PosedSection sec;
    sec.aoa_deg = aoa_deg;
    sec.ground_clearance = ground_clearance;
    sec.polygon.reserve(g.points.size());
    double min_y = 0.0;
    for (std::size_t i = 0; i < g.points.size(); ++i) {
        const double dx = g.points[i].x - px;
        const double dy = g.points[i].y - py;
        Vec2 q{px + dx * c - dy * s, py + dx * s + dy * c};
        min_y = (i == 0) ? q.y : std::min(min_y, q.y);
        sec.polygon.push_back(q);
    }
    const double lift = ground_clearance - min_y;
    for (auto& q : sec.polygon) q.y += lift;
    return sec;
}

std::vector<Vec2> camber_line(const AirfoilGeometry& g, std::size_t n_panels) {
    if (n_panels < 10)
        throw Error(ErrorCode::InvalidArgument, "camber_line needs at least 10 panels");
    SurfacePair s = split_surfaces(g);
    if (s.upper.size() < 2 || s.lower.size() < 2)
        throw Error(ErrorCode::SurfaceSplitFailure, "a surface has fewer than 2 points");
    SurfaceInterp upper(std::move(s.upper));
    SurfaceInterp lower(std::move(s.lower));

    const double pi = std::acos(-1.0);
    std::vector<Vec2> nodes;
    nodes.reserve(n_panels + 1);
    for (std::size_t k = 0; k <= n_panels; ++k) {
        const double x = 0.5 * (1.0 - std::cos(pi * static_cast<double>(k) / static_cast<double>(n_panels)));
        nodes.push_back({x, 0.5 * (upper(x) + lower(x))});
    }
    return nodes;
}

} // namespace afdc
