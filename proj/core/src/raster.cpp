#include "afdc/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace afdc {

namespace {

bool on_segment(double px, double py, const Vec2& a, const Vec2& b) {
    const double cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
    if (cross != 0.0) return false;
    return px >= std::min(a.x, b.x) && px <= std::max(a.x, b.x) &&
           py >= std::min(a.y, b.y) && py <= std::max(a.y, b.y);
}

// Even-odd rule; boundary points count as inside.
bool point_in_polygon(double px, double py, const std::vector<Vec2>& poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[j];
        const Vec2& b = poly[i];
        if (a.x == b.x && a.y == b.y) continue; // degenerate edge
        if (on_segment(px, py, a, b)) return true;
        if ((a.y > py) != (b.y > py)) {
            const double x_int = a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y);
            if (px < x_int) inside = !inside;
        }
    }
    return inside;
}

} // namespace

void GridSpec::validate() const {
    if (width < 8 || height < 8)
        throw Error(ErrorCode::InvalidArgument, "grid must be at least 8x8 pixels");
    if (!(x1 > x0) || !(y1 > y0))
        throw Error(ErrorCode::InvalidArgument, "world window is empty");
}

BinaryImage rasterize(const PosedSection& section, const GridSpec& grid, bool draw_ground) {
    if (grid.width == 0 || grid.height == 0 || !(grid.x1 > grid.x0) || !(grid.y1 > grid.y0))
        throw Error(ErrorCode::InvalidArgument, "invalid grid");

    const auto& poly = section.polygon;
    if (!poly.empty()) {
        double min_x = poly[0].x, max_x = poly[0].x, min_y = poly[0].y, max_y = poly[0].y;
        for (const auto& p : poly) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
        if (max_x < grid.x0 || min_x > grid.x1 || max_y < grid.y0 || min_y > grid.y1)
            throw Error(ErrorCode::PolygonOutOfWindow,
                        "section bounding box does not intersect the world window");
    }

    BinaryImage img;
    img.width = grid.width;
    img.height = grid.height;
    img.pixels.assign(grid.width * grid.height, 0);
    for (std::size_t r = 0; r < grid.height; ++r) {
        const double cy = grid.center_y(r);
        const bool ground_row = draw_ground && cy <= 0.0;
        for (std::size_t c = 0; c < grid.width; ++c) {
            if (ground_row || (!poly.empty() && point_in_polygon(grid.center_x(c), cy, poly)))
                img.at(r, c) = 1;
        }
    }
    return img;
}

namespace {

template <bool Dilate>
BinaryImage morph3x3(const BinaryImage& img) {
    BinaryImage out;
    out.width = img.width;
    out.height = img.height;
    out.pixels.assign(img.pixels.size(), 0);
    const long w = static_cast<long>(img.width);
    const long h = static_cast<long>(img.height);
    for (long r = 0; r < h; ++r) {
        for (long c = 0; c < w; ++c) {
            std::uint8_t acc = Dilate ? 0 : 1;
            for (long dr = -1; dr <= 1; ++dr) {
                const long rr = std::clamp(r + dr, 0L, h - 1);
                for (long dc = -1; dc <= 1; ++dc) {
                    const long cc = std::clamp(c + dc, 0L, w - 1);
                    const std::uint8_t v = img.pixels[static_cast<std::size_t>(rr * w + cc)];
                    if (Dilate)
                        acc |= v;
                    else
                        acc &= v;
                }
            }
            out.pixels[static_cast<std::size_t>(r * w + c)] = acc;
        }
    }
    return out;
}

} // namespace

BinaryImage dilate3x3(const BinaryImage& img) { return morph3x3<true>(img); }
BinaryImage erode3x3(const BinaryImage& img) { return morph3x3<false>(img); }
BinaryImage close3x3(const BinaryImage& img) { return erode3x3(dilate3x3(img)); }

Tensor to_tensor(const BinaryImage& img) {
    Tensor t({1, img.height, img.width});
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        t[i] = img.pixels[i] ? 1.0 : 0.0;
    return t;
}

void write_pgm(const BinaryImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open " + path + " for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<std::uint8_t> bytes(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        bytes[i] = img.pixels[i] ? 255 : 0;
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace afdc
