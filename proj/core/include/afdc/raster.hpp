#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afdc/geometry.hpp"
#include "afdc/tensor.hpp"

namespace afdc {

/// Pixel grid plus the world window it covers, in chord units.
struct GridSpec {
    std::size_t width = 128;
    std::size_t height = 128;
    double x0 = -0.5;
    double x1 = 1.5;
    double y0 = 0.0;
    double y1 = 2.0;

    /// Enforces the dataset-facing contract (>= 8 px per side, non-empty window).
    void validate() const;

    double pixel_width() const { return (x1 - x0) / static_cast<double>(width); }
    double pixel_height() const { return (y1 - y0) / static_cast<double>(height); }
    // Pixel centers; row 0 is the top of the frame (largest y).
    double center_x(std::size_t col) const { return x0 + (static_cast<double>(col) + 0.5) * pixel_width(); }
    double center_y(std::size_t row) const { return y1 - (static_cast<double>(row) + 0.5) * pixel_height(); }
};

/// Row-major 0/1 raster; row 0 is the top of the frame.
struct BinaryImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
    std::uint8_t& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
};

/// Fills pixels whose centers lie inside the section polygon (even-odd rule;
/// points exactly on an edge count as inside) and, when draw_ground is set,
/// pixels whose centers lie at or below the ground plane y = 0. An empty
/// polygon is allowed and produces a ground-only image.
BinaryImage rasterize(const PosedSection& section, const GridSpec& grid, bool draw_ground);

/// 3x3 morphology with border-clamped neighborhoods.
BinaryImage dilate3x3(const BinaryImage& img);
BinaryImage erode3x3(const BinaryImage& img);
/// One closing pass (dilate then erode); heals single-pixel gaps on thin
/// trailing edges.
BinaryImage close3x3(const BinaryImage& img);

/// Copies into a (1, height, width) tensor of 0.0/1.0 values.
Tensor to_tensor(const BinaryImage& img);

/// Binary PGM (P5, maxval 255); 1-pixels map to 255.
void write_pgm(const BinaryImage& img, const std::string& path);

} // namespace afdc
