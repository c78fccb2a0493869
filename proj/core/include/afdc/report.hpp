#pragma once

#include <string>
#include <utility>
#include <vector>

#include "afdc/train.hpp"

namespace afdc {

/// Training and validation loss curves on a log-scale y axis, standalone
/// SVG 1.1 with axes, ticks and a legend.
void write_loss_curve_svg(const MetricsHistory& history, const std::string& path);

struct ScatterOptions {
    std::size_t heatmap_bins = 0; // 0 = density-colored scatter, K = KxK heat map
};

/// Prediction-vs-truth scatter with the y = x reference line. Points are
/// colored by the occupancy of their hexagonal bin; heatmap_bins switches to
/// a square binned density map of the same data.
void write_scatter_svg(const std::vector<std::pair<double, double>>& truth_pred,
                       const std::string& path, const ScatterOptions& options = {});

/// Index-ordered truth (orange) and prediction (blue) series.
void write_overlay_svg(const std::vector<std::pair<double, double>>& truth_pred,
                       const std::string& path);

/// CSV schema: index,truth,prediction with 17-significant-digit reals.
void write_pairs_csv(const std::vector<std::pair<double, double>>& truth_pred,
                     const std::string& path);

} // namespace afdc
