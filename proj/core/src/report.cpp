#include "afdc/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "afdc/error.hpp"

namespace afdc {

namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 560.0;
constexpr double kLeft = 80.0, kRight = 30.0, kTop = 40.0, kBottom = 60.0;

std::string fmt(double v) {
    std::ostringstream oss;
    oss.precision(6);
    oss << v;
    return oss.str();
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

class SvgDoc {
public:
    SvgDoc() {
        body_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
              << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
              << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
              << "\">\n<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
              << "\" fill=\"white\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0, const std::string& dash = "") {
        body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
              << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
              << fmt(width) << "\"";
        if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
        body_ << "/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                  double width = 1.5) {
        body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
              << fmt(width) << "\" points=\"";
        for (const auto& [x, y] : pts) body_ << fmt(x) << "," << fmt(y) << " ";
        body_ << "\"/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& fill) {
        body_ << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy) << "\" r=\"" << fmt(r)
              << "\" fill=\"" << fill << "\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill) {
        body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
              << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\"/>\n";
    }

    void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill) {
        body_ << "<polygon fill=\"" << fill << "\" points=\"";
        for (const auto& [x, y] : pts) body_ << fmt(x) << "," << fmt(y) << " ";
        body_ << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, double size = 14.0,
              const std::string& anchor = "start", double rotate_deg = 0.0) {
        body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << fmt(size)
              << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\"";
        if (rotate_deg != 0.0)
            body_ << " transform=\"rotate(" << fmt(rotate_deg) << " " << fmt(x) << " " << fmt(y)
                  << ")\"";
        body_ << ">" << xml_escape(s) << "</text>\n";
    }

    void save(const std::string& path) {
        body_ << "</svg>\n";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open " + path + " for writing");
        out << body_.str();
    }

private:
    std::ostringstream body_;
};

struct Range {
    double lo = 0.0, hi = 1.0;
    double map(double v, double px_lo, double px_hi) const {
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

Range padded_range(double lo, double hi) {
    if (hi <= lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

std::string density_color(double t) {
    // steel blue -> crimson
    const int r = static_cast<int>(std::lround(70.0 + t * (220.0 - 70.0)));
    const int g = static_cast<int>(std::lround(130.0 + t * (20.0 - 130.0)));
    const int b = static_cast<int>(std::lround(180.0 + t * (60.0 - 180.0)));
    std::ostringstream oss;
    oss << "rgb(" << r << "," << g << "," << b << ")";
    return oss.str();
}

std::string tick_label(double v) {
    std::ostringstream oss;
    oss.precision(4);
    oss << v;
    return oss.str();
}

void draw_linear_axes(SvgDoc& svg, const Range& xr, const Range& yr, const std::string& x_label,
                      const std::string& y_label) {
    svg.line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "black");
    svg.line(kLeft, kTop, kLeft, kHeight - kBottom, "black");
    for (int i = 0; i <= 5; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / 5.0;
        const double px = xr.map(fx, kLeft, kWidth - kRight);
        svg.line(px, kHeight - kBottom, px, kHeight - kBottom + 6, "black");
        svg.text(px, kHeight - kBottom + 22, tick_label(fx), 12, "middle");
        const double fy = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        const double py = yr.map(fy, kHeight - kBottom, kTop);
        svg.line(kLeft - 6, py, kLeft, py, "black");
        svg.text(kLeft - 10, py + 4, tick_label(fy), 12, "end");
    }
    svg.text((kLeft + kWidth - kRight) / 2, kHeight - 16, x_label, 14, "middle");
    svg.text(22, (kTop + kHeight - kBottom) / 2, y_label, 14, "middle", -90);
}

} // namespace

void write_loss_curve_svg(const MetricsHistory& history, const std::string& path) {
    if (history.empty())
        throw Error(ErrorCode::InvalidArgument, "empty metrics history");

    double min_v = history[0].train_mse, max_v = min_v;
    for (const auto& m : history) {
        for (double v : {m.train_mse, m.valid_mse}) {
            if (v > 0.0) min_v = std::min(min_v, v);
            max_v = std::max(max_v, v);
        }
    }
    if (!(min_v > 0.0)) min_v = 1e-12;
    if (max_v <= min_v) max_v = min_v * 10.0;

    const double log_lo = std::floor(std::log10(min_v));
    const double log_hi = std::ceil(std::log10(max_v));
    Range yr{log_lo, std::max(log_hi, log_lo + 1.0)};
    Range xr{1.0, static_cast<double>(std::max<std::size_t>(history.size(), 2))};

    SvgDoc svg;
    svg.line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "black");
    svg.line(kLeft, kTop, kLeft, kHeight - kBottom, "black");

    for (double d = log_lo; d <= yr.hi + 0.5; d += 1.0) {
        const double py = yr.map(d, kHeight - kBottom, kTop);
        if (py < kTop - 1 || py > kHeight - kBottom + 1) continue;
        svg.line(kLeft - 6, py, kLeft, py, "black");
        svg.line(kLeft, py, kWidth - kRight, py, "#dddddd", 0.5);
        std::ostringstream lab;
        lab << "1e" << static_cast<long>(d);
        svg.text(kLeft - 10, py + 4, lab.str(), 12, "end");
    }
    const std::size_t x_ticks = std::min<std::size_t>(history.size(), 10);
    for (std::size_t i = 0; i < x_ticks; ++i) {
        const double ep = 1.0 + (xr.hi - 1.0) * static_cast<double>(i) / std::max<std::size_t>(x_ticks - 1, 1);
        const double px = xr.map(ep, kLeft, kWidth - kRight);
        svg.line(px, kHeight - kBottom, px, kHeight - kBottom + 6, "black");
        svg.text(px, kHeight - kBottom + 22, tick_label(std::round(ep)), 12, "middle");
    }

    auto curve = [&](auto value_of) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& m : history) {
            const double v = std::max(value_of(m), min_v * 1e-3);
            pts.emplace_back(xr.map(static_cast<double>(m.epoch), kLeft, kWidth - kRight),
                             yr.map(std::log10(v), kHeight - kBottom, kTop));
        }
        return pts;
    };
    svg.polyline(curve([](const EpochMetrics& m) { return m.train_mse; }), "#1f77b4", 1.8);
    svg.polyline(curve([](const EpochMetrics& m) { return m.valid_mse; }), "#ff7f0e", 1.8);

    svg.text((kLeft + kWidth - kRight) / 2, kHeight - 16, "epoch", 14, "middle");
    svg.text(22, (kTop + kHeight - kBottom) / 2, "mse (log scale)", 14, "middle", -90);
    svg.line(kWidth - 220, kTop + 10, kWidth - 180, kTop + 10, "#1f77b4", 2.0);
    svg.text(kWidth - 172, kTop + 14, "train", 13);
    svg.line(kWidth - 220, kTop + 30, kWidth - 180, kTop + 30, "#ff7f0e", 2.0);
    svg.text(kWidth - 172, kTop + 34, "valid", 13);
    svg.save(path);
}

void write_scatter_svg(const std::vector<std::pair<double, double>>& truth_pred,
                       const std::string& path, const ScatterOptions& options) {
    if (truth_pred.empty())
        throw Error(ErrorCode::InvalidArgument, "no points to plot");

    double lo = truth_pred[0].first, hi = lo;
    for (const auto& [t, p] : truth_pred) {
        lo = std::min({lo, t, p});
        hi = std::max({hi, t, p});
    }
    Range r = padded_range(lo, hi);

    SvgDoc svg;
    auto px = [&](double v) { return r.map(v, kLeft, kWidth - kRight); };
    auto py = [&](double v) { return r.map(v, kHeight - kBottom, kTop); };

    if (options.heatmap_bins > 0) {
        const std::size_t k = options.heatmap_bins;
        std::vector<std::size_t> counts(k * k, 0);
        std::size_t max_count = 0;
        for (const auto& [t, p] : truth_pred) {
            auto bin = [&](double v) {
                auto b = static_cast<std::size_t>((v - r.lo) / (r.hi - r.lo) * static_cast<double>(k));
                return std::min(b, k - 1);
            };
            auto& c = counts[bin(p) * k + bin(t)]; // x = prediction, y = truth
            max_count = std::max(max_count, ++c);
        }
        for (std::size_t iy = 0; iy < k; ++iy) {
            for (std::size_t ix = 0; ix < k; ++ix) {
                const std::size_t c = counts[iy * k + ix];
                if (c == 0) continue;
                const double x0 = r.lo + (r.hi - r.lo) * static_cast<double>(ix) / static_cast<double>(k);
                const double x1 = r.lo + (r.hi - r.lo) * static_cast<double>(ix + 1) / static_cast<double>(k);
                const double y0 = r.lo + (r.hi - r.lo) * static_cast<double>(iy) / static_cast<double>(k);
                const double y1 = r.lo + (r.hi - r.lo) * static_cast<double>(iy + 1) / static_cast<double>(k);
                const double t = static_cast<double>(c) / static_cast<double>(max_count);
                svg.rect(px(x0), py(y1), px(x1) - px(x0), py(y0) - py(y1), density_color(t));
            }
        }
    } else {
        // Hexagonal binning: each point is colored by the occupancy of its bin.
        const double hex = (r.hi - r.lo) / 36.0;
        std::map<std::pair<long, long>, std::size_t> counts;
        auto hex_key = [&](double x, double y) {
            const double qf = x / (hex * 1.5);
            const double rf = (y - (static_cast<long>(std::floor(qf)) % 2 == 0 ? 0.0 : hex * 0.5 * std::sqrt(3.0))) /
                              (hex * std::sqrt(3.0));
            return std::make_pair(static_cast<long>(std::floor(qf)), static_cast<long>(std::floor(rf)));
        };
        std::size_t max_count = 0;
        for (const auto& [t, p] : truth_pred)
            max_count = std::max(max_count, ++counts[hex_key(p, t)]);
        for (const auto& [t, p] : truth_pred) {
            const double density =
                static_cast<double>(counts[hex_key(p, t)]) / static_cast<double>(max_count);
            svg.circle(px(p), py(t), 2.6, density_color(density));
        }
    }

    svg.line(px(r.lo), py(r.lo), px(r.hi), py(r.hi), "#555555", 1.2, "6,4"); // y = x
    draw_linear_axes(svg, r, r, "prediction", "ground truth");
    svg.save(path);
}

void write_overlay_svg(const std::vector<std::pair<double, double>>& truth_pred,
                       const std::string& path) {
    if (truth_pred.empty())
        throw Error(ErrorCode::InvalidArgument, "no points to plot");

    double lo = truth_pred[0].first, hi = lo;
    for (const auto& [t, p] : truth_pred) {
        lo = std::min({lo, t, p});
        hi = std::max({hi, t, p});
    }
    Range yr = padded_range(lo, hi);
    Range xr{0.0, static_cast<double>(std::max<std::size_t>(truth_pred.size() - 1, 1))};

    SvgDoc svg;
    std::vector<std::pair<double, double>> truth_pts, pred_pts;
    for (std::size_t i = 0; i < truth_pred.size(); ++i) {
        const double x = xr.map(static_cast<double>(i), kLeft, kWidth - kRight);
        truth_pts.emplace_back(x, yr.map(truth_pred[i].first, kHeight - kBottom, kTop));
        pred_pts.emplace_back(x, yr.map(truth_pred[i].second, kHeight - kBottom, kTop));
    }
    svg.polyline(truth_pts, "#ff7f0e", 1.6);
    svg.polyline(pred_pts, "#1f77b4", 1.2);
    draw_linear_axes(svg, xr, yr, "sample index", "target value");
    svg.line(kWidth - 240, kTop + 10, kWidth - 200, kTop + 10, "#ff7f0e", 2.0);
    svg.text(kWidth - 192, kTop + 14, "ground truth", 13);
    svg.line(kWidth - 240, kTop + 30, kWidth - 200, kTop + 30, "#1f77b4", 2.0);
    svg.text(kWidth - 192, kTop + 34, "prediction", 13);
    svg.save(path);
}

void write_pairs_csv(const std::vector<std::pair<double, double>>& truth_pred,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open " + path + " for writing");
    out << "index,truth,prediction\n";
    for (std::size_t i = 0; i < truth_pred.size(); ++i)
        out << i << "," << format_g17(truth_pred[i].first) << ","
            << format_g17(truth_pred[i].second) << "\n";
}

} // namespace afdc
