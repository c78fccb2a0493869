#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "afdc/aero.hpp"
#include "afdc/geometry.hpp"
#include "afdc/raster.hpp"

namespace afdc {

enum class SplitKind : std::uint8_t { Train = 0, Valid = 1, Test = 2 };
enum class TargetKind : std::uint8_t { ClCd = 0, Cl = 1 };

const char* split_name(SplitKind s);
const char* target_name(TargetKind t);

struct Sample {
    std::string airfoil_id;
    double aoa_deg = 0.0;
    double clearance = 0.0;
    BinaryImage image;
    AeroLabel label;
    SplitKind split = SplitKind::Train;
};

struct LabelStats {
    double mean = 0.0;
    double std_dev = 1.0;
};

struct Dataset {
    GridSpec grid;
    TargetKind target = TargetKind::ClCd;
    std::vector<Sample> samples;
    LabelStats stats; // of the target over the train split

    double target_value(const Sample& s) const {
        return target == TargetKind::ClCd ? s.label.ratio : s.label.cl;
    }
    std::vector<std::size_t> split_indices(SplitKind split) const;
};

struct SkipEntry {
    std::string airfoil_id;
    double aoa_deg = 0.0;
    double clearance = 0.0;
    std::string reason;
};

struct NamedAirfoil {
    std::string id;
    AirfoilGeometry geometry; // normalized
};

/// Inclusive arithmetic sweep; count = floor((end - start) / step) + 1.
std::vector<double> sweep_angles(double start = 0.0, double end = 20.0, double step = 0.25);

struct BuildOptions {
    GridSpec grid;
    std::size_t panels = 200;
    DragPolar polar;
    TargetKind target = TargetKind::ClCd;
    bool draw_ground = true;
    bool apply_closing = true; // one dilate-then-erode pass per image
};

/// One sample per (airfoil, angle, clearance) triple, rasterized and labeled
/// in parallel but assembled in sorted (id, angle, clearance) order. Failed
/// samples go to the skip report instead of aborting the build; duplicate
/// airfoil ids get a "#k" suffix.
Dataset build_dataset(const std::vector<NamedAirfoil>& airfoils,
                      const std::vector<double>& angles,
                      const std::vector<double>& clearances,
                      const BuildOptions& options,
                      std::vector<SkipEntry>* skip_report = nullptr);

/// Assigns whole airfoils to train/valid/test with a seeded shuffle
/// (never splitting one airfoil's images across splits), then computes the
/// train-split label statistics.
void split_dataset(Dataset& dataset, double train_fraction, double valid_fraction,
                   double test_fraction, std::uint64_t seed);

/// Train-split mean and (population) standard deviation of the target.
LabelStats compute_label_stats(const Dataset& dataset);

/// Directory layout: manifest.json (grid, target, sample table, label stats,
/// checksums) + images.bin ("AFDS" magic, version, count, per-image dims and
/// u8 pixels, little-endian). The manifest records a CRC32 per binary file.
void write_dataset(const Dataset& dataset, const std::string& dir);
Dataset read_dataset(const std::string& dir);

} // namespace afdc
