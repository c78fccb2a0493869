#include "afdc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <zlib.h>

#include <nlohmann/json.hpp>

#include "afdc/parallel.hpp"

namespace afdc {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr char kImagesMagic[4] = {'A', 'F', 'D', 'S'};
constexpr std::uint32_t kImagesVersion = 1;

void append_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t read_u32(const std::string& buf, std::size_t& pos) {
    if (pos + 4 > buf.size()) throw Error(ErrorCode::CorruptFile, "truncated images.bin");
    const auto* b = reinterpret_cast<const unsigned char*>(buf.data() + pos);
    pos += 4;
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t crc32_of(const std::string& bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::CorruptFile, "missing file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Platform-independent Fisher-Yates; std::shuffle is not pinned across
// standard libraries.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i)
        std::swap(items[i - 1], items[rng() % i]);
}

} // namespace

const char* split_name(SplitKind s) {
    switch (s) {
        case SplitKind::Train: return "train";
        case SplitKind::Valid: return "valid";
        case SplitKind::Test: return "test";
    }
    return "?";
}

const char* target_name(TargetKind t) {
    return t == TargetKind::ClCd ? "clcd" : "cl";
}

std::vector<std::size_t> Dataset::split_indices(SplitKind split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].split == split) out.push_back(i);
    return out;
}

std::vector<double> sweep_angles(double start, double end, double step) {
    if (!(step > 0.0)) throw Error(ErrorCode::NonPositiveStep, "step must be positive");
    if (end < start) throw Error(ErrorCode::InvalidArgument, "end must be >= start");
    // The epsilon keeps an end point that lands on the grid despite rounding.
    const auto count = static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
    std::vector<double> angles(count);
    for (std::size_t i = 0; i < count; ++i)
        angles[i] = start + static_cast<double>(i) * step;
    return angles;
}

Dataset build_dataset(const std::vector<NamedAirfoil>& airfoils,
                      const std::vector<double>& angles,
                      const std::vector<double>& clearances,
                      const BuildOptions& options,
                      std::vector<SkipEntry>* skip_report) {
    if (airfoils.empty()) throw Error(ErrorCode::InvalidArgument, "no airfoils given");
    if (angles.empty()) throw Error(ErrorCode::InvalidArgument, "no angles given");
    for (double c : clearances)
        if (!(c > 0.0))
            throw Error(ErrorCode::NonPositiveClearance, "clearances must be positive");
    if (clearances.empty()) throw Error(ErrorCode::InvalidArgument, "no clearances given");
    options.grid.validate();

    // Disambiguate duplicate ids with a #k suffix, then order jobs by
    // (id, angle, clearance) so the output is stable under any worker count.
    std::vector<NamedAirfoil> named = airfoils;
    std::map<std::string, std::size_t> seen;
    for (auto& a : named) {
        auto [it, inserted] = seen.emplace(a.id, 1);
        if (!inserted) {
            it->second += 1;
            a.id += "#" + std::to_string(it->second);
        }
    }
    std::sort(named.begin(), named.end(),
              [](const NamedAirfoil& a, const NamedAirfoil& b) { return a.id < b.id; });

    struct Job {
        const NamedAirfoil* airfoil;
        double aoa;
        double clearance;
    };
    std::vector<Job> jobs;
    jobs.reserve(named.size() * angles.size() * clearances.size());
    for (const auto& a : named)
        for (double aoa : angles)
            for (double cl : clearances) jobs.push_back({&a, aoa, cl});

    std::vector<std::optional<Sample>> results(jobs.size());
    std::vector<std::string> failures(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const Job& job = jobs[i];
            try {
                Sample s;
                s.airfoil_id = job.airfoil->id;
                s.aoa_deg = job.aoa;
                s.clearance = job.clearance;
                PosedSection sec = pose(job.airfoil->geometry, job.aoa, job.clearance);
                BinaryImage img = rasterize(sec, options.grid, options.draw_ground);
                s.image = options.apply_closing ? close3x3(img) : std::move(img);
                OracleConfig oc;
                oc.panels = options.panels;
                oc.clearance = job.clearance;
                oc.polar = options.polar;
                s.label = label(job.airfoil->geometry, job.aoa, oc);
                results[i] = std::move(s);
            } catch (const Error& e) {
                failures[i] = e.what();
            }
        }
    });

    Dataset ds;
    ds.grid = options.grid;
    ds.target = options.target;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (results[i]) {
            ds.samples.push_back(std::move(*results[i]));
        } else if (skip_report) {
            skip_report->push_back(
                {jobs[i].airfoil->id, jobs[i].aoa, jobs[i].clearance, failures[i]});
        }
    }
    if (ds.samples.empty())
        throw Error(ErrorCode::AllSamplesFailed, "every sample failed to build");
    return ds;
}

LabelStats compute_label_stats(const Dataset& dataset) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : dataset.samples)
        if (s.split == SplitKind::Train) {
            sum += dataset.target_value(s);
            ++n;
        }
    if (n == 0) throw Error(ErrorCode::EmptySplit, "train split is empty");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& s : dataset.samples)
        if (s.split == SplitKind::Train) {
            const double d = dataset.target_value(s) - mean;
            ss += d * d;
        }
    const double std_dev = std::sqrt(ss / static_cast<double>(n));
    if (!(std_dev > 0.0))
        throw Error(ErrorCode::DegenerateLabels, "train labels have zero variance");
    return {mean, std_dev};
}

void split_dataset(Dataset& dataset, double train_fraction, double valid_fraction,
                   double test_fraction, std::uint64_t seed) {
    if (std::abs(train_fraction + valid_fraction + test_fraction - 1.0) > 1e-9)
        throw Error(ErrorCode::InvalidArgument, "split fractions must sum to 1");

    std::vector<std::string> ids;
    for (const auto& s : dataset.samples)
        if (ids.empty() || std::find(ids.begin(), ids.end(), s.airfoil_id) == ids.end())
            ids.push_back(s.airfoil_id);
    std::sort(ids.begin(), ids.end());
    if (ids.size() < 3)
        throw Error(ErrorCode::TooFewAirfoils, "need at least 3 airfoils to split");

    seeded_shuffle(ids, seed);
    const auto n = ids.size();
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    const auto n_valid = static_cast<std::size_t>(std::floor(valid_fraction * static_cast<double>(n)));

    std::map<std::string, SplitKind> assignment;
    for (std::size_t i = 0; i < n; ++i) {
        SplitKind kind = i < n_train                ? SplitKind::Train
                         : i < n_train + n_valid    ? SplitKind::Valid
                                                    : SplitKind::Test;
        assignment[ids[i]] = kind;
    }
    for (auto& s : dataset.samples) s.split = assignment.at(s.airfoil_id);
    dataset.stats = compute_label_stats(dataset);
}

void write_dataset(const Dataset& dataset, const std::string& dir) {
    fs::create_directories(dir);

    std::string blob;
    blob.append(kImagesMagic, 4);
    append_u32(blob, kImagesVersion);
    append_u32(blob, static_cast<std::uint32_t>(dataset.samples.size()));
    for (const auto& s : dataset.samples) {
        append_u32(blob, static_cast<std::uint32_t>(s.image.width));
        append_u32(blob, static_cast<std::uint32_t>(s.image.height));
        blob.append(reinterpret_cast<const char*>(s.image.pixels.data()), s.image.pixels.size());
    }

    json manifest;
    manifest["format_version"] = 1;
    manifest["grid"] = {{"width", dataset.grid.width},   {"height", dataset.grid.height},
                        {"x0", dataset.grid.x0},         {"x1", dataset.grid.x1},
                        {"y0", dataset.grid.y0},         {"y1", dataset.grid.y1}};
    manifest["target"] = target_name(dataset.target);
    manifest["label_stats"] = {{"mean", dataset.stats.mean}, {"std", dataset.stats.std_dev}};
    manifest["checksums"] = {{"images.bin", crc32_of(blob)}};
    json samples = json::array();
    for (const auto& s : dataset.samples) {
        samples.push_back({{"id", s.airfoil_id},
                           {"aoa_deg", s.aoa_deg},
                           {"clearance", s.clearance},
                           {"cl", s.label.cl},
                           {"cd", s.label.cd},
                           {"ratio", s.label.ratio},
                           {"split", split_name(s.split)}});
    }
    manifest["samples"] = std::move(samples);

    {
        std::ofstream out(fs::path(dir) / "images.bin", std::ios::binary);
        if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write images.bin in " + dir);
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    }
    {
        std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
        if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write manifest.json in " + dir);
        out << manifest.dump(2) << "\n";
    }
}

Dataset read_dataset(const std::string& dir) {
    const fs::path base(dir);
    json manifest;
    try {
        manifest = json::parse(read_file(base / "manifest.json"));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptFile, std::string("manifest.json: ") + e.what());
    }

    Dataset ds;
    try {
        if (manifest.at("format_version").get<int>() != 1)
            throw Error(ErrorCode::VersionMismatch, "unsupported dataset format version");
        const auto& grid = manifest.at("grid");
        ds.grid.width = grid.at("width").get<std::size_t>();
        ds.grid.height = grid.at("height").get<std::size_t>();
        ds.grid.x0 = grid.at("x0").get<double>();
        ds.grid.x1 = grid.at("x1").get<double>();
        ds.grid.y0 = grid.at("y0").get<double>();
        ds.grid.y1 = grid.at("y1").get<double>();
        const std::string target = manifest.at("target").get<std::string>();
        if (target == "clcd")
            ds.target = TargetKind::ClCd;
        else if (target == "cl")
            ds.target = TargetKind::Cl;
        else
            throw Error(ErrorCode::CorruptFile, "unknown target kind " + target);
        ds.stats.mean = manifest.at("label_stats").at("mean").get<double>();
        ds.stats.std_dev = manifest.at("label_stats").at("std").get<double>();

        const std::string blob = read_file(base / "images.bin");
        const auto expected_crc = manifest.at("checksums").at("images.bin").get<std::uint32_t>();
        if (crc32_of(blob) != expected_crc)
            throw Error(ErrorCode::ChecksumMismatch, "images.bin checksum mismatch");

        std::size_t pos = 0;
        if (blob.size() < 4 || blob.compare(0, 4, kImagesMagic, 4) != 0)
            throw Error(ErrorCode::CorruptFile, "bad images.bin magic");
        pos = 4;
        if (read_u32(blob, pos) != kImagesVersion)
            throw Error(ErrorCode::VersionMismatch, "unsupported images.bin version");
        const std::uint32_t count = read_u32(blob, pos);
        const auto& sample_table = manifest.at("samples");
        if (sample_table.size() != count)
            throw Error(ErrorCode::CorruptFile, "manifest sample count does not match images.bin");

        ds.samples.reserve(count);
        for (const auto& row : sample_table) {
            Sample s;
            s.airfoil_id = row.at("id").get<std::string>();
            s.aoa_deg = row.at("aoa_deg").get<double>();
            s.clearance = row.at("clearance").get<double>();
            s.label.cl = row.at("cl").get<double>();
            s.label.cd = row.at("cd").get<double>();
            s.label.ratio = row.at("ratio").get<double>();
            const std::string split = row.at("split").get<std::string>();
            if (split == "train")
                s.split = SplitKind::Train;
            else if (split == "valid")
                s.split = SplitKind::Valid;
            else if (split == "test")
                s.split = SplitKind::Test;
            else
                throw Error(ErrorCode::CorruptFile, "unknown split " + split);

            s.image.width = read_u32(blob, pos);
            s.image.height = read_u32(blob, pos);
            if (s.image.width != ds.grid.width || s.image.height != ds.grid.height)
                throw Error(ErrorCode::CorruptFile, "image dims do not match the dataset grid");
            const std::size_t bytes = s.image.width * s.image.height;
            if (pos + bytes > blob.size())
                throw Error(ErrorCode::CorruptFile, "truncated images.bin");
            s.image.pixels.assign(blob.begin() + static_cast<std::ptrdiff_t>(pos),
                                  blob.begin() + static_cast<std::ptrdiff_t>(pos + bytes));
            for (auto px : s.image.pixels)
                if (px > 1) throw Error(ErrorCode::CorruptFile, "pixel value outside {0,1}");
            pos += bytes;
            ds.samples.push_back(std::move(s));
        }
        if (pos != blob.size())
            throw Error(ErrorCode::CorruptFile, "trailing bytes in images.bin");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptFile, std::string("manifest.json: ") + e.what());
    }
    return ds;
}

} // namespace afdc
