// afdc - airfoil lift/drag CNN surrogate toolkit.
//
// Subcommands: gen (build a labeled image dataset from .dat files),
// train (fit the regression network), eval (test-set reports),
// predict (single-airfoil query). Exit codes: 0 success, 1 runtime
// failure, 2 usage error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "afdc/dataset.hpp"
#include "afdc/model.hpp"
#include "afdc/report.hpp"
#include "afdc/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

// Written before any long-running work so a run can be replayed exactly.
void write_run_manifest(const fs::path& out_dir, const std::string& command, json config,
                        json inputs, json outputs, std::uint64_t seed) {
    json manifest;
    manifest["command"] = command;
    manifest["tool_version"] = kToolVersion;
    manifest["timestamp"] = timestamp_utc();
    manifest["seed"] = seed;
    manifest["config"] = std::move(config);
    manifest["inputs"] = std::move(inputs);
    manifest["outputs"] = std::move(outputs);
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "run_manifest.json", std::ios::binary);
    if (!out)
        throw afdc::Error(afdc::ErrorCode::InvalidArgument,
                          "cannot write run manifest in " + out_dir.string());
    out << manifest.dump(2) << "\n";
}

struct AngleSweep {
    double start = 0.0, end = 20.0, step = 0.25;
};

AngleSweep parse_angles(const std::string& spec) {
    AngleSweep sweep;
    char c1 = 0, c2 = 0;
    std::istringstream in(spec);
    if (!(in >> sweep.start >> c1 >> sweep.end >> c2 >> sweep.step) || c1 != ':' || c2 != ':' ||
        !in.eof())
        throw CLI::ValidationError("--angles", "expected start:end:step, got \"" + spec + "\"");
    return sweep;
}

std::vector<double> parse_csv_doubles(const std::string& spec) {
    std::vector<double> out;
    std::stringstream in(spec);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--clearances", "bad number \"" + tok + "\"");
        }
    }
    if (out.empty()) throw CLI::ValidationError("--clearances", "empty list");
    return out;
}

int cmd_gen(const std::string& airfoils_dir, const std::string& out_dir,
            const std::string& angles_spec, const std::string& clearances_spec,
            std::size_t grid_px, std::size_t panels, const std::string& target,
            std::uint64_t seed, std::size_t pgm_samples) {
    const AngleSweep sweep = parse_angles(angles_spec);
    const auto clearances = parse_csv_doubles(clearances_spec);

    write_run_manifest(out_dir, "gen",
                       json{{"angles", angles_spec},
                            {"clearances", clearances_spec},
                            {"grid", grid_px},
                            {"panels", panels},
                            {"target", target}},
                       json{{"airfoils", airfoils_dir}}, json{{"dataset", out_dir}}, seed);

    std::vector<afdc::NamedAirfoil> airfoils;
    std::vector<afdc::SkipEntry> skips;
    int exit_code = 0;
    try {
        if (!fs::is_directory(airfoils_dir))
            throw afdc::Error(afdc::ErrorCode::InvalidArgument,
                              "--airfoils is not a directory: " + airfoils_dir);
        std::vector<fs::path> dat_files;
        for (const auto& entry : fs::directory_iterator(airfoils_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".dat")
                dat_files.push_back(entry.path());
        std::sort(dat_files.begin(), dat_files.end());
        for (const auto& path : dat_files) {
            try {
                std::ifstream in(path);
                std::stringstream ss;
                ss << in.rdbuf();
                afdc::AirfoilGeometry g = afdc::normalize(afdc::parse_dat(ss.str()));
                airfoils.push_back({path.stem().string(), std::move(g)});
            } catch (const afdc::Error& e) {
                skips.push_back({path.stem().string(), 0.0, 0.0, e.what()});
            }
        }
        if (airfoils.empty())
            throw afdc::Error(afdc::ErrorCode::AllSamplesFailed, "no parseable .dat files");

        afdc::BuildOptions options;
        options.grid.width = grid_px;
        options.grid.height = grid_px;
        options.panels = panels;
        options.target = target == "cl" ? afdc::TargetKind::Cl : afdc::TargetKind::ClCd;

        afdc::Dataset ds = afdc::build_dataset(
            airfoils, afdc::sweep_angles(sweep.start, sweep.end, sweep.step), clearances,
            options, &skips);
        afdc::split_dataset(ds, 0.7, 0.2, 0.1, seed);
        afdc::write_dataset(ds, out_dir);

        for (std::size_t i = 0; i < std::min(pgm_samples, ds.samples.size()); ++i)
            afdc::write_pgm(ds.samples[i].image,
                            (fs::path(out_dir) / ("sample_" + std::to_string(i) + ".pgm")).string());

        std::cout << "gen: " << ds.samples.size() << " samples from " << airfoils.size()
                  << " airfoils (" << skips.size() << " skipped) -> " << out_dir << "\n";
    } catch (const afdc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = 1;
    }

    // The skip report is written even when the build fails.
    json report = json::array();
    for (const auto& s : skips)
        report.push_back({{"id", s.airfoil_id},
                          {"aoa_deg", s.aoa_deg},
                          {"clearance", s.clearance},
                          {"reason", s.reason}});
    std::ofstream rep(fs::path(out_dir) / "skip_report.json", std::ios::binary);
    rep << report.dump(2) << "\n";
    return exit_code;
}

int cmd_train(const std::string& data_dir, const std::string& out_dir, std::size_t epochs,
              std::size_t batch_size, double lr, std::size_t blocks_preset,
              std::uint64_t seed) {
    write_run_manifest(out_dir, "train",
                       json{{"epochs", epochs},
                            {"batch_size", batch_size},
                            {"lr", lr},
                            {"blocks", blocks_preset}},
                       json{{"dataset", data_dir}},
                       json{{"weights_best", (fs::path(out_dir) / "weights_best.afw").string()},
                            {"weights_final", (fs::path(out_dir) / "weights_final.afw").string()},
                            {"metrics", (fs::path(out_dir) / "metrics.csv").string()},
                            {"loss_curve", (fs::path(out_dir) / "loss_curve.svg").string()}},
                       seed);

    afdc::Dataset ds = afdc::read_dataset(data_dir);

    afdc::ModelConfig mc;
    mc.conv_blocks = blocks_preset == 4 ? std::vector<std::size_t>{8, 16, 32, 64}
                                        : std::vector<std::size_t>{8, 16};
    mc.input_height = ds.grid.height;
    mc.input_width = ds.grid.width;

    afdc::TrainConfig tc;
    tc.batch_size = batch_size;
    tc.lr = lr;
    tc.epochs = epochs;
    tc.seed = seed;

    afdc::Model model = afdc::build_model(mc, seed);
    afdc::TrainResult result = afdc::train(model, ds, tc);

    afdc::save_weights(result.best_model, (fs::path(out_dir) / "weights_best.afw").string());
    afdc::save_weights(result.model, (fs::path(out_dir) / "weights_final.afw").string());
    afdc::write_metrics_csv(result.history, (fs::path(out_dir) / "metrics.csv").string());
    afdc::write_loss_curve_svg(result.history, (fs::path(out_dir) / "loss_curve.svg").string());

    std::cout << "train: " << result.history.size() << " epochs, best validation mse "
              << afdc::format_g17(result.history[result.best_epoch - 1].valid_mse)
              << " at epoch " << result.best_epoch << " -> " << out_dir << "\n";
    return 0;
}

afdc::SplitKind parse_split(const std::string& name) {
    if (name == "train") return afdc::SplitKind::Train;
    if (name == "valid") return afdc::SplitKind::Valid;
    return afdc::SplitKind::Test;
}

int cmd_eval(const std::string& data_dir, const std::string& weights_path,
             const std::string& split_name, const std::string& out_dir, std::size_t bins) {
    write_run_manifest(out_dir, "eval", json{{"split", split_name}, {"bins", bins}},
                       json{{"dataset", data_dir}, {"weights", weights_path}},
                       json{{"scatter", (fs::path(out_dir) / "scatter.svg").string()},
                            {"overlay", (fs::path(out_dir) / "overlay.svg").string()},
                            {"pairs", (fs::path(out_dir) / "pairs.csv").string()}},
                       0);

    afdc::Dataset ds = afdc::read_dataset(data_dir);
    afdc::Model model = afdc::load_weights(weights_path);
    afdc::EvalResult res = afdc::evaluate(model, ds, parse_split(split_name));

    afdc::write_pairs_csv(res.pairs, (fs::path(out_dir) / "pairs.csv").string());
    afdc::ScatterOptions scatter;
    scatter.heatmap_bins = bins;
    afdc::write_scatter_svg(res.pairs, (fs::path(out_dir) / "scatter.svg").string(), scatter);
    afdc::write_overlay_svg(res.pairs, (fs::path(out_dir) / "overlay.svg").string());

    double abs_sum = 0.0;
    for (const auto& [truth, pred] : res.pairs) abs_sum += std::abs(pred - truth);
    const std::string summary = "split=" + split_name + " mse=" + afdc::format_g17(res.mse) +
                                " mean_abs_err=" +
                                afdc::format_g17(abs_sum / static_cast<double>(res.pairs.size())) +
                                " count=" + std::to_string(res.pairs.size());
    std::cout << summary << "\n";
    std::ofstream sum_out(fs::path(out_dir) / "summary.txt", std::ios::binary);
    sum_out << summary << "\n";
    return 0;
}

int cmd_predict(const std::string& weights_path, const std::string& dat_path, double aoa,
                double clearance, bool with_oracle, std::size_t panels,
                const std::string& target) {
    afdc::Model model = afdc::load_weights(weights_path);

    std::ifstream in(dat_path);
    if (!in) {
        std::cerr << "error: cannot open " << dat_path << "\n";
        return 1;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    afdc::AirfoilGeometry g = afdc::normalize(afdc::parse_dat(ss.str()));

    afdc::GridSpec grid;
    grid.width = model.config.input_width;
    grid.height = model.config.input_height;
    afdc::PosedSection sec = afdc::pose(g, aoa, clearance);
    afdc::BinaryImage img = afdc::close3x3(afdc::rasterize(sec, grid, true));

    afdc::Tensor x({1, 1, grid.height, grid.width});
    for (std::size_t i = 0; i < img.pixels.size(); ++i) x[i] = img.pixels[i] ? 1.0 : 0.0;
    const double pred = afdc::predict_denormalized(model, x)[0];

    if (with_oracle) {
        afdc::OracleConfig oc;
        oc.panels = panels;
        oc.clearance = clearance;
        const afdc::AeroLabel lbl = afdc::label(g, aoa, oc);
        const double truth = target == "cl" ? lbl.cl : lbl.ratio;
        std::cout << "pred=" << afdc::format_g17(pred) << " oracle=" << afdc::format_g17(truth)
                  << " abs_err=" << afdc::format_g17(std::abs(pred - truth)) << "\n";
    } else {
        std::cout << "pred=" << afdc::format_g17(pred) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"airfoil lift/drag CNN surrogate toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // gen
    auto* gen = app.add_subcommand("gen", "rasterize and label a dataset from UIUC .dat files");
    std::string gen_airfoils, gen_out;
    std::string gen_angles = "0:20:0.25", gen_clearances = "0.2,0.5,1.0", gen_target = "clcd";
    std::size_t gen_grid = 128, gen_panels = 200, gen_pgm = 0;
    std::uint64_t gen_seed = 0;
    gen->add_option("--airfoils", gen_airfoils, "directory of .dat files")->required();
    gen->add_option("--out", gen_out, "output dataset directory")->required();
    gen->add_option("--angles", gen_angles, "sweep as start:end:step (degrees)");
    gen->add_option("--clearances", gen_clearances, "comma-separated h/c values");
    gen->add_option("--grid", gen_grid, "image size in pixels");
    gen->add_option("--panels", gen_panels, "oracle panel count");
    gen->add_option("--target", gen_target, "regression target")
        ->check(CLI::IsMember({"clcd", "cl"}));
    gen->add_option("--seed", gen_seed, "split shuffle seed");
    gen->add_option("--pgm-samples", gen_pgm, "export the first K images as PGM");

    // train
    auto* train = app.add_subcommand("train", "train the regression network");
    std::string train_data, train_out;
    std::size_t train_epochs = 100, train_batch = 50, train_blocks = 2;
    double train_lr = 5e-5;
    std::uint64_t train_seed = 0;
    train->add_option("--data", train_data, "dataset directory")->required();
    train->add_option("--out", train_out, "output directory")->required();
    train->add_option("--epochs", train_epochs, "training epochs");
    train->add_option("--batch-size", train_batch, "mini-batch size");
    train->add_option("--lr", train_lr, "learning rate");
    train->add_option("--blocks", train_blocks, "conv block preset")
        ->check(CLI::IsMember({2, 4}));
    train->add_option("--seed", train_seed, "init and shuffle seed");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate weights on a dataset split");
    std::string eval_data, eval_weights, eval_split = "test", eval_out = ".";
    std::size_t eval_bins = 0;
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--weights", eval_weights, "weight file")->required();
    eval->add_option("--split", eval_split, "split to evaluate")
        ->check(CLI::IsMember({"train", "valid", "test"}));
    eval->add_option("--out", eval_out, "output directory");
    eval->add_option("--bins", eval_bins, "render the scatter as a KxK density heat map");

    // predict
    auto* predict = app.add_subcommand("predict", "predict one airfoil/angle/clearance case");
    std::string pred_weights, pred_dat, pred_target = "clcd";
    double pred_aoa = 0.0, pred_clearance = 0.5;
    bool pred_oracle = false;
    std::size_t pred_panels = 200;
    predict->add_option("--weights", pred_weights, "weight file")->required();
    predict->add_option("--dat", pred_dat, "airfoil .dat file")->required();
    predict->add_option("--aoa", pred_aoa, "angle of attack (degrees)")->required();
    predict->add_option("--clearance", pred_clearance, "ground clearance h/c");
    predict->add_flag("--with-oracle", pred_oracle, "also print the oracle label");
    predict->add_option("--panels", pred_panels, "oracle panel count");
    predict->add_option("--target", pred_target, "oracle column target")
        ->check(CLI::IsMember({"clcd", "cl"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // 0
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e); // 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // usage error
    }

    try {
        if (gen->parsed())
            return cmd_gen(gen_airfoils, gen_out, gen_angles, gen_clearances, gen_grid,
                           gen_panels, gen_target, gen_seed, gen_pgm);
        if (train->parsed())
            return cmd_train(train_data, train_out, train_epochs, train_batch, train_lr,
                             train_blocks, train_seed);
        if (eval->parsed())
            return cmd_eval(eval_data, eval_weights, eval_split, eval_out, eval_bins);
        if (predict->parsed())
            return cmd_predict(pred_weights, pred_dat, pred_aoa, pred_clearance, pred_oracle,
                               pred_panels, pred_target);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2; // flag values rejected after parse (e.g. malformed --angles)
    } catch (const afdc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
