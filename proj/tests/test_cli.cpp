#include <doctest.h>

#include <nlohmann/json.hpp>

#include "afdc/dataset.hpp"
#include "test_support.hpp"

using namespace afdc;
using namespace afdc::test;
using json = nlohmann::json;

namespace {

// Writes a small .dat corpus and returns the directory.
void write_corpus(const std::filesystem::path& dir, std::size_t count) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < count; ++i) {
        const AirfoilGeometry g = make_naca4(0.01 + 0.01 * static_cast<double>(i % 4), 0.4,
                                             0.08 + 0.02 * static_cast<double>(i % 3), 40,
                                             "foil" + std::to_string(i));
        write_file(dir / ("foil" + std::to_string(i) + ".dat"), serialize_selig(g));
    }
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

} // namespace

TEST_CASE("cli usage errors exit with code 2") {
    CHECK(run_cli("gen").exit_code == 2);                       // missing required flags
    CHECK(run_cli("frobnicate").exit_code == 2);                // unknown subcommand
    CHECK(run_cli("").exit_code == 2);                          // no subcommand
    CHECK(run_cli("train --data x").exit_code == 2);            // missing --out
    CHECK(run_cli("gen --airfoils a --out b --angles nope").exit_code == 2);
    CHECK(run_cli("gen --airfoils a --out b --target bogus").exit_code == 2);
}

TEST_CASE("cli help exits 0") {
    const CliResult res = run_cli("--help");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("gen") != std::string::npos);
    CHECK(res.output.find("predict") != std::string::npos);
}

TEST_CASE("cli gen builds a dataset with the expected cardinality") {
    TempDir tmp("cligen");
    write_corpus(tmp.path() / "dats", 3);
    const auto out = tmp.path() / "ds";
    const CliResult res =
        run_cli("gen --airfoils " + q(tmp.path() / "dats") + " --out " + q(out) +
                " --angles 0:2:1 --clearances 0.3,0.6 --grid 16 --panels 30 --seed 3");
    INFO(res.output);
    REQUIRE(res.exit_code == 0);

    const Dataset ds = read_dataset(out.string());
    CHECK(ds.samples.size() == 3 * 3 * 2);
    CHECK(std::filesystem::exists(out / "run_manifest.json"));
    CHECK(std::filesystem::exists(out / "skip_report.json"));

    const json manifest = json::parse(read_file(out / "run_manifest.json"));
    CHECK(manifest.at("command") == "gen");
    CHECK(manifest.at("seed") == 3);
    CHECK(manifest.at("config").at("grid") == 16);
}

TEST_CASE("cli gen on a missing airfoil directory fails at runtime, not usage") {
    TempDir tmp("cligen2");
    const CliResult res =
        run_cli("gen --airfoils " + q(tmp.path() / "nope") + " --out " + q(tmp.path() / "ds"));
    CHECK(res.exit_code == 1);
    CHECK(std::filesystem::exists(tmp.path() / "ds" / "skip_report.json"));
}

TEST_CASE("cli gen replay from its run manifest reproduces the dataset bytes") {
    TempDir tmp("clireplay");
    write_corpus(tmp.path() / "dats", 3);
    const auto out1 = tmp.path() / "ds1";
    const auto out2 = tmp.path() / "ds2";
    REQUIRE(run_cli("gen --airfoils " + q(tmp.path() / "dats") + " --out " + q(out1) +
                    " --angles 0:2:1 --clearances 0.4 --grid 16 --panels 30 --seed 9")
                .exit_code == 0);

    // Rebuild the command line from the manifest alone.
    const json manifest = json::parse(read_file(out1 / "run_manifest.json"));
    const auto& cfg = manifest.at("config");
    std::string cmd = "gen --airfoils \"" + manifest.at("inputs").at("airfoils").get<std::string>() +
                      "\" --out " + q(out2) + " --angles " + cfg.at("angles").get<std::string>() +
                      " --clearances " + cfg.at("clearances").get<std::string>() + " --grid " +
                      std::to_string(cfg.at("grid").get<std::size_t>()) + " --panels " +
                      std::to_string(cfg.at("panels").get<std::size_t>()) + " --target " +
                      cfg.at("target").get<std::string>() + " --seed " +
                      std::to_string(manifest.at("seed").get<std::uint64_t>());
    REQUIRE(run_cli(cmd).exit_code == 0);

    CHECK(read_file(out1 / "images.bin") == read_file(out2 / "images.bin"));
    CHECK(read_file(out1 / "manifest.json") == read_file(out2 / "manifest.json"));
}

TEST_CASE("cli train, eval and predict run end to end") {
    TempDir tmp("clipipe");
    write_corpus(tmp.path() / "dats", 5); // 5 airfoils -> 3/1/1 split

    const auto ds_dir = tmp.path() / "ds";
    REQUIRE(run_cli("gen --airfoils " + q(tmp.path() / "dats") + " --out " + q(ds_dir) +
                    " --angles 0:6:2 --clearances 0.4 --grid 16 --panels 30 --seed 1")
                .exit_code == 0);

    const auto run_dir = tmp.path() / "run";
    const CliResult tr = run_cli("train --data " + q(ds_dir) + " --out " + q(run_dir) +
                                 " --epochs 2 --batch-size 4 --lr 0.001 --seed 2");
    INFO(tr.output);
    REQUIRE(tr.exit_code == 0);
    CHECK(std::filesystem::exists(run_dir / "weights_best.afw"));
    CHECK(std::filesystem::exists(run_dir / "weights_final.afw"));
    CHECK(std::filesystem::exists(run_dir / "loss_curve.svg"));

    // --epochs 2 -> header + 2 data rows
    const std::string metrics = read_file(run_dir / "metrics.csv");
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 3);
    CHECK(metrics.rfind("epoch,train_mse,valid_mse,seconds\n", 0) == 0);

    const auto eval_dir = tmp.path() / "eval";
    const CliResult ev = run_cli("eval --data " + q(ds_dir) + " --weights " +
                                 q(run_dir / "weights_best.afw") + " --split test --out " +
                                 q(eval_dir));
    INFO(ev.output);
    REQUIRE(ev.exit_code == 0);
    CHECK(ev.output.find("mse=") != std::string::npos);
    CHECK(ev.output.find("mean_abs_err=") != std::string::npos);
    CHECK(ev.output.find("count=") != std::string::npos);

    // Pairs row count = test split size.
    const Dataset ds = read_dataset(ds_dir.string());
    const std::size_t test_count = ds.split_indices(SplitKind::Test).size();
    const std::string pairs = read_file(eval_dir / "pairs.csv");
    CHECK(std::count(pairs.begin(), pairs.end(), '\n') == static_cast<long>(test_count + 1));

    std::string xml_err;
    CHECK(xml_well_formed(read_file(eval_dir / "scatter.svg"), &xml_err));
    CHECK(xml_well_formed(read_file(eval_dir / "overlay.svg"), &xml_err));

    // predict: flat plate at aoa 0 prints a zero oracle column for target cl.
    const AirfoilGeometry plate = make_flat_plate();
    write_file(tmp.path() / "plate.dat", serialize_selig(plate));
    const CliResult pr = run_cli("predict --weights " + q(run_dir / "weights_best.afw") +
                                 " --dat " + q(tmp.path() / "plate.dat") +
                                 " --aoa 0 --clearance 0.4 --with-oracle --target cl --panels 40");
    INFO(pr.output);
    REQUIRE(pr.exit_code == 0);
    CHECK(pr.output.find("pred=") != std::string::npos);
    CHECK(pr.output.find("oracle=0") != std::string::npos);
    CHECK(pr.output.find("abs_err=") != std::string::npos);

    // Identical invocations print identical bytes.
    const CliResult pr2 = run_cli("predict --weights " + q(run_dir / "weights_best.afw") +
                                  " --dat " + q(tmp.path() / "plate.dat") +
                                  " --aoa 0 --clearance 0.4 --with-oracle --target cl --panels 40");
    CHECK(pr.output == pr2.output);
}

TEST_CASE("cli eval with missing weights exits 1") {
    TempDir tmp("clievalbad");
    const CliResult res =
        run_cli("eval --data " + q(tmp.path() / "none") + " --weights " + q(tmp.path() / "w.afw"));
    CHECK(res.exit_code == 1);
}

TEST_CASE("cli predict with a bad dat file exits 1") {
    TempDir tmp("clipredbad");
    write_file(tmp.path() / "bad.dat", "name\n1 0\nx y\n");
    // Weights file also missing; either failure path must exit 1.
    const CliResult res = run_cli("predict --weights " + q(tmp.path() / "w.afw") + " --dat " +
                                  q(tmp.path() / "bad.dat") + " --aoa 2");
    CHECK(res.exit_code == 1);
}
