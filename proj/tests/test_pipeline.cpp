#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "vibtomo/error.hpp"
#include "vibtomo/pipeline/commands.hpp"
#include "vibtomo/pipeline/experiment.hpp"
#include "vibtomo/pipeline/heatmap.hpp"
#include "vibtomo/pipeline/volume.hpp"

using namespace vibtomo;
namespace fs = std::filesystem;

namespace {

fs::path data_file(const std::string& name) { return fs::path(VIBTOMO_TEST_DATA) / name; }

nlohmann::json load(const std::string& name) {
    std::ifstream in(data_file(name));
    return nlohmann::json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("vibtomo_test_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST(Volume, RoundTripIsLossless) {
    pipeline::VolumeFile v{fem::VoxelGrid({2, 3, 1}, 0.1 / 3), "youngs_modulus", "Pa", Eigen::VectorXd::Random(6)};
    v.values[2] = 1.0 / 7.0;
    const auto path = fs::temp_directory_path() / "vibtomo_volume.json";
    pipeline::write_volume(v, path);
    const auto back = pipeline::read_volume(path);
    fs::remove(path);
    EXPECT_EQ(back.grid, v.grid);
    EXPECT_EQ(back.name, v.name);
    EXPECT_TRUE(back.values == v.values);

    auto doc = pipeline::volume_to_json(v);
    doc["values"].erase(0);
    EXPECT_THROW(pipeline::volume_from_json(doc), ShapeError);
}

TEST(Volume, ResampleAveragesOverlaps) {
    fem::VoxelGrid fine({4, 4, 4}, 0.25), coarse({2, 2, 2}, 0.5), odd({3, 3, 3}, 1.0 / 3);
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(64, 0, 63);
    const auto c = pipeline::resample_volume(x, fine, coarse);
    EXPECT_DOUBLE_EQ(c[0], (0 + 1 + 4 + 5 + 16 + 17 + 20 + 21) / 8.0);
    EXPECT_NEAR(pipeline::resample_volume(x, fine, odd).mean(), x.mean(), 1e-12);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(27);
    EXPECT_LE((pipeline::resample_volume(ones, odd, fine) - Eigen::VectorXd::Ones(64)).norm(), 1e-14);
    EXPECT_TRUE(pipeline::resample_volume(x, fine, fine) == x);
}

TEST(Heatmap, ColormapEndpointsAndPngOutput) {
    EXPECT_EQ(pipeline::colormap_rgb(pipeline::Colormap::Gray, 1.0), (std::array<std::uint8_t, 3>{255, 255, 255}));
    EXPECT_EQ(pipeline::colormap_rgb(pipeline::Colormap::Heat, 0.0), (std::array<std::uint8_t, 3>{0, 0, 4}));
    EXPECT_EQ(pipeline::colormap_rgb(pipeline::Colormap::Heat, 2.0), (std::array<std::uint8_t, 3>{252, 255, 164}));
    EXPECT_THROW(pipeline::colormap_from_string("jet"), ValidationError);

    const auto dir = scratch("heatmap");
    fs::create_directories(dir);
    fem::VoxelGrid grid({3, 2, 2}, 1.0);
    const auto paths = pipeline::write_slice_heatmaps(dir / "w", Eigen::VectorXd::LinSpaced(12, 0, 1), grid, 0, 1,
                                                      pipeline::Colormap::Heat, 4);
    ASSERT_EQ(paths.size(), 2u);
    const auto bytes = slurp(paths[0]);
    ASSERT_GT(bytes.size(), 24u);
    EXPECT_EQ(bytes.substr(1, 3), "PNG");
    auto be32 = [&](std::size_t at) {
        return (static_cast<unsigned char>(bytes[at]) << 24) | (static_cast<unsigned char>(bytes[at + 1]) << 16) |
               (static_cast<unsigned char>(bytes[at + 2]) << 8) | static_cast<unsigned char>(bytes[at + 3]);
    };
    EXPECT_EQ(be32(16), 12u);  // width = 3 voxels * 4 px
    EXPECT_EQ(be32(20), 8u);
    fs::remove_all(dir);
}

TEST(Experiment, ParsesTheFixtureAndPaintsTheDefect) {
    const auto spec = pipeline::experiment_from_json(load("defect_cube.json"));
    EXPECT_EQ(spec.plucks.size(), 2u);
    EXPECT_NEAR(spec.damping.ratio(2 * M_PI * 10), 0.005, 1e-12);
    const auto truth = pipeline::truth_field(spec);
    EXPECT_EQ((truth.w.array() == 5e6).count(), 2);
    EXPECT_EQ(truth.w[spec.grid.index(1, 2, 2)], 5e6);
    EXPECT_EQ(truth.v[spec.grid.index(2, 2, 2)], 7620);
}

TEST(Experiment, ValidationNamesTheField) {
    auto doc = load("defect_cube.json");
    doc["duration"] = 0.0;
    EXPECT_THROW(pipeline::experiment_from_json(doc), ValidationError);

    doc = load("defect_cube.json");
    doc["truth"]["defects"][0]["corner"] = {0.04, 0.0, 0.0};
    try {
        pipeline::experiment_from_json(doc);
        FAIL() << "defect outside the grid was accepted";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("truth.defects[0]"), std::string::npos);
    }

    doc = load("defect_cube.json");
    doc["freq_ceiling_hz"] = 250;
    EXPECT_THROW(pipeline::experiment_from_json(doc), ValidationError);

    doc = load("defect_cube.json");
    doc["camera"]["pixels_per_meter"] = "many";
    try {
        pipeline::experiment_from_json(doc);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("camera.pixels_per_meter"), std::string::npos);
    }
}

TEST(Synthesis, JelloClayCubeYieldsAtLeastEightModes) {
    const auto spec = pipeline::experiment_from_json(load("defect_cube.json"));
    const auto result = pipeline::synthesize(spec);
    EXPECT_GE(result.observations.modes.size(), 8u);
    for (const auto& m : result.observations.modes) EXPECT_LE(m.frequency_hz(), spec.fps / 2);
}

TEST(Synthesis, TwoPlucksObserveAtLeastAsManyModesAsOne) {
    auto doc = load("defect_cube.json");
    doc["noise"] = nullptr;
    const auto both = pipeline::synthesize(pipeline::experiment_from_json(doc));
    doc["plucks"].erase(1);
    const auto one = pipeline::synthesize(pipeline::experiment_from_json(doc));
    EXPECT_GE(both.observations.modes.size(), one.observations.modes.size());
}

TEST(Synthesis, TrueModesWithMeshMismatch) {
    auto doc = load("defect_cube.json");
    doc["observation_source"] = "true_modes";
    doc["observed_modes"] = 6;
    doc["inference_grid"] = {{"dims", {3, 3, 3}}};
    const auto result = pipeline::synthesize(pipeline::experiment_from_json(doc));
    EXPECT_EQ(result.observations.modes.size(), 6u);
    EXPECT_EQ(result.observations.q, 64);
    EXPECT_EQ(result.truth_w.size(), 27);
    EXPECT_NEAR(result.truth_v.mean(), result.truth.v.mean(), 1e-9 * result.truth.v.mean());
}

TEST(Commands, SynthInvertEvalAreDeterministic) {
    const auto spec = pipeline::experiment_from_json(load("defect_cube.json"));
    const auto a = scratch("det_a"), b = scratch("det_b");
    std::ostringstream log;
    pipeline::cmd_synth(spec, a, false, log);
    pipeline::cmd_synth(spec, b, false, log);
    EXPECT_EQ(slurp(a / "observations.json"), slurp(b / "observations.json"));

    pipeline::InvertOptions opt;
    opt.observations = a / "observations.json";
    opt.mesh = a / "mesh.json";
    opt.config = spec.inversion;
    opt.config.max_iters = 5;
    opt.out_dir = a / "inv";
    const int code = pipeline::cmd_invert(opt, log);
    EXPECT_TRUE(code == 0 || code == 3);
    opt.out_dir = b / "inv";
    pipeline::cmd_invert(opt, log);
    EXPECT_EQ(slurp(a / "inv" / "w.json"), slurp(b / "inv" / "w.json"));
    EXPECT_EQ(slurp(a / "inv" / "v.json"), slurp(b / "inv" / "v.json"));

    pipeline::EvalOptions ev;
    ev.est_w = a / "truth_w.json";
    ev.est_v = a / "truth_v.json";
    ev.truth_w = a / "truth_w.json";
    ev.truth_v = a / "truth_v.json";
    ev.mesh = a / "mesh.json";
    ev.observations = a / "observations.json";
    ev.out_dir = a / "eval";
    pipeline::cmd_eval(ev, log);
    std::ifstream in(a / "eval" / "report.json");
    const auto report = nlohmann::json::parse(in);
    EXPECT_DOUBLE_EQ(report.at("corr_w").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(report.at("corr_v").get<double>(), 1.0);
    EXPECT_TRUE(report.at("bright_region_w").at("overlap").get<bool>());
    EXPECT_TRUE(fs::exists(a / "eval" / "w_est_z0.png"));
    EXPECT_TRUE(fs::exists(a / "eval" / "frequencies.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Commands, TrendSlope) {
    EXPECT_NEAR(pipeline::trend_slope({8, 12, 16, 20}, {0.1, 0.2, 0.3, 0.4}), 0.025, 1e-15);
    EXPECT_LT(pipeline::trend_slope({8, 12, 16, 20}, {2, 1.5, 1.5, 1}), 0.0);
    EXPECT_EQ(pipeline::trend_slope({8}, {2}), 0.0);
}
