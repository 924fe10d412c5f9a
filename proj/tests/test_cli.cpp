#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(VIBTOMO_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string spec_path() { return (fs::path(VIBTOMO_TEST_DATA) / "defect_cube.json").string(); }

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / "vibtomo_cli_test";
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string at(const std::string& name) const { return (dir / name).string(); }
    fs::path dir;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitWithValidationCode) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, InvalidSpecExitsWithValidationCode) {
    std::ifstream in(spec_path());
    auto doc = nlohmann::json::parse(in);
    doc["duration"] = 0;
    std::ofstream(at("bad.json")) << doc.dump();
    EXPECT_EQ(run("synth " + at("bad.json") + " -o " + at("out")), 2);
}

TEST_F(Cli, FullPipeline) {
    ASSERT_EQ(run("synth " + spec_path() + " -o " + at("syn") + " --write-series"), 0);
    EXPECT_TRUE(fs::exists(dir / "syn" / "series_0.bin"));

    const int code = run("invert -O " + at("syn/observations.json") + " -m " + at("syn/mesh.json") + " -c " +
                         at("syn/inversion.json") + " --max-iters 2 -o " + at("inv"));
    EXPECT_EQ(code, 3);
    EXPECT_TRUE(fs::exists(dir / "inv" / "w.json"));

    EXPECT_EQ(run("eval --est-w " + at("inv/w.json") + " --est-v " + at("inv/v.json") + " --truth-w " +
                  at("syn/truth_w.json") + " --truth-v " + at("syn/truth_v.json") + " -o " + at("eval")),
              0);
    EXPECT_TRUE(fs::exists(dir / "eval" / "report.json"));
    EXPECT_TRUE(fs::exists(dir / "eval" / "v_truth_z3.png"));

    EXPECT_EQ(run("modes -m " + at("syn/mesh.json") + " -w " + at("syn/truth_w.json") + " -v " +
                  at("syn/truth_v.json") + " -k 5 -o " + at("modes")),
              0);
    EXPECT_TRUE(fs::exists(dir / "modes" / "modes.csv"));

    EXPECT_EQ(run("damping -s " + at("syn/series_0.bin") + " -m " + at("syn/forward_mesh.json") + " -O " +
                  at("syn/observations.json") + " --max-peaks 3 -o " + at("damp")),
              0);
    EXPECT_TRUE(fs::exists(dir / "damp" / "damping.csv"));

    // Same voxel count on another grid: validation error.
    std::ifstream tw(dir / "syn" / "truth_w.json");
    auto reshaped = nlohmann::json::parse(tw);
    reshaped["dims"] = {2, 2, 16};
    std::ofstream(at("reshaped.json")) << reshaped.dump();
    EXPECT_EQ(run("eval --est-w " + at("inv/w.json") + " --est-v " + at("inv/v.json") + " --truth-w " +
                  at("reshaped.json") + " --truth-v " + at("syn/truth_v.json") + " --no-heatmaps -o " +
                  at("eval2")),
              2);
}

TEST_F(Cli, EmptyObservationsReportAMissingAnchor) {
    ASSERT_EQ(run("synth " + spec_path() + " -o " + at("syn")), 0);
    std::ifstream in(dir / "syn" / "observations.json");
    auto doc = nlohmann::json::parse(in);
    doc["modes"] = nlohmann::json::array();
    std::ofstream(at("empty.json")) << doc.dump();
    EXPECT_EQ(run("invert -O " + at("empty.json") + " -m " + at("syn/mesh.json") + " -o " + at("inv")), 4);
}

TEST_F(Cli, SweepWritesTrendFlags) {
    std::ifstream in(spec_path());
    auto doc = nlohmann::json::parse(in);
    doc["observation_source"] = "true_modes";
    std::ofstream(at("spec.json")) << doc.dump();
    ASSERT_EQ(run("sweep " + at("spec.json") + " -k 4 6 --max-iters 3 -o " + at("sweep")), 0);
    std::ifstream s(dir / "sweep" / "sweep.json");
    const auto sweep = nlohmann::json::parse(s);
    EXPECT_EQ(sweep.at("rows").size(), 2u);
    EXPECT_TRUE(sweep.contains("corr_w_non_decreasing_trend"));
    EXPECT_TRUE(sweep.contains("sigma_star_non_increasing_trend"));
}
