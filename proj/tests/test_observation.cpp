#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "vibtomo/error.hpp"
#include "vibtomo/fem/assembly.hpp"
#include "vibtomo/modal/eigensolver.hpp"
#include "vibtomo/modal/transient.hpp"
#include "vibtomo/observation/damping_fit.hpp"
#include "vibtomo/observation/modes.hpp"
#include "vibtomo/observation/observations_io.hpp"
#include "vibtomo/observation/peaks.hpp"
#include "vibtomo/observation/projection.hpp"
#include "vibtomo/observation/sampling.hpp"
#include "vibtomo/observation/spectrum.hpp"

using namespace vibtomo;

namespace {

obs::ProjectionModel oblique_camera() {
    return obs::look_along(Eigen::Vector3d(-1, 1, -1).normalized(), Eigen::Vector3d::UnitZ(), 1e4);
}

}  // namespace

TEST(Projection, FitRecoversAffineCamera) {
    obs::ProjectionModel cam;
    cam.A << 1200, -300, 50, 100, 900, -1500;
    cam.b << 320, 240;
    std::vector<Eigen::Vector3d> X = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}, {0.3, 0.7, 0.2}};
    std::vector<Eigen::Vector2d> p;
    for (const auto& x : X) p.push_back(cam.project(x));
    const auto fit = obs::fit_projection(X, p);
    EXPECT_LE((fit.A - cam.A).norm(), 1e-9 * cam.A.norm());
    EXPECT_LE((fit.b - cam.b).norm(), 1e-9);

    std::vector<Eigen::Vector3d> flat = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.5, 0.2, 0}};
    std::vector<Eigen::Vector2d> q(flat.size(), Eigen::Vector2d::Zero());
    EXPECT_THROW(obs::fit_projection(flat, q), RankDeficiencyError);
}

TEST(Sampling, MonocularCubeSeesThreeFaces) {
    fem::VoxelGrid grid({8, 8, 8}, 0.05 / 8);
    const auto mesh = fem::build_cube_mesh(grid, fem::CubeFace::Bottom);
    const auto vis = obs::auto_visible_vertices(mesh, oblique_camera());
    EXPECT_EQ(vis.size(), 217u);
    const auto s = obs::build_sampling_operator(mesh, oblique_camera());
    EXPECT_EQ(s.rows(), 2 * 729);
    EXPECT_EQ(s.P.cols(), mesh.free_dof_count());
}

TEST(Sampling, RowsProjectVertexDisplacement) {
    fem::VoxelGrid grid({2, 2, 2}, 0.01);
    const auto mesh = fem::build_cube_mesh(grid, fem::CubeFace::Bottom);
    const auto cam = oblique_camera();
    const auto s = obs::build_sampling_operator(mesh, cam);
    Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(mesh.free_dof_count(), 0.1, 2.0);
    const Eigen::VectorXd img = s.P * u;
    const Eigen::VectorXd full = mesh.expand_to_vertices(u);
    const auto mask = s.visible_row_mask();
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const Eigen::Vector2d expected = mask[2 * v] ? Eigen::Vector2d(cam.A * full.segment<3>(3 * v))
                                                     : Eigen::Vector2d::Zero();
        EXPECT_LE((img.segment<2>(2 * v) - expected).norm(), 1e-12 * (1 + expected.norm()));
    }
    EXPECT_THROW(obs::build_sampling_operator(mesh, cam, std::vector<int>{}), ValidationError);
    EXPECT_THROW(obs::build_sampling_operator(mesh, cam, std::vector<int>{1000}), ValidationError);
}

TEST(Sampling, TransferOperatorInterpolatesLinearFieldsExactly) {
    const Eigen::Vector3d L(0.05, 0.05, 0.05);
    const auto src = fem::build_cube_mesh(fem::VoxelGrid({5, 5, 5}, 0.01), fem::CubeFace::None);
    const auto dst = fem::build_cube_mesh(fem::VoxelGrid({3, 3, 3}, 0.05 / 3), fem::CubeFace::None);
    const auto cam = oblique_camera();
    const auto sampler = obs::build_sampling_operator(dst, cam);
    const auto T = obs::build_transfer_operator(src, dst, cam, sampler.visible_vertices);
    Eigen::Matrix3d G;
    G << 0.1, -0.2, 0.05, 0.3, 0.0, -0.1, 0.02, 0.07, 0.2;
    auto field = [&](const fem::Mesh& m) {
        Eigen::VectorXd u(m.free_dof_count());
        for (int v = 0; v < m.vertex_count(); ++v)
            for (int c = 0; c < 3; ++c) u[m.dof(v, c)] = (G * m.vertex(v))[c];
        return u;
    };
    const Eigen::VectorXd a = T * field(src), b = sampler.P * field(dst);
    EXPECT_LE((a - b).norm(), 1e-12 * b.norm());
}

TEST(Spectrum, ParsevalHoldsWithoutWindow) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int T : {64, 65}) {
        obs::ImageSeries s;
        s.fps = 100;
        s.frames.resize(T, 6);
        for (int i = 0; i < T; ++i)
            for (int d = 0; d < 6; ++d) s.frames(i, d) = g(rng) + 3.0;
        const auto spec = obs::power_spectrum(s);
        const Eigen::MatrixXd centered = s.frames.rowwise() - s.frames.colwise().mean();
        const double variance = centered.squaredNorm() / T;
        EXPECT_NEAR(spec.power.sum(), variance, 1e-9 * variance);
        EXPECT_EQ(spec.bin_count(), T / 2);
        EXPECT_DOUBLE_EQ(spec.freq_of_bin(1), 100.0 / T);
    }
    obs::ImageSeries tiny;
    tiny.fps = 10;
    tiny.frames = Eigen::MatrixXd::Zero(3, 2);
    EXPECT_THROW(obs::power_spectrum(tiny), ValidationError);
}

TEST(Peaks, ProminenceAndSeparation) {
    Eigen::VectorXd v(9);
    v << 0, 5, 1, 3, 2, 2, 8, 0, 1;
    const auto p = obs::peak_prominences(v);
    EXPECT_DOUBLE_EQ(p[1], 4.0);  // key col at 1, higher terrain (8) on the right
    EXPECT_DOUBLE_EQ(p[3], 1.0);
    EXPECT_DOUBLE_EQ(p[6], 8.0);
    EXPECT_DOUBLE_EQ(p[0], -1.0);
    EXPECT_DOUBLE_EQ(p[8], -1.0);

    obs::Spectrum s;
    s.fps = 10;
    s.frames = 20;
    s.power = v.array().exp();
    s.freqs = Eigen::VectorXd::LinSpaced(9, 0.5, 4.5);
    obs::PeakOptions opt;
    opt.min_prominence = 2.0;
    EXPECT_EQ(obs::find_peaks(s, opt), (std::vector<int>{2, 7}));
    opt.max_peaks = 1;
    EXPECT_EQ(obs::find_peaks(s, opt), (std::vector<int>{7}));
}

TEST(Modes, EnergyPhaseRecoversRotation) {
    Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(6, -1, 2);
    for (double theta : {0.3, -1.1, 1.4}) {
        const Eigen::VectorXcd c = a.cast<std::complex<double>>() * std::polar(1.0, theta);
        double got = obs::energy_phase(c);
        double diff = std::remainder(got - theta, M_PI);
        EXPECT_NEAR(diff, 0.0, 1e-12);
    }
}

TEST(Modes, SingleModeSeriesGivesOnePeakAndItsShape) {
    fem::VoxelGrid grid({3, 3, 3}, 0.05 / 3);
    const auto mesh = fem::build_cube_mesh(grid, fem::CubeFace::Bottom);
    const auto units = fem::assemble_unit_matrices(mesh, 0.3);
    const auto sys = fem::assemble_global(units, fem::MaterialField::homogeneous(grid.size(), 9000, 1270));
    const auto basis = modal::solve_modes(sys, 3).truncated(3);
    const auto sampler = obs::build_sampling_operator(mesh, oblique_camera());

    auto one = basis;
    one.modes = basis.modes.col(2);
    one.eigenvalues = basis.eigenvalues.segment(2, 1);
    const double f0 = one.frequencies_hz()[0];
    const auto series =
        modal::simulate_transient(one, sys.M, {}, 1e-3 * one.modes.col(0), std::nullopt, 8 * f0, 4.0);
    const auto spectrum = obs::power_spectrum(obs::sample_series(series, sampler.P), obs::Window::Hann);
    const auto peaks = obs::find_peaks(spectrum);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_NEAR(spectrum.freq_of_bin(peaks[0]), f0, spectrum.bin_width());
    const auto modes = obs::extract_modes(spectrum, peaks, sampler);
    const Eigen::VectorXd ref = (sampler.P * one.modes.col(0)).normalized();
    EXPECT_GE(std::abs(modes[0].gamma.dot(ref)), 0.999);
    EXPECT_NEAR(modes[0].gamma.norm(), 1.0, 1e-12);
    EXPECT_THROW(obs::extract_modes(spectrum, {0}, sampler), ValidationError);
}

TEST(Modes, MergeOnlyAcrossLists) {
    auto mode = [](double hz, double power, double sign) {
        obs::ObservedMode m;
        m.gamma = sign * Eigen::Vector4d(1, 2, 0, 1).normalized();
        m.omega = 2 * M_PI * hz;
        m.power = power;
        return m;
    };
    const auto merged = obs::merge_mode_lists({{mode(10, 1, 1), mode(10.2, 2, 1)}, {mode(10.05, 5, -1)}}, 0.1);
    ASSERT_EQ(merged.size(), 2u);
    EXPECT_NEAR(merged[0].frequency_hz(), 10.05, 1e-12);
    EXPECT_GE(std::abs(merged[0].gamma.dot(Eigen::Vector4d(1, 2, 0, 1).normalized())), 1 - 1e-12);
}

TEST(Modes, NoiseIsSeededAndRespectsTheMask) {
    obs::ObservedMode m;
    m.gamma = Eigen::VectorXd::LinSpaced(8, 1, 2).normalized();
    m.omega = 1;
    Eigen::VectorXd mask = Eigen::VectorXd::Ones(8);
    mask.segment<2>(4).setZero();
    m.gamma.segment<2>(4).setZero();
    m.gamma.normalize();
    std::vector<obs::ObservedMode> a{m}, b{m}, c{m};
    obs::add_gamma_noise(a, mask, 10, 7);
    obs::add_gamma_noise(b, mask, 10, 7);
    obs::add_gamma_noise(c, mask, 10, 8);
    EXPECT_TRUE(a[0].gamma == b[0].gamma);
    EXPECT_FALSE(a[0].gamma == c[0].gamma);
    EXPECT_EQ(a[0].gamma[4], 0.0);
    EXPECT_NEAR(a[0].gamma.norm(), 1.0, 1e-12);
    EXPECT_GT(std::abs(a[0].gamma.dot(m.gamma)), 0.95);
}

TEST(DampingFit, RecoversZetaOfADampedMode) {
    modal::ModalBasis basis;
    basis.modes = Eigen::MatrixXd::Identity(1, 1);
    const double f0 = 20.0, zeta = 0.02, w0 = 2 * M_PI * f0;
    basis.eigenvalues = Eigen::VectorXd::Constant(1, w0 * w0);
    const auto series = modal::simulate_transient(basis, fem::SparseMatrix(Eigen::MatrixXd::Identity(1, 1).sparseView()),
                                                  {2 * zeta * w0, 0.0}, Eigen::VectorXd::Ones(1), std::nullopt, 200, 20);
    obs::ImageSeries img{series.frames, series.fps};
    const auto spectrum = obs::power_spectrum(img);
    const auto peaks = obs::find_peaks(spectrum);
    ASSERT_FALSE(peaks.empty());
    const auto fit = obs::estimate_damping_ratio(spectrum, peaks[0]);
    EXPECT_NEAR(fit.zeta, zeta, 0.005);
    EXPECT_NEAR(fit.f0_hz, f0 * std::sqrt(1 - zeta * zeta), 0.05);
}

TEST(ObservationsIo, RoundTripIsLossless) {
    obs::ObservationSet set;
    set.q = 3;
    set.projection = oblique_camera();
    set.visible_vertices = {0, 2};
    obs::ObservedMode m;
    m.gamma = Eigen::VectorXd::Random(6);
    m.gamma[1] = 1.0 / 3.0;
    m.omega = 2 * M_PI * 13.37;
    m.bin = 4;
    m.power = 1e-17;
    set.modes = {m};
    const auto path = std::filesystem::temp_directory_path() / "vibtomo_obs_roundtrip.json";
    obs::write_observations(set, path);
    const auto back = obs::read_observations(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.q, 3);
    EXPECT_EQ(back.visible_vertices, set.visible_vertices);
    EXPECT_TRUE(back.projection.A == set.projection.A);
    EXPECT_TRUE(back.modes[0].gamma == m.gamma);
    EXPECT_EQ(back.modes[0].omega, m.omega);
    EXPECT_EQ(back.modes[0].power, m.power);

    set.truncate_above(10.0);
    EXPECT_TRUE(set.modes.empty());
}
