#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vibtomo/error.hpp"
#include "vibtomo/eval/metrics.hpp"
#include "vibtomo/modal/eigensolver.hpp"
#include "vibtomo/observation/sampling.hpp"

using namespace vibtomo;

namespace {

Eigen::VectorXd random_field(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::VectorXd x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

// Direct 1D convolution with the reflection x[-1 - i] = x[i], x[n + i] = x[n - 1 - i].
Eigen::VectorXd blur_1d(const Eigen::VectorXd& x, double sigma) {
    const int n = static_cast<int>(x.size());
    const int r = static_cast<int>(std::ceil(3 * sigma));
    double norm = 0;
    for (int t = -r; t <= r; ++t) norm += std::exp(-t * t / (2 * sigma * sigma));
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        for (int t = -r; t <= r; ++t) {
            int j = i + t;
            while (j < 0 || j >= n) j = j < 0 ? -1 - j : 2 * n - 1 - j;
            y[i] += std::exp(-t * t / (2 * sigma * sigma)) / norm * x[j];
        }
    return y;
}

}  // namespace

TEST(Correlation, MatchesTwoPassOracleAndIsAffineInvariant) {
    const auto a = random_field(200, 1), b = random_field(200, 2);
    EXPECT_NEAR(eval::normalized_correlation(a, b), oracle::correlation(a, b), 1e-12);
    const Eigen::VectorXd a2 = (3.0 * a.array() + 1e5).matrix();
    EXPECT_NEAR(eval::normalized_correlation(a2, b), oracle::correlation(a, b), 1e-9);
    EXPECT_NEAR(eval::normalized_correlation(a, a), 1.0, 1e-15);
    EXPECT_THROW(eval::normalized_correlation(a, random_field(199, 3)), ShapeError);
    EXPECT_THROW(eval::normalized_correlation(a, Eigen::VectorXd::Constant(200, 2.0)), ValidationError);
}

TEST(Blur, MatchesDirectConvolutionWithMirrorBoundary) {
    fem::VoxelGrid line({11, 1, 1}, 1.0);
    const auto x = random_field(11, 4);
    for (double sigma : {0.5, 1.5, 4.0})
        EXPECT_LE((eval::gaussian_blur(x, line, sigma) - blur_1d(x, sigma)).norm(), 1e-13);
    EXPECT_TRUE(eval::gaussian_blur(x, line, 0.0) == x);
}

TEST(Blur, IsSeparableAndConservesTotal) {
    fem::VoxelGrid grid({5, 4, 3}, 1.0);
    const auto x = random_field(grid.size(), 5);
    const auto y = eval::gaussian_blur(x, grid, 1.2);
    EXPECT_NEAR(y.sum(), x.sum(), 1e-12 * x.sum());
    // Blurring along x then y then z equals the per-axis oracle applied in turn.
    Eigen::VectorXd ref = x;
    for (int axis = 0; axis < 3; ++axis) {
        Eigen::VectorXd next = ref;
        const int n = grid.dims()[axis];
        for (int idx = 0; idx < grid.size(); ++idx) {
            auto c = grid.coords(idx);
            if (c[axis] != 0) continue;
            Eigen::VectorXd line(n);
            for (int i = 0; i < n; ++i) {
                c[axis] = i;
                line[i] = ref[grid.index(c[0], c[1], c[2])];
            }
            const auto out = blur_1d(line, 1.2);
            for (int i = 0; i < n; ++i) {
                c[axis] = i;
                next[grid.index(c[0], c[1], c[2])] = out[i];
            }
        }
        ref = next;
    }
    EXPECT_LE((y - ref).norm(), 1e-12 * ref.norm());
}

TEST(Resolution, RecoversTheBlurWidthOfABlurredTruth) {
    fem::VoxelGrid grid({8, 8, 8}, 1.0);
    Eigen::VectorXd truth = Eigen::VectorXd::Constant(grid.size(), 9000);
    for (int z = 3; z < 5; ++z)
        for (int y = 3; y < 5; ++y)
            for (int x = 3; x < 5; ++x) truth[grid.index(x, y, z)] = 5e6;
    const auto est = eval::gaussian_blur(truth, grid, 1.5);
    const auto curve = eval::intrinsic_resolution(est, truth, grid, {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0});
    EXPECT_DOUBLE_EQ(curve.sigma_star, 1.5);
    EXPECT_NEAR(curve.correlations[3], 1.0, 1e-12);
    EXPECT_NE(eval::resolution_csv(curve).find("sigma,correlation"), std::string::npos);
}

TEST(BrightRegion, LocalizesACenteredBox) {
    fem::VoxelGrid grid({6, 6, 6}, 1.0);
    Eigen::VectorXd f = Eigen::VectorXd::Constant(grid.size(), 1.0);
    for (int z = 2; z < 4; ++z)
        for (int y = 2; y < 4; ++y)
            for (int x = 2; x < 4; ++x) f[grid.index(x, y, z)] = 10.0;
    const auto box = eval::bright_region(eval::gaussian_blur(f, grid, 0.7), grid);
    const eval::VoxelBox truth{{2, 2, 2}, {3, 3, 3}};
    EXPECT_TRUE(box.overlaps(truth));
    EXPECT_FALSE(box.overlaps(eval::VoxelBox{{5, 5, 5}, {5, 5, 5}}));
}

TEST(Frequencies, TruthComparedWithItselfIsExact) {
    fem::VoxelGrid grid({3, 3, 3}, 0.05 / 3);
    const auto mesh = fem::build_cube_mesh(grid, fem::CubeFace::Bottom);
    const auto units = fem::assemble_unit_matrices(mesh, 0.3);
    const auto field = fem::MaterialField::homogeneous(grid.size(), 9000, 1270);
    const auto basis = modal::solve_modes(fem::assemble_global(units, field), 6);
    const auto sampler = obs::build_sampling_operator(
        mesh, obs::look_along(Eigen::Vector3d(-1, 1, -1).normalized(), Eigen::Vector3d::UnitZ(), 1e4));
    const auto f = basis.frequencies_hz();
    std::vector<double> ref(f.data(), f.data() + 4);
    Eigen::MatrixXd gammas(sampler.rows(), 4);
    for (int i = 0; i < 4; ++i) gammas.col(i) = (sampler.P * basis.modes.col(i)).normalized();
    const auto cmp = eval::compare_frequencies(field, units, ref, 6, &gammas, &sampler.P);
    ASSERT_EQ(cmp.pairs.size(), 4u);
    EXPECT_LE(cmp.mean_relative_error(), 1e-9);
    for (double s : cmp.mode_similarity) EXPECT_GE(s, 0.99);

    eval::ReconReport report{1.0, 1.0, {}, cmp};
    const auto doc = eval::report_to_json(report);
    EXPECT_EQ(doc.at("corr_w").get<double>(), 1.0);
    EXPECT_NE(eval::frequency_csv(cmp).find("reference_hz"), std::string::npos);
}
