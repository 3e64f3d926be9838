#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "affdim/selfaffine.hpp"

using namespace affdim;

namespace {

AffineIFS sierpinski() {
    const Matrix h = 0.5 * Matrix::identity(2);
    return AffineIFS(LinearTuple{h, h, h}, {{0.0, 0.0}, {0.5, 0.0}, {0.25, 0.5}});
}

AffineIFS skewed() {
    return AffineIFS(LinearTuple{Matrix::from_rows({{0.6, 0.2}, {-0.1, 0.3}}), Matrix::from_rows({{0.3, -0.25}, {0.15, 0.5}})},
                     {{1.0, 0.0}, {-0.5, 0.7}});
}

PointCloud from_points(const std::vector<std::vector<double>>& pts) {
    PointCloud c;
    c.dim = static_cast<int>(pts.front().size());
    for (const auto& p : pts) c.coords.insert(c.coords.end(), p.begin(), p.end());
    return c;
}

}  // namespace

TEST(AffineIFS, RadiusAndValidation) {
    EXPECT_NEAR(sierpinski().radius(), std::hypot(0.25, 0.5) / 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(AffineIFS(LinearTuple{0.5 * Matrix::identity(2)}, {{0.0, 0.0}}).radius(), 1.0);
    EXPECT_THROW(AffineIFS(LinearTuple{Matrix::identity(2)}, {{0.0, 0.0}}), InputError);
    EXPECT_THROW(AffineIFS(LinearTuple{0.5 * Matrix::identity(2)}, {{0.0}}), InputError);
    EXPECT_THROW(AffineIFS(LinearTuple{0.5 * Matrix::identity(2)}, {}), InputError);
}

TEST(AffineIFS, ApplyIsAffine) {
    const AffineIFS ifs = skewed();
    std::vector<double> x{1.0, 2.0};
    ifs.apply(0, x);
    EXPECT_DOUBLE_EQ(x[0], 0.6 + 0.4 + 1.0);
    EXPECT_DOUBLE_EQ(x[1], -0.1 + 0.6);
}

TEST(ChaosGame, StaysInInvariantBallAndIsReproducible) {
    const AffineIFS ifs = skewed();
    const PointCloud a = chaos_game(ifs, 5000, kDefaultBurnIn, 9);
    const PointCloud b = chaos_game(ifs, 5000, kDefaultBurnIn, 9);
    EXPECT_EQ(a.coords, b.coords);
    EXPECT_EQ(a.count(), 5000u);
    for (std::size_t k = 0; k < a.count(); ++k) EXPECT_LE(euclidean_norm(a.point(k)), a.radius * (1.0 + 1e-12));
    EXPECT_NE(a.coords, chaos_game(ifs, 5000, kDefaultBurnIn, 10).coords);
    EXPECT_THROW(chaos_game(ifs, 0, 0, 1), InputError);
}

TEST(EllipsoidCover, CountsAndContainsTheAttractorSample) {
    const AffineIFS ifs = skewed();
    const PointCloud cloud = chaos_game(ifs, 3000, kDefaultBurnIn, 4);
    for (int k = 0; k <= 4; ++k) {
        const EllipsoidCover cover = ellipsoid_cover(ifs, k);
        EXPECT_EQ(cover.pieces.size(), static_cast<std::size_t>(std::pow(2, k)));
        for (std::size_t j = 0; j < cloud.count(); ++j) {
            bool inside = false;
            for (const auto& e : cover.pieces) inside = inside || e.contains(cloud.point(j));
            ASSERT_TRUE(inside) << "level " << k << " point " << j;
        }
    }
}

TEST(EllipsoidCover, CompositionOrderMatchesWordProduct) {
    const AffineIFS ifs = skewed();
    const EllipsoidCover cover = ellipsoid_cover(ifs, 2);
    // lexicographic order: piece 1 is the word (1, 2), i.e. f_1 o f_2
    const Word w{1, 0};
    Matrix expect = word_product(ifs.linear(), w);
    expect *= cover.radius;
    EXPECT_EQ(cover.pieces[1].shape, expect);
    std::vector<double> x{0.0, 0.0};
    ifs.apply(1, x);
    ifs.apply(0, x);
    EXPECT_NEAR(cover.pieces[1].center[0], x[0], 1e-15);
    EXPECT_NEAR(cover.pieces[1].center[1], x[1], 1e-15);
}

TEST(Ellipsoid, SupportFunctionOfDisc) {
    const Ellipsoid e{{1.0, 2.0}, 3.0 * Matrix::identity(2)};
    const double u[2] = {0.6, 0.8};
    EXPECT_NEAR(e.support(u), 0.6 + 1.6 + 3.0, 1e-15);
    const double on[2] = {4.0, 2.0};
    const double off[2] = {4.1, 2.0};
    EXPECT_TRUE(e.contains(on));
    EXPECT_FALSE(e.contains(off));
}

TEST(CoveringCount, ConstantHandFormula) {
    EXPECT_NEAR(content_constant(2, 1.0, 1.5), 3.0 * 2.0 * std::pow(std::sqrt(2.0) / 2.0, 1.5), 1e-15);
    EXPECT_NEAR(content_constant(2, 2.0, 0.5), 4.0 * std::pow(std::sqrt(2.0), 0.5), 1e-15);
    EXPECT_DOUBLE_EQ(content_constant(3, 1.0, 2.0), 9.0 * 2.0 * 0.75);
}

TEST(CoveringCount, SierpinskiCubeCount) {
    // similarities: every ellipsoid is a disc, tiled by 2 x 2 cubes
    for (int k = 0; k <= 3; ++k) {
        const CoveringCount c = covering_count(sierpinski(), k, 1.5);
        EXPECT_EQ(c.ball_count, 4u * static_cast<std::uint64_t>(std::pow(3, k)));
    }
}

TEST(CoveringCount, DirectContentNeverExceedsBound) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Matrix> maps;
        std::vector<Vector> tr;
        for (int i = 0; i < 3; ++i) {
            Matrix a = Matrix::from_rows({{u(rng), u(rng)}, {u(rng), u(rng)}});
            if (!is_invertible(a)) a = Matrix::identity(2);
            a *= 0.7 / singular_values(a).largest();
            maps.push_back(a);
            tr.push_back({u(rng), u(rng)});
        }
        const AffineIFS ifs(LinearTuple(maps), tr);
        for (int k = 0; k <= 3; ++k)
            for (double s : {0.0, 0.5, 1.0, 1.3, 1.9}) {
                const CoveringCount c = covering_count(ifs, k, s);
                EXPECT_LE(c.direct_content, c.content_bound * (1.0 + 1e-12)) << trial << ' ' << k << ' ' << s;
                EXPECT_GT(c.ball_count, 0u);
            }
    }
}

TEST(CoveringCount, Errors) {
    EXPECT_THROW(covering_count(sierpinski(), 2, 2.0), InputError);
    EXPECT_THROW(covering_count(sierpinski(), 2, -0.1), InputError);
    EXPECT_THROW(covering_count(sierpinski(), 20, 1.0), ResourceError);
    EXPECT_THROW(ellipsoid_cover(sierpinski(), -1), InputError);
}

TEST(BoxCounting, OccupiedCellsByHand) {
    const PointCloud c = from_points({{0.0, 0.0}, {0.1, 0.1}, {0.9, 0.0}, {1.0, 1.0}});
    const BoundingBox box = bounding_box(c);
    EXPECT_EQ(occupied_cells(c, box, 0.5), 3u);
    EXPECT_EQ(occupied_cells(c, box, 2.0), 1u);
    EXPECT_EQ(occupied_cells(c, box, 0.05), 4u);
}

TEST(BoxCounting, SquareAndSegment) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointCloud square, segment;
    square.dim = segment.dim = 2;
    for (int k = 0; k < 200000; ++k) {
        const double x = u(rng), y = u(rng);
        square.coords.insert(square.coords.end(), {x, y});
        segment.coords.insert(segment.coords.end(), {x, 0.5 * x});
    }
    EXPECT_NEAR(box_dimension_estimate(square, 1.0 / 128, 1.0 / 8, 5).slope, 2.0, 0.03);
    EXPECT_NEAR(box_dimension_estimate(segment, 1.0 / 512, 1.0 / 16, 6).slope, 1.0, 0.03);
    EXPECT_THROW(box_dimension_estimate(square, 0.1, 0.01, 5), InputError);
    EXPECT_THROW(box_dimension_estimate(square, 0.01, 0.1, 1), InputError);
}

TEST(BoxCounting, UndersampledFlag) {
    const PointCloud c = chaos_game(sierpinski(), 1000, kDefaultBurnIn, 2);
    EXPECT_TRUE(box_dimension_estimate(c, 1.0 / 512, 1.0 / 16, 4).undersampled);
}

TEST(Raster, PgmLayout) {
    const PointCloud c = from_points({{0.0, 1.0}, {1.0, 0.0}});
    const auto img = occupancy_raster(c, 4);
    ASSERT_EQ(img.size(), 16u);
    EXPECT_EQ(img[0], 255);   // top-left
    EXPECT_EQ(img[15], 255);  // bottom-right
    EXPECT_EQ(img[3], 0);
    std::ostringstream os;
    write_pgm(os, img, 4, 4);
    const std::string out = os.str();
    EXPECT_EQ(out.substr(0, 11), "P5\n4 4\n255\n");
    EXPECT_EQ(out.size(), 11u + 16u);
    EXPECT_THROW(write_pgm(os, img, 3, 4), InputError);
}

TEST(Median, OddEvenAndEmpty) {
    EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
    EXPECT_THROW(median({}), InputError);
}

TEST(Falconer, SmallRunAndNormCondition) {
    const LinearTuple t(std::vector<Matrix>(3, Matrix::diagonal({0.45, 0.2})));
    FalconerParams prm;
    prm.trials = 3;
    prm.points = 20000;
    prm.level = 4;
    const FalconerSummary s = falconer_experiment(t, prm);
    EXPECT_EQ(s.trials.size(), 3u);
    EXPECT_NEAR(s.affinity_upper, 1.0 + std::log(3.0 * 0.45) / -std::log(0.2), 1e-8);
    for (const auto& tr : s.trials)
        for (const auto& v : tr.translations)
            for (double x : v) EXPECT_TRUE(x >= 0.0 && x <= 1.0);
    const LinearTuple big(std::vector<Matrix>(2, Matrix::diagonal({0.5, 0.2})));
    EXPECT_THROW(falconer_experiment(big, prm), InputError);
}

TEST(BoxCounting, RightAngleGasketCellCountAtDyadicScale) {
    const Matrix h = 0.5 * Matrix::identity(2);
    const AffineIFS ifs(LinearTuple{h, h, h}, {{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}});
    PointCloud c = chaos_game(ifs, 1000000, kDefaultBurnIn, 42);
    // pin the grid to [0, 1]^2 with the three attractor corners
    c.coords.insert(c.coords.end(), {0.0, 0.0, 1.0, 0.0, 0.0, 1.0});
    const BoundingBox box = bounding_box(c);
    // 3^5 level-5 pieces, one per dyadic cell, plus the cells of (1, 0) and (0, 1)
    EXPECT_EQ(occupied_cells(c, box, 1.0 / 32.0), 243u + 2u);
}
