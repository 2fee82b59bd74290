#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fprint/error.hpp"
#include "fprint/features.hpp"
#include "support.hpp"

using namespace fprint;
using testing_support::random_image;

namespace {

MeanVariance two_pass(const GrayImage& img) {
    double s = 0;
    for (auto p : img.pixels()) s += p;
    const double mu = s / static_cast<double>(img.size());
    double v = 0;
    for (auto p : img.pixels()) v += (p - mu) * (p - mu);
    return {mu, v / static_cast<double>(img.size())};
}

// slit pixels by angle, stepping in max-norm so diagonals hit the corners
std::array<int, 8> slit_oracle(const GrayImage& img, int r, int c) {
    std::array<int, 8> out{};
    for (int d = 0; d < 8; ++d) {
        const double a = d * std::numbers::pi / 8;
        const double norm = std::max(std::abs(std::sin(a)), std::abs(std::cos(a)));
        for (int t = -4; t <= 4; ++t) {
            if (t == 0) continue;
            int dr = -static_cast<int>(std::lround(t * std::sin(a) / norm));
            int dc = static_cast<int>(std::lround(t * std::cos(a) / norm));
            out[d] += img.clamped(r + dr, c + dc);
        }
    }
    return out;
}

}  // namespace

TEST(MeanVariance, Examples) {
    auto c = mean_variance(GrayImage(4, 4, 128));
    EXPECT_DOUBLE_EQ(c.mu, 128);
    EXPECT_DOUBLE_EQ(c.sigma2, 0);
    auto m = mean_variance(GrayImage(2, 2, std::vector<std::uint8_t>{0, 255, 0, 255}));
    EXPECT_DOUBLE_EQ(m.mu, 127.5);
    EXPECT_DOUBLE_EQ(m.sigma2, 16256.25);
}

TEST(MeanVariance, MatchesTwoPass) {
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        auto img = random_image(rng, 13, 9);
        auto a = mean_variance(img), b = two_pass(img);
        EXPECT_NEAR(a.mu, b.mu, 1e-9 * b.mu);
        EXPECT_NEAR(a.sigma2, b.sigma2, 1e-9 * std::max(1.0, b.sigma2));
    }
}

TEST(SlitTable, EightPixelsNoCentreDistinctDirections) {
    const auto& t = slit_table();
    for (const auto& slit : t) {
        for (const auto& [dr, dc] : slit) {
            EXPECT_FALSE(dr == 0 && dc == 0);
            EXPECT_LE(std::max(std::abs(dr), std::abs(dc)), 4);
        }
    }
    Rng rng(8);
    auto probe = random_image(rng, 9, 9);
    EXPECT_EQ(slit_sums(probe, 4, 4), slit_oracle(probe, 4, 4));
}

TEST(Bdd, ConstantIsZero) {
    auto f = block_directional_difference(GrayImage(12, 12, 77));
    EXPECT_EQ(f.average, 0);
    for (double v : f.values) EXPECT_EQ(v, 0);
}

TEST(Bdd, BlackRowThroughCentre) {
    // Every non-horizontal slit meets the black row only at the excluded centre,
    // so they all sum 8*255 while the row slit sums 0.
    GrayImage img(9, 9, 255);
    for (int c = 0; c < 9; ++c) img.at(3, c) = 0;
    auto f = block_directional_difference(img);
    EXPECT_EQ(f.at(1, 1), 2040);
    EXPECT_EQ(*std::max_element(f.values.begin(), f.values.end()), 2040);
}

TEST(Bdd, MatchesSlitOracle) {
    Rng rng(12);
    for (int i = 0; i < 10; ++i) {
        auto img = random_image(rng, 9, 9);
        auto f = block_directional_difference(img);
        for (int r = 0; r < f.rows; ++r)
            for (int c = 0; c < f.cols; ++c) {
                auto s = slit_oracle(img, 3 * r, 3 * c);
                EXPECT_EQ(f.at(r, c), *std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()));
            }
    }
    EXPECT_THROW(block_directional_difference(GrayImage(8, 9)), Error);
}

TEST(OrientationChange, ConstantIsZero) {
    auto f = orientation_change(GrayImage(9, 9, 40));
    for (double v : f.values) EXPECT_EQ(v, 0);
}

TEST(OrientationChange, UnitResponseIsQuarterPi) {
    Rng rng(6);
    auto img = random_image(rng, 9, 9);
    auto g = convolve3x3(img, Kernel3x3::laplacian());
    // block (1,1) averages the response over rows/cols 2..4
    double mean = 0;
    for (int r = 2; r <= 4; ++r)
        for (int c = 2; c <= 4; ++c) mean += g.at(r, c);
    mean /= 9;
    ASSERT_NE(mean, 0);
    FeatureParams p;
    p.theta_scale = mean;
    EXPECT_NEAR(orientation_change(img, p).at(1, 1), std::numbers::pi / 4, 1e-12);
}

TEST(OrientationChange, MatchesOracle) {
    Rng rng(7);
    for (int i = 0; i < 10; ++i) {
        auto img = random_image(rng, 10, 8);
        auto g = convolve3x3(img, Kernel3x3::laplacian());
        auto f = orientation_change(img);
        for (int r = 0; r < f.rows; ++r)
            for (int c = 0; c < f.cols; ++c) {
                double m = 0;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc)
                        m += g.at(std::clamp(3 * r + dr, 0, 7), std::clamp(3 * c + dc, 0, 9));
                EXPECT_NEAR(f.at(r, c), std::atan(m / 9 / 255), 1e-9);
                EXPECT_LT(std::abs(f.at(r, c)), std::numbers::pi / 2);
            }
    }
}

TEST(Rvr, AllWhite) {
    auto r = rvr_features(GrayImage(160, 160, 255));
    EXPECT_EQ(r.rvr_avg, 0);
    EXPECT_EQ(r.ssrvr, 0);
}

TEST(Rvr, AllBlackHitsGuard) {
    // 150 is a multiple of 15 so no white padding enters any block
    auto r = rvr_features(GrayImage(150, 150, 0));
    EXPECT_DOUBLE_EQ(r.rvr_avg, 225.0);
    for (double v : r.per_block) EXPECT_DOUBLE_EQ(v, 225.0);
}

TEST(Rvr, SquaredScaledSum) {
    // 150 ridge, 75 valley pixels -> RVR 2
    GrayImage block(15, 15, 0);
    for (int i = 0; i < 75; ++i) block.pixels()[static_cast<std::size_t>(i)] = 255;
    EXPECT_DOUBLE_EQ(block_rvr(block, 127), 2.0);
    FeatureParams p;
    p.epsilon = 1.0;
    EXPECT_DOUBLE_EQ(rvr_features(block, p).ssrvr, 4.0);
    p.epsilon = 1e-16;
    EXPECT_NEAR(rvr_features(block, p).ssrvr, 4e-32, 1e-45);
}

TEST(Extract, CompositionAndDeterminism) {
    Rng rng(21);
    auto img = random_image(rng, 40, 40);
    auto f = extract_features(img);
    EXPECT_EQ(f, extract_features(img));
    auto mv = mean_variance(img);
    auto rv = rvr_features(img);
    EXPECT_EQ(f.mu, mv.mu);
    EXPECT_EQ(f.sigma2, mv.sigma2);
    EXPECT_EQ(f.ssrvr, rv.ssrvr);
    EXPECT_EQ(f.rvr_avg, rv.rvr_avg);
    EXPECT_EQ(f.bdd_avg, block_directional_difference(img).average);
    EXPECT_EQ(f.theta_avg, orientation_change(img).average);

    auto c = extract_features(GrayImage(30, 30, 128));
    EXPECT_EQ(c.mu, 128);
    EXPECT_EQ(c.sigma2, 0);
    EXPECT_EQ(c.bdd_avg, 0);
    EXPECT_EQ(c.theta_avg, 0);
}

TEST(Extract, EpsilonScalesOnlySsrvr) {
    Rng rng(30);
    for (int i = 0; i < 5; ++i) {
        auto img = random_image(rng, 32, 32);
        FeatureParams a, b;
        b.epsilon = 3 * a.epsilon;
        auto fa = extract_features(img, a), fb = extract_features(img, b);
        EXPECT_NEAR(fb.ssrvr, 9 * fa.ssrvr, 1e-12 * fb.ssrvr);
        EXPECT_EQ(fa.mu, fb.mu);
        EXPECT_EQ(fa.sigma2, fb.sigma2);
        EXPECT_EQ(fa.bdd_avg, fb.bdd_avg);
        EXPECT_EQ(fa.rvr_avg, fb.rvr_avg);
        EXPECT_EQ(fa.theta_avg, fb.theta_avg);
    }
}

TEST(Extract, ZeroSpreadExactlyWhenConstant) {
    Rng rng(31);
    auto img = random_image(rng, 30, 30);
    auto f = extract_features(img);
    EXPECT_GT(f.sigma2, 0);
    EXPECT_GT(f.bdd_avg, 0);
    EXPECT_GE(f.ssrvr, 0);
    EXPECT_GE(f.rvr_avg, 0);
}
