#include <gtest/gtest.h>

#include <set>

#include "fprint/cli_support.hpp"
#include "fprint/error.hpp"
#include "fprint/hfom.hpp"
#include "support.hpp"

using namespace fprint;
using testing_support::random_binary;

namespace {

std::size_t common_oracle(const std::vector<GrayImage>& s) {
    std::size_t n = 0;
    for (int r = 0; r < s[0].height(); ++r)
        for (int c = 0; c < s[0].width(); ++c) {
            bool same = true;
            for (const auto& img : s) same = same && img.at(r, c) == s[0].at(r, c);
            n += same;
        }
    return n;
}

PoolEntry entry(const std::string& id, double mu, double sigma2, double rvr, Label l = Label::standard) {
    PoolEntry e;
    e.id = id;
    e.image = GrayImage(16, 16, 255);
    e.features.mu = mu;
    e.features.sigma2 = sigma2;
    e.features.rvr_avg = rvr;
    e.label = l;
    return e;
}

OrientationMap single_block(MaybeAngle a) {
    OrientationMap m;
    m.block_side = 15;
    m.rows = m.cols = 1;
    m.image = render_line(15, a);
    m.angles = {a};
    m.block_rotations = {Rotation::r0};
    return m;
}

std::vector<PoolEntry> synth_pool(std::uint64_t seed, int count) {
    std::vector<PoolEntry> pool;
    for (int i = 0; i < count; ++i) {
        auto img = synth_image(Label::standard, Rng::derive(seed, static_cast<std::uint64_t>(i)));
        auto f = extract_features(img);
        pool.push_back({"s" + std::to_string(i), std::move(img), f, Label::standard});
    }
    return pool;
}

}  // namespace

TEST(Select, SortsAndBreaksTies) {
    std::vector<PoolEntry> pool{entry("a", 5, 1, 1), entry("b", 3, 9, 1), entry("c", 3, 2, 1), entry("d", 4, 0, 0),
                                entry("x", 0, 0, 0, Label::wet)};
    auto s = select_best_standard(pool, 4);
    std::vector<std::string> ids;
    for (const auto& e : s) ids.push_back(e.id);
    EXPECT_EQ(ids, (std::vector<std::string>{"c", "b", "d", "a"}));
    EXPECT_THROW(select_best_standard(pool, 5), Error);
}

TEST(Select, MatchesFullSort) {
    Rng rng(3);
    std::vector<PoolEntry> pool;
    for (int i = 0; i < 40; ++i)
        pool.push_back(entry(std::to_string(i), static_cast<double>(rng.index(4)), static_cast<double>(rng.index(4)),
                             rng.uniform(), kAllLabels[rng.index(3)]));
    std::vector<PoolEntry> oracle;
    for (const auto& e : pool)
        if (e.label == Label::standard) oracle.push_back(e);
    std::stable_sort(oracle.begin(), oracle.end(), [](const PoolEntry& a, const PoolEntry& b) {
        return std::tie(a.features.mu, a.features.sigma2, a.features.rvr_avg) <
               std::tie(b.features.mu, b.features.sigma2, b.features.rvr_avg);
    });
    auto got = select_best_standard(pool, 4);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(got[i].id, oracle[i].id);
}

TEST(CommonPixels, Examples) {
    Rng rng(1);
    auto a = random_binary(rng, 8, 8);
    EXPECT_EQ(common_pixel_count(std::vector<GrayImage>{a, a, a}), 64u);
    GrayImage inv = a;
    for (auto& p : inv.pixels()) p = static_cast<std::uint8_t>(255 - p);
    EXPECT_EQ(common_pixel_count(std::vector<GrayImage>{a, inv}), 0u);
    for (int i = 0; i < 20; ++i) {
        std::vector<GrayImage> s;
        for (int k = 0; k < 4; ++k) s.push_back(random_binary(rng, 8, 8));
        EXPECT_EQ(common_pixel_count(s), common_oracle(s));
    }
    EXPECT_THROW(common_pixel_count(std::vector<GrayImage>{GrayImage(4, 4), GrayImage(5, 4)}), Error);
}

TEST(MinRotate, IdenticalUnchanged) {
    Rng rng(2);
    auto a = random_binary(rng, 10, 10);
    auto out = min_rotate_max_flow(make_stack({a, a, a}));
    for (const auto& img : out.images) EXPECT_EQ(img, a);
    for (auto r : out.rotations) EXPECT_EQ(r, Rotation::r0);
}

TEST(MinRotate, UndoesQuarterTurn) {
    Rng rng(4);
    auto a = random_binary(rng, 12, 12);
    auto b = rotate_quarter(a, Rotation::r90);
    auto out = min_rotate_max_flow(make_stack({a, b}));
    EXPECT_EQ(out.images[1], a);
    EXPECT_EQ(out.common_count, 144u);
    EXPECT_EQ(rotate_quarter(b, out.rotations[1]), out.images[1]);
}

TEST(MinRotate, NeverLowersCountAndKeepsBookkeeping) {
    Rng rng(5);
    for (int t = 0; t < 10; ++t) {
        std::vector<GrayImage> imgs;
        for (int k = 0; k < 4; ++k) imgs.push_back(random_binary(rng, 9, 9));
        auto before = common_pixel_count(imgs);
        auto out = min_rotate_max_flow(make_stack(imgs));
        EXPECT_GE(out.common_count, before);
        EXPECT_EQ(out.common_count, common_oracle(out.images));
        for (std::size_t k = 0; k < imgs.size(); ++k) EXPECT_EQ(rotate_quarter(imgs[k], out.rotations[k]), out.images[k]);
    }
    EXPECT_THROW(min_rotate_max_flow(make_stack({GrayImage(4, 4, 3), GrayImage(4, 4, 0)})), Error);
}

TEST(SplitBlocks, GridShapes) {
    auto g = split_blocks(GrayImage(160, 160, 0), 15);
    EXPECT_EQ(g.rows, 11);
    EXPECT_EQ(g.padded.width(), 165);
    auto one = split_blocks(GrayImage(15, 15, 0), 15);
    EXPECT_EQ(one.rows, 1);
    EXPECT_EQ(one.padding.left + one.padding.right, 0);
    // blocks tile the padded image
    Rng rng(6);
    auto img = testing_support::random_image(rng, 45, 45);
    auto grid = split_blocks(img, 15);
    GrayImage rebuilt(45, 45, 1);
    for (int k = 0; k < grid.rows; ++k)
        for (int l = 0; l < grid.cols; ++l) rebuilt.paste(grid.block(k, l), 15 * k, 15 * l);
    EXPECT_EQ(rebuilt, grid.padded);
}

TEST(SubBlocks, SidesAndCentre) {
    for (int b : {3, 15}) {
        GrayImage block(b, b);
        for (int r = 0; r < b; ++r)
            for (int c = 0; c < b; ++c) block.at(r, c) = static_cast<std::uint8_t>(r * b + c);
        auto q = sub_blocks(block);
        const int h = (b + 1) / 2;
        for (int i = 0; i < 4; ++i) EXPECT_EQ(q[i].width(), h);
        const auto centre = block.at(b / 2, b / 2);
        EXPECT_EQ(q[0].at(h - 1, h - 1), centre);
        EXPECT_EQ(q[1].at(h - 1, 0), centre);
        EXPECT_EQ(q[2].at(0, h - 1), centre);
        EXPECT_EQ(q[3].at(0, 0), centre);
    }
    EXPECT_THROW(sub_blocks(GrayImage(4, 4)), Error);
}

TEST(SubblockOrientation, Examples) {
    // sub-block 1 (top right) shares the centre at its bottom-left corner
    EXPECT_FALSE(subblock_orientation(GrayImage(8, 8, 255), 1).has_value());

    GrayImage row(8, 8, 255);
    for (int c = 0; c < 8; ++c) row.at(7, c) = 0;
    EXPECT_EQ(subblock_orientation(row, 1), LineAngle::deg0);

    GrayImage diag(8, 8, 255);
    for (int t = 0; t < 8; ++t) diag.at(7 - t, t) = 0;
    diag.at(7, 4) = 0;  // stray on the row: row count 2, diagonal 8
    EXPECT_EQ(subblock_orientation(diag, 1), LineAngle::deg45);

    GrayImage col(8, 8, 255);
    for (int r = 0; r < 8; ++r) col.at(r, 0) = 0;
    EXPECT_EQ(subblock_orientation(col, 1), LineAngle::deg90);

    // a horizontal line through the centre reads 0 from every corner
    GrayImage block(15, 15, 255);
    for (int c = 0; c < 15; ++c) block.at(7, c) = 0;
    auto q = sub_blocks(block);
    for (int eta = 0; eta < 4; ++eta) EXPECT_EQ(subblock_orientation(q[eta], eta), LineAngle::deg0) << eta;

    EXPECT_THROW(subblock_orientation(GrayImage(8, 8, 100), 1), Error);
}

TEST(BlockField, VotesAndRendering) {
    std::vector<MaybeAngle> v1{LineAngle::deg0, LineAngle::deg0, LineAngle::deg90, std::nullopt};
    EXPECT_EQ(vote(v1), LineAngle::deg0);
    std::vector<MaybeAngle> v2{LineAngle::deg90, std::nullopt, LineAngle::deg0, std::nullopt};
    EXPECT_EQ(vote(v2), LineAngle::deg0);
    std::vector<MaybeAngle> v3(4);
    EXPECT_FALSE(vote(v3).has_value());

    GrayImage block(15, 15, 255);
    for (int c = 0; c < 15; ++c) block.at(7, c) = 0;
    auto f = block_orientation_field(block);
    EXPECT_EQ(f.angle, LineAngle::deg0);
    EXPECT_EQ(f.rendering, block);
    EXPECT_EQ(render_line(15, std::nullopt), GrayImage(15, 15, 255));
}

TEST(OrientationMapTest, Examples) {
    auto blank = orientation_map(GrayImage(30, 30, 255), 15);
    EXPECT_EQ(blank.image, GrayImage(30, 30, 255));
    for (auto a : blank.angles) EXPECT_FALSE(a.has_value());

    // stripes of period 3 that pass through every block centre row
    GrayImage stripes(45, 30, 255);
    for (int r = 0; r < 30; ++r)
        if (r % 3 == 1)
            for (int c = 0; c < 45; ++c) stripes.at(r, c) = 0;
    auto m = orientation_map(stripes, 15);
    EXPECT_EQ(m.image.width(), 45);
    EXPECT_EQ(m.image.height(), 30);
    for (auto a : m.angles) EXPECT_EQ(a, LineAngle::deg0);
    EXPECT_TRUE(m.image.is_binary());
}

TEST(Refine, AlignsCrossedLines) {
    std::vector<OrientationMap> maps{single_block(LineAngle::deg0), single_block(LineAngle::deg90)};
    const auto before = common_pixel_count(maps);
    auto out = refine_blocks(maps);
    EXPECT_GT(common_pixel_count(out), before);
    EXPECT_EQ(out[1].image, out[0].image);
    EXPECT_EQ(out[1].block_rotations[0], Rotation::r90);

    std::vector<OrientationMap> same{single_block(LineAngle::deg45), single_block(LineAngle::deg45)};
    auto s = refine_blocks(same);
    EXPECT_EQ(s[1].image, same[1].image);
}

TEST(Assemble, QuadrantsAndProvenance) {
    Rng rng(8);
    std::vector<OrientationMap> maps;
    for (int i = 0; i < 6; ++i) {
        OrientationMap m;
        m.image = random_binary(rng, 15, 15);
        maps.push_back(m);
    }
    auto h = assemble_hfom(maps);
    EXPECT_EQ(h.image.width(), 16);
    for (int q = 0; q < 4; ++q) {
        EXPECT_EQ(h.provenance[q].source, q);
        EXPECT_EQ(quadrant(h.image, q), quadrant(even_sided(maps[static_cast<std::size_t>(q)].image), q));
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto hs = assemble_hfom(maps, seed);
        std::set<int> zs, is;
        for (const auto& p : hs.provenance) zs.insert(p.source), is.insert(p.quadrant);
        EXPECT_EQ(zs.size(), 4u);
        EXPECT_EQ(is.size(), 4u);
        for (int q = 0; q < 4; ++q)
            EXPECT_EQ(quadrant(hs.image, q), quadrant(even_sided(maps[static_cast<std::size_t>(hs.provenance[q].source)].image), q));
    }
    std::vector<OrientationMap> four(4, maps[0]);
    EXPECT_EQ(assemble_hfom(four).image, even_sided(maps[0].image));
    EXPECT_THROW(assemble_hfom(std::span<const OrientationMap>(maps.data(), 3)), Error);
}

TEST(Ssim, IdentitySymmetryAndConstants) {
    Rng rng(10);
    auto a = testing_support::random_image(rng, 20, 20), b = testing_support::random_image(rng, 20, 20);
    EXPECT_NEAR(ssim(a, a), 2.0, 1e-9);
    EXPECT_DOUBLE_EQ(ssim(a, b), ssim(b, a));
    const double s = ssim(a, b);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 2.0);
    // constant windows: raw score is C1 / (255^2 + C1)
    const double c1 = (0.01 * 255) * (0.01 * 255);
    EXPECT_NEAR(ssim(GrayImage(16, 16, 0), GrayImage(16, 16, 255)), 1.0 + c1 / (255.0 * 255.0 + c1), 1e-12);
    EXPECT_THROW(ssim(GrayImage(8, 8), GrayImage(9, 8)), Error);
}

TEST(Pipeline, StagesDeterminismAndErrors) {
    auto pool = synth_pool(3, 6);
    HfomConfig cfg;
    cfg.n = 5;
    auto r = hfom_pipeline(pool, cfg);
    ASSERT_EQ(r.stages.size(), 5u);
    std::vector<std::string> names;
    for (const auto& s : r.stages) names.push_back(s.stage);
    EXPECT_EQ(names, (std::vector<std::string>{"No Change", "Binarization", "Fingerprint Rotation",
                                               "Ridge Orientation Fields Generation",
                                               "Orientation Map Modification at Block Level"}));
    EXPECT_GE(r.stages[2].common_pixels, r.stages[1].common_pixels);
    EXPECT_GE(r.stages[4].common_pixels, r.stages[3].common_pixels);
    EXPECT_EQ(encode_pgm(hfom_pipeline(pool, cfg).hfom.image), encode_pgm(r.hfom.image));
    EXPECT_NE(stage_report(r).find("Binarization"), std::string::npos);

    cfg.n = 10;
    try {
        hfom_pipeline(pool, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("insufficient standard fingerprints"), std::string::npos);
    }
}
