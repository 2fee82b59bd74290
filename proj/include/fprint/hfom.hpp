#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fprint/features.hpp"
#include "fprint/image.hpp"

namespace fprint {

// ---------------------------------------------------------------------------
// Selection

struct PoolEntry {
    std::string id;
    GrayImage image;
    FeatureVector features;
    Label label = Label::standard;
};

/// Standard-labeled entries sorted ascending by (mu, sigma2, rvr_avg); the
/// first n are returned. Stable for full ties.
std::vector<PoolEntry> select_best_standard(std::span<const PoolEntry> pool, int n);

// ---------------------------------------------------------------------------
// Stack alignment

/// Binarized images of equal size with the quarter turn applied to each.
struct FingerStack {
    std::vector<GrayImage> images;
    std::vector<Rotation> rotations;
    std::size_t common_count = 0;
};

/// Pixel positions where every image equals image 0.
std::size_t common_pixel_count(std::span<const GrayImage> images);
FingerStack make_stack(std::vector<GrayImage> images);

/// Greedy quarter-turn hill climb with image 0 fixed. Each pass tries
/// 90/180/270 on every other image and keeps the turn with the largest
/// strict gain (smallest angle on ties). Stops after a pass without change.
FingerStack min_rotate_max_flow(FingerStack stack);

// ---------------------------------------------------------------------------
// Blocks and orientation fields

struct BlockGrid {
    GrayImage padded;
    int block_side = 0;
    int rows = 0;  // blocks per column
    int cols = 0;  // blocks per row
    Padding padding;

    GrayImage block(int k, int l) const {
        return padded.region(k * block_side, l * block_side, block_side, block_side);
    }
};

BlockGrid split_blocks(const GrayImage& img, int block_side);

/// The four overlapping (h x h, h = (b+1)/2) quadrants of an odd block; all
/// share the block's center pixel. Order: top-left, top-right, bottom-left,
/// bottom-right.
std::array<GrayImage, 4> sub_blocks(const GrayImage& block);

enum class LineAngle : int { deg0 = 0, deg45 = 45, deg90 = 90 };
using MaybeAngle = std::optional<LineAngle>;

/// Dominant line through the shared corner of sub-block `eta` (0..3, same
/// order as sub_blocks). The sub-block is turned so the corner sits bottom
/// left, black pixels are counted on the row, diagonal and column leaving
/// it, and the winning direction is turned back. Needs >= 2 pixels.
MaybeAngle subblock_orientation(const GrayImage& sub, int eta);

struct BlockOrientation {
    GrayImage rendering;
    MaybeAngle angle;
};

/// Majority vote over the sub-block angles (smaller angle on ties), drawn as
/// a one-pixel black line through the block center on white.
MaybeAngle vote(std::span<const MaybeAngle> votes);
GrayImage render_line(int block_side, MaybeAngle angle);
BlockOrientation block_orientation_field(const GrayImage& block);

struct OrientationMap {
    GrayImage image;
    int block_side = 0;
    int rows = 0;
    int cols = 0;
    std::vector<MaybeAngle> angles;  // row-major per block
    std::vector<Rotation> block_rotations;

    MaybeAngle angle(int k, int l) const { return angles[static_cast<std::size_t>(k) * cols + l]; }
};

/// Input must already be padded to a multiple of block_side and binarized.
OrientationMap orientation_map(const GrayImage& padded, int block_side);

/// Per-block quarter-turn hill climb across the stack of maps (map 0 fixed).
std::vector<OrientationMap> refine_blocks(std::vector<OrientationMap> maps);
std::size_t common_pixel_count(std::span<const OrientationMap> maps);

// ---------------------------------------------------------------------------
// Assembly

struct QuadrantSource {
    int quadrant = 0;  // 1 = top-left, 2 = top-right, 3 = bottom-left, 4 = bottom-right
    int source = 0;    // index into the map list
};

struct Hfom {
    GrayImage image;
    std::array<QuadrantSource, 4> provenance{};
};

/// Quadrant q (0-based) of an even-sided image.
GrayImage quadrant(const GrayImage& img, int q);
/// Appends a white row/column when a side is odd.
GrayImage even_sided(const GrayImage& img);

/// Joins one quadrant from each of four distinct maps. Without a seed the
/// assignment is quadrant k <- map k-1; with a seed the first four maps are
/// permuted.
Hfom assemble_hfom(std::span<const OrientationMap> maps, std::optional<std::uint64_t> assignment_seed = std::nullopt);

// ---------------------------------------------------------------------------
// Similarity

/// Mean SSIM over 7x7 uniform windows with 8-bit constants, shifted by +1
/// into [0, 2].
double ssim(const GrayImage& a, const GrayImage& b);

// ---------------------------------------------------------------------------
// Pipeline

struct HfomConfig {
    int n = 10;
    int threshold = 127;
    int block_side = 15;
    std::optional<std::uint64_t> assignment_seed;
};

struct StageCount {
    std::string stage;
    std::size_t common_pixels = 0;
};

struct HfomResult {
    Hfom hfom;
    std::vector<StageCount> stages;  // five rows, pipeline order
    std::vector<std::string> selected_ids;
    FingerStack aligned;
    std::vector<OrientationMap> initial_maps;
    std::vector<OrientationMap> refined_maps;
};

HfomResult hfom_pipeline(std::span<const PoolEntry> pool, const HfomConfig& cfg);

std::string stage_report(const HfomResult& r);

}  // namespace fprint
