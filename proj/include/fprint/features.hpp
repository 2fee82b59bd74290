#pragma once

#include <array>
#include <string>
#include <vector>

#include "fprint/image.hpp"
#include "fprint/label.hpp"

namespace fprint {

inline constexpr std::size_t kFeatureCount = 6;

/// Six-scalar description of one fingerprint scan.
struct FeatureVector {
    double mu = 0.0;         // mean intensity
    double sigma2 = 0.0;     // intensity variance
    double ssrvr = 0.0;      // epsilon-scaled squared ridge/valley ratio sum
    double bdd_avg = 0.0;    // mean block directional difference
    double rvr_avg = 0.0;    // mean ridge/valley ratio
    double theta_avg = 0.0;  // mean orientation change, radians

    std::array<double, kFeatureCount> as_array() const {
        return {mu, sigma2, ssrvr, bdd_avg, rvr_avg, theta_avg};
    }
    static FeatureVector from_array(const std::array<double, kFeatureCount>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5]};
    }
    double operator[](std::size_t i) const { return as_array()[i]; }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames{
    "mu", "sigma2", "ssrvr", "bdd_avg", "rvr_avg", "theta_avg"};

struct LabeledSample {
    FeatureVector features;
    Label label = Label::standard;
    std::string source_id;
};

struct FeatureParams {
    /// Block side for the ridge/valley ratio; must be odd.
    int rvr_block = 15;
    /// Scale factor applied before squaring in ssrvr.
    double epsilon = 1e16;
    /// Uniform blocks darker than this count as ridge.
    int threshold = 127;
    /// Mean Laplacian response is divided by this before arctan.
    double theta_scale = 255.0;
    Kernel3x3 kernel = Kernel3x3::laplacian();
};

struct MeanVariance {
    double mu = 0.0;
    double sigma2 = 0.0;
};

/// Population mean and variance.
MeanVariance mean_variance(const GrayImage& img);

/// Per-block raster plus its mean.
struct BlockField {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;
    double average = 0.0;

    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

/// Offsets (drow, dcol) of the 8 pixels of one slit, center excluded.
using Slit = std::array<std::array<int, 2>, 8>;

/// The 8 slits of the 9x9 mask, at 22.5 degree steps starting horizontal.
const std::array<Slit, 8>& slit_table();

/// Slit sums of the 9x9 window centered on (row, col), replicate border.
std::array<int, 8> slit_sums(const GrayImage& img, int row, int col);

/// Block directional difference. The image is viewed with a 1-pixel
/// replicate margin and tiled by 3x3 blocks; block (i, j) is centered on
/// source pixel (3i, 3j). Needs at least 9x9.
BlockField block_directional_difference(const GrayImage& img);

/// Signed arctan of the scaled mean Laplacian response per 3x3 block.
BlockField orientation_change(const GrayImage& img, const FeatureParams& params = {});

struct RvrResult {
    double rvr_avg = 0.0;
    double ssrvr = 0.0;
    std::vector<double> per_block;
};

/// Ridge (dark) over valley (light) pixel count per block after binarizing
/// each block at its own mean.
double block_rvr(const GrayImage& block, int threshold);
RvrResult rvr_features(const GrayImage& img, const FeatureParams& params = {});

FeatureVector extract_features(const GrayImage& img, const FeatureParams& params = {});

}  // namespace fprint
