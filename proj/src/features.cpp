#include "fprint/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "fprint/error.hpp"

namespace fprint {

MeanVariance mean_variance(const GrayImage& img) {
    if (img.empty()) throw Error("mean_variance of an empty image");
    // Integer accumulation is exact for any realistic image size.
    std::uint64_t sum = 0;
    std::uint64_t sum_sq = 0;
    for (auto p : img.pixels()) {
        sum += p;
        sum_sq += static_cast<std::uint64_t>(p) * p;
    }
    const auto n = static_cast<std::uint64_t>(img.size());
    const double nd = static_cast<double>(n);
    // n*sum_sq - sum^2 is a non-negative integer; unsigned 128 keeps it exact.
    const unsigned __int128 spread =
        static_cast<unsigned __int128>(n) * sum_sq - static_cast<unsigned __int128>(sum) * sum;
    return {static_cast<double>(sum) / nd, static_cast<double>(spread) / (nd * nd)};
}

// Offsets as (drow, dcol) with rows growing downward; each direction lists the
// four pixels on the positive side followed by their mirror images.
const std::array<Slit, 8>& slit_table() {
    static const std::array<Slit, 8> table{{
        // 0 deg
        {{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, -1}, {0, -2}, {0, -3}, {0, -4}}},
        // 22.5 deg
        {{{0, 1}, {-1, 2}, {-1, 3}, {-2, 4}, {0, -1}, {1, -2}, {1, -3}, {2, -4}}},
        // 45 deg
        {{{-1, 1}, {-2, 2}, {-3, 3}, {-4, 4}, {1, -1}, {2, -2}, {3, -3}, {4, -4}}},
        // 67.5 deg
        {{{-1, 0}, {-2, 1}, {-3, 1}, {-4, 2}, {1, 0}, {2, -1}, {3, -1}, {4, -2}}},
        // 90 deg
        {{{-1, 0}, {-2, 0}, {-3, 0}, {-4, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}}},
        // 112.5 deg
        {{{-1, 0}, {-2, -1}, {-3, -1}, {-4, -2}, {1, 0}, {2, 1}, {3, 1}, {4, 2}}},
        // 135 deg
        {{{-1, -1}, {-2, -2}, {-3, -3}, {-4, -4}, {1, 1}, {2, 2}, {3, 3}, {4, 4}}},
        // 157.5 deg
        {{{0, -1}, {-1, -2}, {-1, -3}, {-2, -4}, {0, 1}, {1, 2}, {1, 3}, {2, 4}}},
    }};
    return table;
}

std::array<int, 8> slit_sums(const GrayImage& img, int row, int col) {
    std::array<int, 8> sums{};
    const auto& table = slit_table();
    for (std::size_t d = 0; d < table.size(); ++d) {
        int s = 0;
        for (const auto& [dr, dc] : table[d]) s += img.clamped(row + dr, col + dc);
        sums[d] = s;
    }
    return sums;
}

namespace {

BlockField make_block_field(const GrayImage& img) {
    BlockField f;
    f.rows = (img.height() + 2) / 3;
    f.cols = (img.width() + 2) / 3;
    f.values.resize(static_cast<std::size_t>(f.rows) * f.cols);
    return f;
}

void finish_average(BlockField& f) {
    double total = 0.0;
    for (double v : f.values) total += v;
    f.average = f.values.empty() ? 0.0 : total / static_cast<double>(f.values.size());
}

}  // namespace

BlockField block_directional_difference(const GrayImage& img) {
    if (img.width() < 9 || img.height() < 9) {
        throw Error("block directional difference needs at least a 9x9 image");
    }
    BlockField f = make_block_field(img);
    for (int i = 0; i < f.rows; ++i) {
        for (int j = 0; j < f.cols; ++j) {
            const auto sums = slit_sums(img, 3 * i, 3 * j);
            const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
            f.values[static_cast<std::size_t>(i) * f.cols + j] = *hi - *lo;
        }
    }
    finish_average(f);
    return f;
}

BlockField orientation_change(const GrayImage& img, const FeatureParams& params) {
    const Response g = convolve3x3(img, params.kernel);
    BlockField f = make_block_field(img);
    for (int i = 0; i < f.rows; ++i) {
        for (int j = 0; j < f.cols; ++j) {
            std::int64_t acc = 0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const int r = std::clamp(3 * i + dr, 0, g.height - 1);
                    const int c = std::clamp(3 * j + dc, 0, g.width - 1);
                    acc += g.at(r, c);
                }
            }
            const double mean = static_cast<double>(acc) / 9.0;
            f.values[static_cast<std::size_t>(i) * f.cols + j] = std::atan(mean / params.theta_scale);
        }
    }
    finish_average(f);
    return f;
}

double block_rvr(const GrayImage& block, int threshold) {
    if (block.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(block.pixels().begin(), block.pixels().end());
    std::size_t ridge = 0;
    std::size_t valley = 0;
    if (*lo == *hi) {
        // Uniform block: no local contrast to split on, classify by absolute level.
        (*lo < threshold ? ridge : valley) = block.size();
    } else {
        std::uint64_t sum = 0;
        for (auto p : block.pixels()) sum += p;
        for (auto p : block.pixels()) {
            // p >= mean  <=>  p * n >= sum
            if (static_cast<std::uint64_t>(p) * block.size() >= sum) {
                ++valley;
            } else {
                ++ridge;
            }
        }
    }
    return static_cast<double>(ridge) / static_cast<double>(std::max<std::size_t>(valley, 1));
}

RvrResult rvr_features(const GrayImage& img, const FeatureParams& params) {
    if (img.empty()) throw Error("rvr_features of an empty image");
    const GrayImage padded = pad_to_blocks(img, params.rvr_block);
    const int b = params.rvr_block;
    RvrResult out;
    for (int r = 0; r < padded.height(); r += b) {
        for (int c = 0; c < padded.width(); c += b) {
            const double rvr = block_rvr(padded.region(r, c, b, b), params.threshold);
            out.per_block.push_back(rvr);
            out.ssrvr += (rvr * params.epsilon) * (rvr * params.epsilon);
        }
    }
    double total = 0.0;
    for (double v : out.per_block) total += v;
    out.rvr_avg = total / static_cast<double>(out.per_block.size());
    return out;
}

FeatureVector extract_features(const GrayImage& img, const FeatureParams& params) {
    const auto mv = mean_variance(img);
    const auto rvr = rvr_features(img, params);
    const auto bdd = block_directional_difference(img);
    const auto theta = orientation_change(img, params);
    return {mv.mu, mv.sigma2, rvr.ssrvr, bdd.average, rvr.rvr_avg, theta.average};
}

}  // namespace fprint
