#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fprint {

/// 8-bit single-channel raster, row-major. Every pixel carrier in the
/// project (raw scans, binarized stacks, orientation maps, HFOMs) uses it.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0);
    GrayImage(int width, int height, std::vector<std::uint8_t> data);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    bool square() const { return width_ == height_; }
    std::size_t size() const { return data_.size(); }

    std::uint8_t at(int row, int col) const { return data_[index(row, col)]; }
    std::uint8_t& at(int row, int col) { return data_[index(row, col)]; }

    /// Replicate-border access: coordinates are clamped into the raster.
    std::uint8_t clamped(int row, int col) const;

    std::span<const std::uint8_t> pixels() const { return data_; }
    std::span<std::uint8_t> pixels() { return data_; }

    /// True when every pixel is 0 or 255.
    bool is_binary() const;

    GrayImage region(int row0, int col0, int rows, int cols) const;
    void paste(const GrayImage& src, int row0, int col0);

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Signed per-pixel filter response, same shape as its source image.
struct Response {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> values;

    std::int32_t at(int row, int col) const {
        return values[static_cast<std::size_t>(row) * width + col];
    }
};

/// 3x3 integer kernel, row-major.
struct Kernel3x3 {
    std::array<int, 9> k{};

    int at(int row, int col) const { return k[row * 3 + col]; }

    /// Positive Laplacian: center +4, 4-neighbours -1, corners 0.
    static constexpr Kernel3x3 laplacian() { return {{0, -1, 0, -1, 4, -1, 0, -1, 0}}; }
};

enum class Rotation : int { r0 = 0, r90 = 1, r180 = 2, r270 = 3 };

inline int degrees(Rotation r) { return static_cast<int>(r) * 90; }
inline Rotation compose(Rotation a, Rotation b) {
    return static_cast<Rotation>((static_cast<int>(a) + static_cast<int>(b)) % 4);
}
inline Rotation inverse(Rotation r) { return static_cast<Rotation>((4 - static_cast<int>(r)) % 4); }

/// White padding added on each side by pad_to_blocks.
struct Padding {
    int top = 0;
    int bottom = 0;
    int left = 0;
    int right = 0;
};

GrayImage load_image(const std::filesystem::path& path);
/// Format is chosen by extension: `.png` writes PNG, anything else PGM (P5).
void save_image(const std::filesystem::path& path, const GrayImage& img);

GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

/// Largest centered square.
GrayImage center_crop_square(const GrayImage& img);
/// Nearest-neighbour resampling with pixel-center alignment.
GrayImage resize_nearest(const GrayImage& img, int width, int height);
/// Center crop followed by nearest-neighbour resize to side x side. side >= 16.
GrayImage crop_resize(const GrayImage& img, int side);

/// pixel >= threshold -> 255, otherwise 0.
GrayImage binarize(const GrayImage& img, int threshold);

/// Padding needed along one axis so that `side` becomes a multiple of `block`.
int block_padding(int side, int block);
/// Split a padding amount between the leading and trailing side. Amounts
/// below 4 go entirely to the leading side (top / left).
std::pair<int, int> split_padding(int amount);
Padding padding_for(const GrayImage& img, int block_side);
/// White-pads so both sides are multiples of block_side (odd, <= each side).
GrayImage pad_to_blocks(const GrayImage& img, int block_side, Padding* applied = nullptr);

/// Lossless quarter turn, counter-clockwise positive. Square input only.
GrayImage rotate_quarter(const GrayImage& img, Rotation angle);

/// True 2-D convolution with 1-pixel replicate border; output matches input size.
Response convolve3x3(const GrayImage& img, const Kernel3x3& kernel);

}  // namespace fprint
