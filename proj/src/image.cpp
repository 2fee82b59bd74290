#include "fprint/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "fprint/error.hpp"

namespace fprint {

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
    if (width < 0 || height < 0) throw Error("negative image dimensions");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0) throw Error("negative image dimensions");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error("pixel buffer length does not match " + std::to_string(width) + "x" +
                    std::to_string(height));
    }
}

std::uint8_t GrayImage::clamped(int row, int col) const {
    row = std::clamp(row, 0, height_ - 1);
    col = std::clamp(col, 0, width_ - 1);
    return data_[index(row, col)];
}

bool GrayImage::is_binary() const {
    return std::all_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v == 0 || v == 255; });
}

GrayImage GrayImage::region(int row0, int col0, int rows, int cols) const {
    if (row0 < 0 || col0 < 0 || rows < 0 || cols < 0 || row0 + rows > height_ ||
        col0 + cols > width_) {
        throw Error("region out of bounds");
    }
    GrayImage out(cols, rows);
    for (int r = 0; r < rows; ++r) {
        const auto* src = data_.data() + index(row0 + r, col0);
        std::copy(src, src + cols, out.data_.data() + out.index(r, 0));
    }
    return out;
}

void GrayImage::paste(const GrayImage& src, int row0, int col0) {
    if (row0 < 0 || col0 < 0 || row0 + src.height_ > height_ || col0 + src.width_ > width_) {
        throw Error("paste out of bounds");
    }
    for (int r = 0; r < src.height_; ++r) {
        const auto* s = src.data_.data() + src.index(r, 0);
        std::copy(s, s + src.width_, data_.data() + index(row0 + r, col0));
    }
}

// ---------------------------------------------------------------------------
// I/O

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw Error("file not found: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool is_png(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw Error(std::string("png decode failed: ") + image.message);
    }
    image.format = PNG_FORMAT_GRAY;
    if (image.width == 0 || image.height == 0) {
        png_image_free(&image);
        throw Error("zero-dimension image");
    }
    std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, data.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw Error("png decode failed: " + msg);
    }
    return GrayImage(static_cast<int>(image.width), static_cast<int>(image.height), std::move(data));
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(image, size, 0, img.pixels().data(), 0, nullptr)) {
        throw Error(std::string("png encode failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels().data(), 0, nullptr)) {
        throw Error(std::string("png encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

// Reads one whitespace/comment separated header integer of a PNM file.
int pnm_header_int(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(bytes[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw Error("malformed PGM header");
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        value = value * 10 + (bytes[pos] - '0');
        if (value > 1 << 24) throw Error("malformed PGM header");
        ++pos;
    }
    return static_cast<int>(value);
}

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw Error("unsupported format: expected binary PGM (P5)");
    }
    std::size_t pos = 2;
    const int width = pnm_header_int(bytes, pos);
    const int height = pnm_header_int(bytes, pos);
    const int maxval = pnm_header_int(bytes, pos);
    if (width == 0 || height == 0) throw Error("zero-dimension image");
    if (maxval != 255) throw Error("unsupported PGM maxval " + std::to_string(maxval));
    ++pos;  // single whitespace before raster
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() < pos + n) throw Error("truncated PGM raster");
    return GrayImage(width, height, std::vector<std::uint8_t>(bytes.begin() + pos, bytes.begin() + pos + n));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    const std::string header =
        "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels().begin(), img.pixels().end());
    return out;
}

GrayImage load_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (is_png(bytes)) return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
    throw Error("unsupported format: " + path.string());
}

void save_image(const std::filesystem::path& path, const GrayImage& img) {
    if (img.empty()) throw Error("refusing to write an empty image");
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto bytes = ext == ".png" ? encode_png(img) : encode_pgm(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Geometry

GrayImage center_crop_square(const GrayImage& img) {
    const int side = std::min(img.width(), img.height());
    return img.region((img.height() - side) / 2, (img.width() - side) / 2, side, side);
}

GrayImage resize_nearest(const GrayImage& img, int width, int height) {
    if (width <= 0 || height <= 0 || img.empty()) throw Error("resize to empty image");
    GrayImage out(width, height);
    for (int r = 0; r < height; ++r) {
        // Source index of the pixel whose center is nearest the output center.
        const int sr = std::min(img.height() - 1,
                                static_cast<int>((2L * r + 1) * img.height() / (2L * height)));
        for (int c = 0; c < width; ++c) {
            const int sc = std::min(img.width() - 1,
                                    static_cast<int>((2L * c + 1) * img.width() / (2L * width)));
            out.at(r, c) = img.at(sr, sc);
        }
    }
    return out;
}

GrayImage crop_resize(const GrayImage& img, int side) {
    if (side < 16) throw Error("crop side must be at least 16, got " + std::to_string(side));
    if (img.empty()) throw Error("zero-dimension image");
    auto square = center_crop_square(img);
    if (square.width() == side) return square;
    return resize_nearest(square, side, side);
}

GrayImage binarize(const GrayImage& img, int threshold) {
    if (threshold < 0 || threshold > 255) {
        throw Error("threshold out of range: " + std::to_string(threshold));
    }
    GrayImage out = img;
    for (auto& p : out.pixels()) p = p >= threshold ? 255 : 0;
    return out;
}

int block_padding(int side, int block) {
    return (side + block - 1) / block * block - side;
}

std::pair<int, int> split_padding(int amount) {
    if (amount < 4) return {amount, 0};
    return {amount / 2, amount - amount / 2};
}

Padding padding_for(const GrayImage& img, int block_side) {
    if (block_side <= 0 || block_side % 2 == 0) {
        throw Error("block side must be odd, got " + std::to_string(block_side));
    }
    if (block_side > img.width() || block_side > img.height()) {
        throw Error("block side " + std::to_string(block_side) + " exceeds image side");
    }
    const auto [top, bottom] = split_padding(block_padding(img.height(), block_side));
    const auto [left, right] = split_padding(block_padding(img.width(), block_side));
    return {top, bottom, left, right};
}

GrayImage pad_to_blocks(const GrayImage& img, int block_side, Padding* applied) {
    const Padding p = padding_for(img, block_side);
    if (applied) *applied = p;
    GrayImage out(img.width() + p.left + p.right, img.height() + p.top + p.bottom, 255);
    out.paste(img, p.top, p.left);
    return out;
}

GrayImage rotate_quarter(const GrayImage& img, Rotation angle) {
    if (!img.square()) throw Error("rotate_quarter needs a square image");
    const int n = img.width();
    GrayImage out(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            switch (angle) {
                case Rotation::r0: out.at(r, c) = img.at(r, c); break;
                case Rotation::r90: out.at(r, c) = img.at(c, n - 1 - r); break;
                case Rotation::r180: out.at(r, c) = img.at(n - 1 - r, n - 1 - c); break;
                case Rotation::r270: out.at(r, c) = img.at(n - 1 - c, r); break;
            }
        }
    }
    return out;
}

Response convolve3x3(const GrayImage& img, const Kernel3x3& kernel) {
    if (img.width() < 3 || img.height() < 3) throw Error("convolution needs at least a 3x3 image");
    Response out{img.width(), img.height(), {}};
    out.values.resize(img.size());
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            std::int32_t acc = 0;
            for (int i = -1; i <= 1; ++i) {
                for (int j = -1; j <= 1; ++j) {
                    acc += kernel.at(i + 1, j + 1) * img.clamped(r - i, c - j);
                }
            }
            out.values[static_cast<std::size_t>(r) * img.width() + c] = acc;
        }
    }
    return out;
}

}  // namespace fprint
