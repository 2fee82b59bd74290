#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fprint/dataset.hpp"
#include "fprint/image.hpp"
#include "fprint/random.hpp"

namespace testing_support {

using namespace fprint;

inline GrayImage random_image(Rng& rng, int w, int h, int levels = 256) {
    GrayImage img(w, h);
    for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.index(levels) * (255 / (levels - 1)));
    return img;
}

inline GrayImage random_binary(Rng& rng, int w, int h) { return random_image(rng, w, h, 2); }

/// Axis-aligned Gaussian blobs, one per class, spaced `spacing` apart on
/// every feature. Values stay positive so clamping never triggers.
inline Dataset gaussian_dataset(std::uint64_t seed, std::size_t n_dry, std::size_t n_standard, std::size_t n_wet,
                                double sigma = 1.0, double spacing = 2.0) {
    Rng rng(seed);
    Dataset d;
    const std::size_t counts[3] = {n_dry, n_standard, n_wet};
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < counts[c]; ++i) {
            std::array<double, kFeatureCount> v{};
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                const double base = f == 5 ? 0.0 : 20.0;
                const double scale = f == 5 ? 0.1 : 1.0;
                v[f] = (base + spacing * static_cast<double>(c) + sigma * rng.normal()) * scale;
            }
            d.add({FeatureVector::from_array(v), kAllLabels[c], std::to_string(c) + "-" + std::to_string(i)});
        }
    }
    return d;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("fprint-test-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testing_support
