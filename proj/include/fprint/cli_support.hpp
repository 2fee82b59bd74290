#pragma once

// Plumbing behind the command-line tool: manifests, run configuration,
// feature tables and the synthetic scan generator.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fprint/dataset.hpp"
#include "fprint/hfom.hpp"
#include "fprint/random.hpp"
#include "fprint/ucflem.hpp"

namespace fprint {

struct ManifestRow {
    std::filesystem::path path;  // resolved
    std::optional<Label> label;
};

struct Manifest {
    std::vector<ManifestRow> rows;
};

/// CSV with header `path,label`. Relative paths resolve against the
/// manifest's directory; labels may be empty.
Manifest parse_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& m);

struct RunConfig {
    int side = 160;
    int threshold = 127;
    int block_side = 15;
    int n = 10;
    double epsilon = 1e16;
    double split = 0.7;
    double validation = 0.2;
    std::uint64_t seed = 42;
    bool balance = true;
    int rf_trees = 100;
    int rf_max_depth = 8;
    int rf_features = 3;
    int gb_rounds = 100;
    double gb_learning_rate = 0.1;
    int gb_max_depth = 3;
    double balance_step = 1.0;
    int balance_attempts = 50;
    std::optional<std::uint64_t> assignment_seed;

    FeatureParams feature_params() const;
    UcflemConfig ucflem() const;
    HfomConfig hfom() const;
    /// Throws when a value falls outside what the consuming module accepts.
    void validate() const;
};

/// Flat `key = value` text; `#` starts a comment. Unknown keys are errors.
RunConfig parse_config(const std::string& text, const RunConfig& base = {});
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = {});
std::string format_config(const RunConfig& c);

struct FeatureRow {
    std::string source_id;
    FeatureVector features;
    std::optional<Label> label;
};

/// `source_id,mu,sigma2,ssrvr,bdd_avg,rvr_avg,theta_avg,label`, values with
/// 17 significant digits so a round trip is exact.
std::string format_feature_csv(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> parse_feature_csv(const std::filesystem::path& path);
/// Labeled rows only; throws if any row is unlabeled.
Dataset to_dataset(const std::vector<FeatureRow>& rows);

struct SynthCounts {
    int dry = 0;
    int standard = 0;
    int wet = 0;
};

/// Synthetic scan driven by a latent moisture in [-1, 1]: oriented, gently
/// curved sinusoidal ridges whose brightness, contrast and ridge width shift
/// with moisture. Negative moisture adds light patches where ridges vanish,
/// positive moisture dark patches where valleys fill.
GrayImage render_scan(double moisture, std::uint64_t seed, int side = 160);

/// Moisture drawn from the class range (dry [-1, -0.25], standard
/// [-0.4, 0.4], wet [0.25, 1]); neighbouring classes overlap the way manual
/// tags do near the boundary.
double synth_moisture(Label label, Rng& rng);
GrayImage synth_image(Label label, std::uint64_t seed, int side = 160);

/// Writes images plus `manifest.csv` into out_dir and returns the manifest.
Manifest synth_dataset(const std::filesystem::path& out_dir, const SynthCounts& counts, std::uint64_t seed,
                       const std::string& extension = ".png");

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fprint
