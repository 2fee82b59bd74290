// fprint: fingerprint quality classification and HFOM generation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fprint/balance.hpp"
#include "fprint/cli_support.hpp"
#include "fprint/error.hpp"
#include "fprint/features.hpp"
#include "fprint/hfom.hpp"
#include "fprint/learners.hpp"
#include "fprint/random.hpp"
#include "fprint/ucflem.hpp"

namespace fs = std::filesystem;
using namespace fprint;

namespace {

struct Common {
    std::string manifest;
    std::string out;
    std::string config;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool needs_manifest) {
    auto* m = cmd->add_option("--manifest", c.manifest, "CSV manifest with header path,label");
    if (needs_manifest) m->required();
    cmd->add_option("--out", c.out, "output directory")->required();
    cmd->add_option("--config", c.config, "key = value configuration file");
    cmd->add_option("--seed", c.seed, "overrides the configured seed");
}

RunConfig effective_config(const Common& c) {
    RunConfig cfg;
    if (!c.config.empty()) cfg = load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    cfg.validate();
    return cfg;
}

fs::path prepare_out(const Common& c, const RunConfig& cfg) {
    const fs::path out(c.out);
    fs::create_directories(out);
    write_text(out / "config.txt", format_config(cfg));
    return out;
}

GrayImage load_scan(const fs::path& path, int side) {
    try {
        return crop_resize(load_image(path), side);
    } catch (const Error& e) {
        if (std::string(e.what()).find(path.string()) != std::string::npos) throw;
        throw Error(path.string() + ": " + e.what());
    }
}

std::vector<FeatureRow> extract_rows(const Manifest& m, const RunConfig& cfg) {
    std::vector<FeatureRow> rows;
    rows.reserve(m.rows.size());
    const auto params = cfg.feature_params();
    for (const auto& r : m.rows) {
        rows.push_back({r.path.generic_string(), extract_features(load_scan(r.path, cfg.side), params), r.label});
    }
    return rows;
}

/// Labeled feature rows from either a manifest of images or a feature CSV.
std::vector<FeatureRow> input_rows(const Common& c, const std::string& features_csv, const RunConfig& cfg) {
    if (!features_csv.empty() && !c.manifest.empty()) throw Error("give either --manifest or --features, not both");
    if (!features_csv.empty()) return parse_feature_csv(features_csv);
    if (c.manifest.empty()) throw Error("one of --manifest or --features is required");
    return extract_rows(parse_manifest(c.manifest), cfg);
}

std::vector<FeatureRow> dataset_rows(const Dataset& d) {
    std::vector<FeatureRow> rows;
    for (const auto& s : d.samples()) rows.push_back({s.source_id, s.features, s.label});
    return rows;
}

std::string metrics_json(const Metrics& m) {
    std::ostringstream os;
    char buf[64];
    auto real = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << "{\n  \"accuracy\": " << real(m.accuracy) << ",\n  \"precision\": " << real(m.precision)
       << ",\n  \"recall\": " << real(m.recall) << ",\n  \"f1\": " << real(m.f1) << ",\n  \"classes\": [";
    for (std::size_t i = 0; i < m.classes.size(); ++i) os << (i ? ", " : "") << '"' << to_string(m.classes[i]) << '"';
    os << "],\n  \"confusion\": [";
    for (std::size_t i = 0; i < m.confusion.size(); ++i) {
        os << (i ? ", " : "") << '[';
        for (std::size_t j = 0; j < m.confusion[i].size(); ++j) os << (j ? ", " : "") << m.confusion[i][j];
        os << ']';
    }
    os << "]\n}\n";
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fingerprint quality classification and hybrid orientation maps"};
    app.require_subcommand(1);

    // synth
    Common synth_c;
    SynthCounts counts{50, 50, 50};
    std::string synth_ext = ".png";
    auto* synth = app.add_subcommand("synth", "generate a labeled synthetic scan set");
    synth->add_option("--out", synth_c.out, "output directory")->required();
    synth->add_option("--seed", synth_c.seed, "generator seed");
    synth->add_option("--dry", counts.dry, "number of dry scans");
    synth->add_option("--standard", counts.standard, "number of standard scans");
    synth->add_option("--wet", counts.wet, "number of wet scans");
    synth->add_option("--ext", synth_ext, "image extension (.png or .pgm)");

    // features
    Common feat_c;
    auto* features = app.add_subcommand("features", "extract the six quality features");
    add_common(features, feat_c, true);

    // balance
    Common bal_c;
    std::string bal_features;
    auto* balance = app.add_subcommand("balance", "oversample minority classes in a feature table");
    add_common(balance, bal_c, false);
    balance->add_option("--features", bal_features, "feature CSV instead of a manifest");

    // train
    Common train_c;
    std::string train_features;
    std::string train_kind = "rf";
    auto* train = app.add_subcommand("train", "train one ensemble and report held-out metrics");
    add_common(train, train_c, false);
    train->add_option("--features", train_features, "feature CSV instead of a manifest");
    train->add_option("--model", train_kind, "rf or gb")->check(CLI::IsMember({"rf", "gb"}));

    // classify
    Common cls_c;
    std::string cls_features;
    auto* classify = app.add_subcommand("classify", "run the two-phase fuzzy ensemble end to end");
    add_common(classify, cls_c, false);
    classify->add_option("--features", cls_features, "feature CSV instead of a manifest");

    // hfom
    Common hfom_c;
    auto* hfom = app.add_subcommand("hfom", "build a hybrid orientation map from the best standard scans");
    add_common(hfom, hfom_c, true);

    // ssim
    Common ssim_c;
    auto* ssim_cmd = app.add_subcommand("ssim", "pairwise shifted SSIM heatmap");
    add_common(ssim_cmd, ssim_c, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const fs::path out(synth_c.out);
            const auto m = synth_dataset(out, counts, synth_c.seed.value_or(42), synth_ext);
            std::cout << "wrote " << m.rows.size() << " images and " << (out / "manifest.csv").string() << '\n';
        } else if (features->parsed()) {
            const auto cfg = effective_config(feat_c);
            const auto out = prepare_out(feat_c, cfg);
            const auto rows = extract_rows(parse_manifest(feat_c.manifest), cfg);
            write_text(out / "features.csv", format_feature_csv(rows));
            std::cout << "wrote " << rows.size() << " feature rows\n";
        } else if (balance->parsed()) {
            const auto cfg = effective_config(bal_c);
            const auto data = to_dataset(input_rows(bal_c, bal_features, cfg));
            const auto out = prepare_out(bal_c, cfg);
            BalanceReport report;
            const auto balanced = balance_dataset(data, cfg.seed, cfg.ucflem().balancing, &report);
            write_text(out / "balanced.csv", format_feature_csv(dataset_rows(balanced)));
            write_text(out / "balance_log.csv", format_balance_log(report));
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
            const auto c = balanced.counts();
            std::cout << "kappa=" << to_string(report.kappa) << " dry=" << c[0] << " standard=" << c[1]
                      << " wet=" << c[2] << '\n';
        } else if (train->parsed()) {
            const auto cfg = effective_config(train_c);
            const auto data = to_dataset(input_rows(train_c, train_features, cfg));
            const auto out = prepare_out(train_c, cfg);
            const auto ucfg = cfg.ucflem();
            const auto [train_idx, test_idx] = stratified_split(data, cfg.split, Rng::derive(cfg.seed, 0));
            Dataset fit = data.subset(train_idx);
            if (cfg.balance) fit = balance_dataset(fit, Rng::derive(cfg.seed, 1), ucfg.balancing);
            const auto test = data.subset(test_idx);
            const auto model = train_kind == "rf" ? train_random_forest(fit, Rng::derive(cfg.seed, 3), ucfg.forest)
                                                  : train_gradient_boost(fit, Rng::derive(cfg.seed, 4), ucfg.boost);
            save_model(out / "model.txt", model);
            const auto metrics = evaluate(model, test);
            write_text(out / "metrics.json", metrics_json(metrics));
            std::cout << "accuracy=" << metrics.accuracy << " f1=" << metrics.f1 << '\n';
        } else if (classify->parsed()) {
            const auto cfg = effective_config(cls_c);
            const auto data = to_dataset(input_rows(cls_c, cls_features, cfg));
            const auto out = prepare_out(cls_c, cfg);
            const auto ucfg = cfg.ucflem();
            const auto result = classify_dataset(data, ucfg);
            write_text(out / "report.txt", report_text(result, ucfg));
            write_text(out / "report.json", report_json(result, ucfg));
            std::cout << report_text(result, ucfg);
        } else if (hfom->parsed()) {
            const auto cfg = effective_config(hfom_c);
            const auto m = parse_manifest(hfom_c.manifest);
            const auto out = prepare_out(hfom_c, cfg);
            const auto params = cfg.feature_params();
            std::vector<PoolEntry> pool;
            for (const auto& r : m.rows) {
                if (!r.label) continue;
                auto img = load_scan(r.path, cfg.side);
                auto f = extract_features(img, params);
                pool.push_back({r.path.generic_string(), std::move(img), f, *r.label});
            }
            const auto result = hfom_pipeline(pool, cfg.hfom());
            save_image(out / "hfom.png", result.hfom.image);
            write_text(out / "stages.txt", stage_report(result));
            std::cout << stage_report(result);
        } else if (ssim_cmd->parsed()) {
            const auto cfg = effective_config(ssim_c);
            const auto m = parse_manifest(ssim_c.manifest);
            const auto out = prepare_out(ssim_c, cfg);
            std::vector<GrayImage> imgs;
            for (const auto& r : m.rows) imgs.push_back(load_scan(r.path, cfg.side));
            std::vector<std::vector<double>> mat(imgs.size(), std::vector<double>(imgs.size()));
            for (std::size_t i = 0; i < imgs.size(); ++i) {
                for (std::size_t j = i; j < imgs.size(); ++j) mat[i][j] = mat[j][i] = ssim(imgs[i], imgs[j]);
            }
            std::ostringstream os;
            os << "id";
            for (const auto& r : m.rows) os << ',' << r.path.filename().generic_string();
            os << '\n';
            char buf[64];
            for (std::size_t i = 0; i < imgs.size(); ++i) {
                os << m.rows[i].path.filename().generic_string();
                for (double v : mat[i]) {
                    std::snprintf(buf, sizeof buf, "%.17g", v);
                    os << ',' << buf;
                }
                os << '\n';
            }
            write_text(out / "ssim.csv", os.str());
            std::cout << "wrote " << imgs.size() << "x" << imgs.size() << " heatmap\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "fprint: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
