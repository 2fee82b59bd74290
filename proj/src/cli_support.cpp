#include "fprint/cli_support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "fprint/error.hpp"
#include "fprint/random.hpp"

namespace fprint {

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("file not found: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_real(const std::string& s, const std::string& context) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw Error(context + ": not a number '" + s + "'");
    return v;
}

long long parse_int(const std::string& s, const std::string& context) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size()) throw Error(context + ": not an integer '" + s + "'");
    return v;
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Manifest

Manifest parse_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("file not found: " + path.string());
    const auto base = path.parent_path();
    Manifest m;
    std::set<std::filesystem::path> seen;
    std::string line;
    int line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (!header) {
            if (cells.size() != 2 || cells[0] != "path" || cells[1] != "label") {
                throw Error(where + ": manifest header must be 'path,label'");
            }
            header = true;
            continue;
        }
        if (cells.empty() || cells.size() > 2 || cells[0].empty()) throw Error(where + ": malformed manifest row");
        ManifestRow row;
        row.path = std::filesystem::path(cells[0]);
        if (row.path.is_relative()) row.path = base / row.path;
        row.path = row.path.lexically_normal();
        if (cells.size() == 2 && !cells[1].empty()) {
            row.label = parse_label(cells[1]);
            if (!row.label) throw Error(where + ": unknown label '" + cells[1] + "'");
        }
        if (!seen.insert(row.path).second) throw Error(where + ": duplicate path " + cells[0]);
        m.rows.push_back(std::move(row));
    }
    if (!header) throw Error(path.string() + ": empty manifest");
    return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
    std::ostringstream os;
    const auto base = path.parent_path();
    os << "path,label\n";
    for (const auto& r : m.rows) {
        auto p = r.path;
        if (!base.empty()) {
            const auto rel = r.path.lexically_relative(base);
            if (!rel.empty()) p = rel;
        }
        os << p.generic_string() << ',' << (r.label ? to_string(*r.label) : "") << '\n';
    }
    write_text(path, os.str());
}

// ---------------------------------------------------------------------------
// Config

FeatureParams RunConfig::feature_params() const {
    FeatureParams p;
    p.rvr_block = block_side;
    p.epsilon = epsilon;
    p.threshold = threshold;
    return p;
}

UcflemConfig RunConfig::ucflem() const {
    UcflemConfig c;
    c.train_fraction = split;
    c.validation_fraction = validation;
    c.balance = balance;
    c.seed = seed;
    c.forest.trees = rf_trees;
    c.forest.max_depth = rf_max_depth;
    c.forest.features_per_split = rf_features;
    c.boost.rounds = gb_rounds;
    c.boost.learning_rate = gb_learning_rate;
    c.boost.max_depth = gb_max_depth;
    c.balancing.step = balance_step;
    c.balancing.max_attempts = balance_attempts;
    return c;
}

HfomConfig RunConfig::hfom() const {
    HfomConfig c;
    c.n = n;
    c.threshold = threshold;
    c.block_side = block_side;
    c.assignment_seed = assignment_seed;
    return c;
}

void RunConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error("config: " + what); };
    if (side < 16) fail("side must be >= 16");
    if (threshold < 0 || threshold > 255) fail("threshold must lie in [0, 255]");
    if (block_side < 1 || block_side % 2 == 0 || block_side > side) fail("block_side must be odd and <= side");
    if (n < 4) fail("n must be >= 4");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (!(split > 0.0 && split < 1.0)) fail("split must lie in (0, 1)");
    if (!(validation > 0.0 && validation < 1.0)) fail("validation must lie in (0, 1)");
    if (rf_trees < 1 || rf_max_depth < 1 || rf_features < 1) fail("random forest parameters must be positive");
    if (gb_rounds < 1 || gb_max_depth < 1 || gb_learning_rate < 0.0) fail("boosting parameters out of range");
    if (balance_attempts < 1) fail("balance_attempts must be >= 1");
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
    RunConfig c = base;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "config line " + std::to_string(line_no);
        if (eq == std::string::npos) throw Error(where + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const std::string ctx = where + " (" + key + ")";
        auto as_int = [&] { return static_cast<int>(parse_int(value, ctx)); };
        auto as_bool = [&] {
            if (value == "true" || value == "1") return true;
            if (value == "false" || value == "0") return false;
            throw Error(ctx + ": expected true/false");
        };
        if (key == "side") c.side = as_int();
        else if (key == "threshold") c.threshold = as_int();
        else if (key == "block_side") c.block_side = as_int();
        else if (key == "n") c.n = as_int();
        else if (key == "epsilon") c.epsilon = parse_real(value, ctx);
        else if (key == "split") c.split = parse_real(value, ctx);
        else if (key == "validation") c.validation = parse_real(value, ctx);
        else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(value, ctx));
        else if (key == "balance") c.balance = as_bool();
        else if (key == "rf_trees") c.rf_trees = as_int();
        else if (key == "rf_max_depth") c.rf_max_depth = as_int();
        else if (key == "rf_features") c.rf_features = as_int();
        else if (key == "gb_rounds") c.gb_rounds = as_int();
        else if (key == "gb_learning_rate") c.gb_learning_rate = parse_real(value, ctx);
        else if (key == "gb_max_depth") c.gb_max_depth = as_int();
        else if (key == "balance_step") c.balance_step = parse_real(value, ctx);
        else if (key == "balance_attempts") c.balance_attempts = as_int();
        else if (key == "assignment_seed") {
            if (value == "none") {
                c.assignment_seed.reset();
            } else {
                c.assignment_seed = static_cast<std::uint64_t>(parse_int(value, ctx));
            }
        } else {
            throw Error(where + ": unknown key '" + key + "'");
        }
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
    return parse_config(read_text(path), base);
}

std::string format_config(const RunConfig& c) {
    std::ostringstream os;
    os << "side = " << c.side << '\n'
       << "threshold = " << c.threshold << '\n'
       << "block_side = " << c.block_side << '\n'
       << "n = " << c.n << '\n'
       << "epsilon = " << real(c.epsilon) << '\n'
       << "split = " << real(c.split) << '\n'
       << "validation = " << real(c.validation) << '\n'
       << "seed = " << c.seed << '\n'
       << "balance = " << (c.balance ? "true" : "false") << '\n'
       << "rf_trees = " << c.rf_trees << '\n'
       << "rf_max_depth = " << c.rf_max_depth << '\n'
       << "rf_features = " << c.rf_features << '\n'
       << "gb_rounds = " << c.gb_rounds << '\n'
       << "gb_learning_rate = " << real(c.gb_learning_rate) << '\n'
       << "gb_max_depth = " << c.gb_max_depth << '\n'
       << "balance_step = " << real(c.balance_step) << '\n'
       << "balance_attempts = " << c.balance_attempts << '\n'
       << "assignment_seed = " << (c.assignment_seed ? std::to_string(*c.assignment_seed) : "none") << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Feature tables

std::string format_feature_csv(const std::vector<FeatureRow>& rows) {
    std::ostringstream os;
    os << "source_id";
    for (const auto* name : kFeatureNames) os << ',' << name;
    os << ",label\n";
    for (const auto& r : rows) {
        if (r.source_id.find(',') != std::string::npos) throw Error("source id contains a comma: " + r.source_id);
        os << r.source_id;
        for (double v : r.features.as_array()) os << ',' << real(v);
        os << ',' << (r.label ? to_string(*r.label) : "") << '\n';
    }
    return os.str();
}

std::vector<FeatureRow> parse_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("file not found: " + path.string());
    std::vector<FeatureRow> rows;
    std::string line;
    int line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const auto cells = split_csv(line);
        if (!header) {
            if (cells.size() != kFeatureCount + 2 || cells[0] != "source_id") {
                throw Error(where + ": unexpected feature table header");
            }
            header = true;
            continue;
        }
        if (cells.size() != kFeatureCount + 2) throw Error(where + ": expected 8 columns");
        FeatureRow r;
        r.source_id = cells[0];
        std::array<double, kFeatureCount> v{};
        for (std::size_t i = 0; i < kFeatureCount; ++i) v[i] = parse_real(cells[i + 1], where);
        r.features = FeatureVector::from_array(v);
        if (!cells.back().empty()) {
            r.label = parse_label(cells.back());
            if (!r.label) throw Error(where + ": unknown label '" + cells.back() + "'");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

Dataset to_dataset(const std::vector<FeatureRow>& rows) {
    Dataset d;
    for (const auto& r : rows) {
        if (!r.label) throw Error("row " + r.source_id + " has no label");
        d.add({r.features, *r.label, r.source_id});
    }
    return d;
}

// ---------------------------------------------------------------------------
// Synthetic scans

double synth_moisture(Label label, Rng& rng) {
    switch (label) {
        case Label::dry: return rng.uniform(-1.0, -0.25);
        case Label::standard: return rng.uniform(-0.4, 0.4);
        case Label::wet: return rng.uniform(0.25, 1.0);
    }
    return 0.0;
}

GrayImage synth_image(Label label, std::uint64_t seed, int side) {
    Rng rng(seed);
    return render_scan(synth_moisture(label, rng), rng.next(), side);
}

GrayImage render_scan(double moisture, std::uint64_t seed, int side) {
    Rng rng(seed);
    const double m = std::clamp(moisture, -1.0, 1.0);
    const double theta = rng.uniform(0.0, std::numbers::pi);
    const double period = rng.uniform(7.0, 11.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double bend = rng.uniform(2.0, 6.0);
    const double bend_len = rng.uniform(60.0, 140.0);
    const double shift = rng.uniform(-20.0, 20.0);  // sensor / pressure offset
    const double base = 128.0 - 55.0 * m + shift;
    const double amplitude = 80.0 * (1.0 - 0.6 * std::abs(m)) * rng.uniform(0.85, 1.15);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);

    // Dry scans lose ridge segments (light patches), wet scans lose valleys
    // (dark patches); the patch count grows with |moisture|.
    struct Blob {
        double r, c, radius;
    };
    std::vector<Blob> blobs;
    const int count = static_cast<int>(std::lround(12.0 * std::abs(m) * rng.uniform(0.5, 1.5)));
    for (int i = 0; i < count; ++i) {
        blobs.push_back({rng.uniform(0.0, side), rng.uniform(0.0, side), rng.uniform(5.0, 14.0)});
    }
    const double blob_value = m < 0.0 ? base + amplitude : base - amplitude;
    auto in_blob = [&](int r, int c) {
        return std::any_of(blobs.begin(), blobs.end(), [&](const Blob& b) {
            return (r - b.r) * (r - b.r) + (c - b.c) * (c - b.c) <= b.radius * b.radius;
        });
    };

    GrayImage img(side, side);
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            double value = 0.0;
            if (in_blob(r, c)) {
                value = blob_value + 8.0 * rng.normal();
            } else {
                // Along-normal coordinate with a slow sinusoidal bend.
                const double along = -c * st + r * ct;
                const double u = c * ct + r * st + bend * std::sin(2.0 * std::numbers::pi * along / bend_len);
                const double v = std::cos(2.0 * std::numbers::pi * u / period + phase);  // > 0 on ridges
                // Positive moisture widens ridges, negative moisture thins them.
                const double ridge = std::tanh(2.5 * (v + 0.6 * m)) / std::tanh(2.5);
                value = base - amplitude * ridge + 10.0 * rng.normal();
            }
            img.at(r, c) = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
        }
    }
    return img;
}

Manifest synth_dataset(const std::filesystem::path& out_dir, const SynthCounts& counts, std::uint64_t seed,
                       const std::string& extension) {
    if (counts.dry < 0 || counts.standard < 0 || counts.wet < 0) throw Error("synth counts must be non-negative");
    std::filesystem::create_directories(out_dir);
    Manifest m;
    std::uint64_t index = 0;
    const std::array<std::pair<Label, int>, 3> plan{
        {{Label::dry, counts.dry}, {Label::standard, counts.standard}, {Label::wet, counts.wet}}};
    for (const auto& [label, count] : plan) {
        for (int i = 0; i < count; ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "%s_%04d%s", std::string(to_string(label)).c_str(), i, extension.c_str());
            const auto path = out_dir / name;
            save_image(path, synth_image(label, Rng::derive(seed, index++)));
            m.rows.push_back({path.lexically_normal(), label});
        }
    }
    write_manifest(out_dir / "manifest.csv", m);
    return m;
}

}  // namespace fprint
