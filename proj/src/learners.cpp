#include "fprint/learners.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "fprint/error.hpp"
#include "fprint/random.hpp"

namespace fprint {

const std::vector<double>& DecisionTree::leaf(const FeatureVector& x) const {
    const auto a = x.as_array();
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        i = a[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

std::string_view to_string(ModelKind k) {
    return k == ModelKind::random_forest ? "random_forest" : "gradient_boost";
}

namespace {

using Row = std::array<double, kFeatureCount>;

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // lower is better
};

double midpoint(double a, double b) {
    const double m = a + (b - a) / 2.0;
    return m < b ? m : a;
}

// Grows one tree over `idx` (indices may repeat for bootstrap samples).
// Classification mode splits on weighted Gini; regression mode on squared error.
class TreeBuilder {
public:
    TreeBuilder(std::span<const Row> x, int max_depth, int min_leaf, int features_per_split, Rng& rng)
        : x_(x), max_depth_(max_depth), min_leaf_(min_leaf), mtry_(features_per_split), rng_(rng) {}

    DecisionTree classification(std::span<const int> y, int n_classes, std::vector<std::size_t> idx) {
        y_class_ = y;
        n_classes_ = n_classes;
        regression_ = false;
        DecisionTree t;
        grow(t, idx, 0);
        return t;
    }

    template <typename LeafFn>
    DecisionTree regression(std::span<const double> target, std::vector<std::size_t> idx, LeafFn leaf_fn) {
        y_value_ = target;
        regression_ = true;
        leaf_fn_ = leaf_fn;
        DecisionTree t;
        grow(t, idx, 0);
        return t;
    }

private:
    int grow(DecisionTree& t, std::vector<std::size_t>& idx, int depth) {
        const int id = static_cast<int>(t.nodes.size());
        t.nodes.emplace_back();
        const bool can_split = depth < max_depth_ && idx.size() >= 2 * static_cast<std::size_t>(min_leaf_) &&
                               !pure(idx);
        const Split s = can_split ? best_split(idx) : Split{};
        if (s.feature < 0) {
            t.nodes[static_cast<std::size_t>(id)].value = leaf_value(idx);
            return id;
        }
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto i : idx) {
            (x_[i][static_cast<std::size_t>(s.feature)] <= s.threshold ? left : right).push_back(i);
        }
        idx.clear();
        idx.shrink_to_fit();
        const int l = grow(t, left, depth + 1);
        const int r = grow(t, right, depth + 1);
        auto& node = t.nodes[static_cast<std::size_t>(id)];
        node.feature = s.feature;
        node.threshold = s.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    bool pure(const std::vector<std::size_t>& idx) const {
        if (regression_) {
            return std::all_of(idx.begin(), idx.end(), [&](std::size_t i) { return y_value_[i] == y_value_[idx[0]]; });
        }
        return std::all_of(idx.begin(), idx.end(), [&](std::size_t i) { return y_class_[i] == y_class_[idx[0]]; });
    }

    std::vector<double> leaf_value(const std::vector<std::size_t>& idx) const {
        if (regression_) return {leaf_fn_(idx)};
        std::vector<double> p(static_cast<std::size_t>(n_classes_), 0.0);
        for (auto i : idx) p[static_cast<std::size_t>(y_class_[i])] += 1.0;
        for (auto& v : p) v /= static_cast<double>(idx.size());
        return p;
    }

    std::vector<int> candidate_features() {
        std::vector<int> all(kFeatureCount);
        std::iota(all.begin(), all.end(), 0);
        if (mtry_ <= 0 || mtry_ >= static_cast<int>(kFeatureCount)) return all;
        // Partial Fisher-Yates: the first mtry entries are a uniform draw;
        // the rest are kept as fallbacks when none of those can split.
        for (std::size_t i = 0; i < static_cast<std::size_t>(mtry_); ++i) {
            std::swap(all[i], all[i + rng_.index(all.size() - i)]);
        }
        return all;
    }

    Split best_split(const std::vector<std::size_t>& idx) {
        const auto features = candidate_features();
        const std::size_t primary = mtry_ > 0 ? std::min<std::size_t>(static_cast<std::size_t>(mtry_), features.size())
                                              : features.size();
        Split best;
        std::vector<std::size_t> order = idx;
        for (std::size_t fi = 0; fi < features.size(); ++fi) {
            // Only consult fallback features when the drawn ones found nothing.
            if (fi >= primary && best.feature >= 0) break;
            const int f = features[fi];
            const auto fs = static_cast<std::size_t>(f);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return x_[a][fs] < x_[b][fs]; });
            const Split s = regression_ ? scan_regression(order, f) : scan_gini(order, f);
            if (s.feature >= 0 && (best.feature < 0 || s.score < best.score)) best = s;
        }
        return best;
    }

    Split scan_gini(const std::vector<std::size_t>& order, int f) const {
        const auto fs = static_cast<std::size_t>(f);
        const std::size_t n = order.size();
        const auto k = static_cast<std::size_t>(n_classes_);
        std::vector<double> total(k, 0.0);
        for (auto i : order) total[static_cast<std::size_t>(y_class_[i])] += 1.0;
        std::vector<double> left(k, 0.0);
        Split best;
        for (std::size_t pos = 0; pos + 1 < n; ++pos) {
            left[static_cast<std::size_t>(y_class_[order[pos]])] += 1.0;
            const double a = x_[order[pos]][fs];
            const double b = x_[order[pos + 1]][fs];
            const std::size_t nl = pos + 1;
            const std::size_t nr = n - nl;
            if (a == b || nl < static_cast<std::size_t>(min_leaf_) || nr < static_cast<std::size_t>(min_leaf_)) continue;
            double sl = 0.0;
            double sr = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                sl += left[c] * left[c];
                sr += (total[c] - left[c]) * (total[c] - left[c]);
            }
            // Weighted Gini = (nl - sl/nl + nr - sr/nr) / n; n is constant here.
            const double score = static_cast<double>(n) - sl / static_cast<double>(nl) - sr / static_cast<double>(nr);
            if (best.feature < 0 || score < best.score) best = {f, midpoint(a, b), score};
        }
        return best;
    }

    Split scan_regression(const std::vector<std::size_t>& order, int f) const {
        const auto fs = static_cast<std::size_t>(f);
        const std::size_t n = order.size();
        double total = 0.0;
        for (auto i : order) total += y_value_[i];
        double left = 0.0;
        Split best;
        for (std::size_t pos = 0; pos + 1 < n; ++pos) {
            left += y_value_[order[pos]];
            const double a = x_[order[pos]][fs];
            const double b = x_[order[pos + 1]][fs];
            const std::size_t nl = pos + 1;
            const std::size_t nr = n - nl;
            if (a == b || nl < static_cast<std::size_t>(min_leaf_) || nr < static_cast<std::size_t>(min_leaf_)) continue;
            const double right = total - left;
            // SSE reduction is maximized where sum_l^2/n_l + sum_r^2/n_r peaks.
            const double score = -(left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr));
            if (best.feature < 0 || score < best.score) best = {f, midpoint(a, b), score};
        }
        return best;
    }

    std::span<const Row> x_;
    int max_depth_;
    int min_leaf_;
    int mtry_;
    Rng& rng_;
    bool regression_ = false;
    std::span<const int> y_class_;
    int n_classes_ = 0;
    std::span<const double> y_value_;
    std::function<double(const std::vector<std::size_t>&)> leaf_fn_;
};

struct Prepared {
    std::vector<Label> classes;
    std::vector<Row> x;
    std::vector<int> y;
};

Prepared prepare(const Dataset& d) {
    Prepared p;
    p.classes = d.classes();
    if (p.classes.size() < 2) throw Error("training needs at least two classes");
    if (d.size() < 10) throw Error("training needs at least 10 samples, got " + std::to_string(d.size()));
    std::array<int, kLabelCount> position{};
    for (std::size_t i = 0; i < p.classes.size(); ++i) position[label_index(p.classes[i])] = static_cast<int>(i);
    for (const auto& s : d.samples()) {
        p.x.push_back(s.features.as_array());
        p.y.push_back(position[label_index(s.label)]);
    }
    return p;
}

// Runs fn(i) for i in [0, n) across hardware threads; results land by index.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
    const std::size_t workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 8u));
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

std::size_t argmax_first(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

}  // namespace

EnsembleModel train_random_forest(const Dataset& d, std::uint64_t seed, const ForestParams& params) {
    if (params.trees < 1) throw Error("random forest needs at least one tree");
    const Prepared p = prepare(d);
    EnsembleModel m;
    m.kind = ModelKind::random_forest;
    m.classes = p.classes;
    m.seed = seed;
    m.trees.resize(static_cast<std::size_t>(params.trees));
    const std::size_t n = p.x.size();
    parallel_for(m.trees.size(), [&](std::size_t t) {
        Rng rng(Rng::derive(seed, t));
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) s = rng.index(n);
        TreeBuilder b(p.x, params.max_depth, params.min_samples_leaf, params.features_per_split, rng);
        m.trees[t] = b.classification(p.y, static_cast<int>(p.classes.size()), std::move(sample));
    });
    return m;
}

EnsembleModel train_gradient_boost(const Dataset& d, std::uint64_t seed, const BoostParams& params) {
    if (params.rounds < 1) throw Error("gradient boosting needs at least one round");
    const Prepared p = prepare(d);
    const std::size_t n = p.x.size();
    const std::size_t k = p.classes.size();

    EnsembleModel m;
    m.kind = ModelKind::gradient_boost;
    m.classes = p.classes;
    m.seed = seed;
    m.learning_rate = params.learning_rate;
    m.init_scores.assign(k, 0.0);
    std::vector<double> prior(k, 0.0);
    for (int y : p.y) prior[static_cast<std::size_t>(y)] += 1.0;
    for (std::size_t c = 0; c < k; ++c) m.init_scores[c] = std::log(prior[c] / static_cast<double>(n));

    std::vector<double> score(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < k; ++c) score[i * k + c] = m.init_scores[c];
    }

    Rng rng(seed);
    std::vector<double> prob(n * k);
    std::vector<std::vector<double>> residual(k, std::vector<double>(n));
    m.trees.reserve(static_cast<std::size_t>(params.rounds) * k);
    const double newton_scale = static_cast<double>(k - 1) / static_cast<double>(k);

    for (int round = 0; round < params.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            double mx = score[i * k];
            for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, score[i * k + c]);
            double z = 0.0;
            for (std::size_t c = 0; c < k; ++c) z += prob[i * k + c] = std::exp(score[i * k + c] - mx);
            for (std::size_t c = 0; c < k; ++c) {
                prob[i * k + c] /= z;
                residual[c][i] = (p.y[i] == static_cast<int>(c) ? 1.0 : 0.0) - prob[i * k + c];
            }
        }
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        if (params.subsample < 1.0) {
            rng.shuffle(rows);
            rows.resize(std::max<std::size_t>(1, static_cast<std::size_t>(params.subsample * static_cast<double>(n))));
            std::sort(rows.begin(), rows.end());
        }
        std::vector<DecisionTree> round_trees(k);
        parallel_for(k, [&](std::size_t c) {
            Rng unused(0);
            TreeBuilder b(p.x, params.max_depth, params.min_samples_leaf, 0, unused);
            const auto& r = residual[c];
            round_trees[c] = b.regression(r, rows, [&](const std::vector<std::size_t>& idx) {
                double num = 0.0;
                double den = 0.0;
                for (auto i : idx) {
                    num += r[i];
                    den += std::abs(r[i]) * (1.0 - std::abs(r[i]));
                }
                return den < 1e-150 ? 0.0 : newton_scale * num / den;
            });
        });
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                score[i * k + c] += params.learning_rate * round_trees[c].leaf(FeatureVector::from_array(p.x[i]))[0];
            }
            m.trees.push_back(std::move(round_trees[c]));
        }
    }
    return m;
}

Label predict(const EnsembleModel& model, const FeatureVector& x) {
    const std::size_t k = model.classes.size();
    if (k == 0 || model.trees.empty()) throw Error("predict on an untrained model");
    std::vector<double> tally(k, 0.0);
    if (model.kind == ModelKind::random_forest) {
        for (const auto& t : model.trees) tally[argmax_first(t.leaf(x))] += 1.0;
    } else {
        tally = model.init_scores;
        for (std::size_t j = 0; j < model.trees.size(); ++j) {
            tally[j % k] += model.learning_rate * model.trees[j].leaf(x)[0];
        }
    }
    return model.classes[argmax_first(tally)];
}

std::vector<Label> predict(const EnsembleModel& model, std::span<const FeatureVector> xs) {
    std::vector<Label> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) { out[i] = predict(model, xs[i]); });
    return out;
}

Metrics compute_metrics(std::span<const Label> truth, std::span<const Label> predicted) {
    if (truth.empty()) throw Error("metrics over an empty test set");
    if (truth.size() != predicted.size()) throw Error("truth and prediction lengths differ");
    Metrics m;
    std::array<bool, kLabelCount> seen{};
    for (auto l : truth) seen[label_index(l)] = true;
    for (auto l : predicted) seen[label_index(l)] = true;
    std::array<std::size_t, kLabelCount> pos{};
    for (auto l : kAllLabels) {
        if (seen[label_index(l)]) {
            pos[label_index(l)] = m.classes.size();
            m.classes.push_back(l);
        }
    }
    const std::size_t k = m.classes.size();
    m.confusion.assign(k, std::vector<std::size_t>(k, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++m.confusion[pos[label_index(truth[i])]][pos[label_index(predicted[i])]];
        if (truth[i] == predicted[i]) ++correct;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t row = 0;
        std::size_t col = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row += m.confusion[c][j];
            col += m.confusion[j][c];
        }
        const double tp = static_cast<double>(m.confusion[c][c]);
        const double p = col ? tp / static_cast<double>(col) : 0.0;
        const double r = row ? tp / static_cast<double>(row) : 0.0;
        m.precision += p;
        m.recall += r;
        m.f1 += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    m.precision /= static_cast<double>(k);
    m.recall /= static_cast<double>(k);
    m.f1 /= static_cast<double>(k);
    return m;
}

Metrics evaluate(const EnsembleModel& model, const Dataset& test) {
    if (test.empty()) throw Error("evaluate on an empty test set");
    const auto xs = test.features();
    const auto pred = predict(model, xs);
    const auto truth = test.labels();
    return compute_metrics(truth, pred);
}

// ---------------------------------------------------------------------------
// Serialization: whitespace-separated text, doubles in hexfloat so a
// round trip is bit-exact.

namespace {

constexpr const char* kMagic = "fprint-model";
constexpr int kFormatVersion = 1;

std::string hex(double v) {
    std::ostringstream os;
    os << std::hexfloat << v;
    return os.str();
}

class Reader {
public:
    explicit Reader(std::istream& is) : is_(is) {}

    std::string word() {
        std::string w;
        if (!(is_ >> w)) throw Error("model file truncated");
        return w;
    }
    void expect(const std::string& w) {
        const auto got = word();
        if (got != w) throw Error("model file: expected '" + w + "', got '" + got + "'");
    }
    double real() {
        const auto w = word();
        char* end = nullptr;
        const double v = std::strtod(w.c_str(), &end);
        if (end != w.c_str() + w.size()) throw Error("model file: bad number '" + w + "'");
        return v;
    }
    long long integer() {
        const auto w = word();
        char* end = nullptr;
        const long long v = std::strtoll(w.c_str(), &end, 10);
        if (end != w.c_str() + w.size()) throw Error("model file: bad integer '" + w + "'");
        return v;
    }

private:
    std::istream& is_;
};

}  // namespace

void write_model(std::ostream& os, const EnsembleModel& model) {
    os << kMagic << ' ' << kFormatVersion << '\n';
    os << "kind " << to_string(model.kind) << '\n';
    os << "seed " << model.seed << '\n';
    os << "validation_accuracy " << hex(model.validation_accuracy) << '\n';
    os << "learning_rate " << hex(model.learning_rate) << '\n';
    os << "classes " << model.classes.size();
    for (auto l : model.classes) os << ' ' << to_string(l);
    os << "\ninit " << model.init_scores.size();
    for (double v : model.init_scores) os << ' ' << hex(v);
    os << "\ntrees " << model.trees.size() << '\n';
    for (const auto& t : model.trees) {
        os << "tree " << t.nodes.size() << '\n';
        for (const auto& n : t.nodes) {
            os << n.feature << ' ' << hex(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << n.value.size();
            for (double v : n.value) os << ' ' << hex(v);
            os << '\n';
        }
    }
    os << "end\n";
}

EnsembleModel read_model(std::istream& is) {
    Reader r(is);
    r.expect(kMagic);
    if (r.integer() != kFormatVersion) throw Error("unsupported model format version");
    EnsembleModel m;
    r.expect("kind");
    const auto kind = r.word();
    if (kind == "random_forest") {
        m.kind = ModelKind::random_forest;
    } else if (kind == "gradient_boost") {
        m.kind = ModelKind::gradient_boost;
    } else {
        throw Error("model file: unknown kind '" + kind + "'");
    }
    r.expect("seed");
    m.seed = static_cast<std::uint64_t>(std::stoull(r.word()));
    r.expect("validation_accuracy");
    m.validation_accuracy = r.real();
    r.expect("learning_rate");
    m.learning_rate = r.real();
    r.expect("classes");
    for (auto n = r.integer(); n > 0; --n) {
        const auto w = r.word();
        const auto l = parse_label(w);
        if (!l) throw Error("model file: unknown class '" + w + "'");
        m.classes.push_back(*l);
    }
    r.expect("init");
    for (auto n = r.integer(); n > 0; --n) m.init_scores.push_back(r.real());
    r.expect("trees");
    const auto tree_count = r.integer();
    for (long long t = 0; t < tree_count; ++t) {
        r.expect("tree");
        DecisionTree tree;
        const auto node_count = r.integer();
        for (long long i = 0; i < node_count; ++i) {
            DecisionTree::Node n;
            n.feature = static_cast<int>(r.integer());
            n.threshold = r.real();
            n.left = static_cast<int>(r.integer());
            n.right = static_cast<int>(r.integer());
            for (auto v = r.integer(); v > 0; --v) n.value.push_back(r.real());
            const bool leaf = n.feature < 0;
            if (!leaf && (n.feature >= static_cast<int>(kFeatureCount) || n.left <= i || n.right <= i ||
                          n.left >= node_count || n.right >= node_count)) {
                throw Error("model file: malformed tree node");
            }
            if (leaf && n.value.empty()) throw Error("model file: leaf without value");
            tree.nodes.push_back(std::move(n));
        }
        m.trees.push_back(std::move(tree));
    }
    r.expect("end");
    return m;
}

void save_model(const std::filesystem::path& path, const EnsembleModel& model) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    write_model(os, model);
}

EnsembleModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("file not found: " + path.string());
    return read_model(is);
}

}  // namespace fprint
