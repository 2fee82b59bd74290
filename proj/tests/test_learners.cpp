#include <gtest/gtest.h>

#include <sstream>

#include "fprint/error.hpp"
#include "fprint/learners.hpp"
#include "fprint/ucflem.hpp"
#include "support.hpp"

using namespace fprint;
using testing_support::gaussian_dataset;

namespace {

// feature 0 alone separates the classes, the rest is noise
Dataset separable(std::uint64_t seed, int per_class) {
    Rng rng(seed);
    Dataset d;
    for (std::size_t c = 0; c < 3; ++c)
        for (int i = 0; i < per_class; ++i) {
            std::array<double, 6> v{};
            for (auto& x : v) x = rng.uniform(0, 50);
            v[0] = 10.0 * static_cast<double>(c) + rng.uniform(0, 5);
            d.add({FeatureVector::from_array(v), kAllLabels[c], std::to_string(c) + "-" + std::to_string(i)});
        }
    return d;
}

const std::vector<double>& walk(const DecisionTree& t, const FeatureVector& x) {
    int n = 0;
    while (t.nodes[n].feature >= 0) {
        const auto& node = t.nodes[n];
        n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return t.nodes[n].value;
}

Label traverse_oracle(const EnsembleModel& m, const FeatureVector& x) {
    std::vector<double> score(m.classes.size(), 0.0);
    if (m.kind == ModelKind::random_forest) {
        for (const auto& t : m.trees) {
            const auto& p = walk(t, x);
            score[std::max_element(p.begin(), p.end()) - p.begin()] += 1;
        }
    } else {
        score = m.init_scores;
        for (std::size_t j = 0; j < m.trees.size(); ++j) score[j % score.size()] += m.learning_rate * walk(m.trees[j], x)[0];
    }
    return m.classes[std::max_element(score.begin(), score.end()) - score.begin()];
}

Dataset transform_feature(const Dataset& d, std::size_t f, double (*g)(double)) {
    Dataset out;
    for (const auto& s : d.samples()) {
        auto a = s.features.as_array();
        a[f] = g(a[f]);
        out.add({FeatureVector::from_array(a), s.label, s.source_id});
    }
    return out;
}

double train_accuracy(const EnsembleModel& m, const Dataset& d) { return evaluate(m, d).accuracy; }

}  // namespace

TEST(Forest, SeparableFitsExactly) {
    auto d = separable(1, 20);
    EXPECT_DOUBLE_EQ(train_accuracy(train_random_forest(d, 3), d), 1.0);
}

TEST(Forest, Deterministic) {
    auto d = gaussian_dataset(2, 30, 30, 30);
    auto a = train_random_forest(d, 9), b = train_random_forest(d, 9);
    EXPECT_EQ(a, b);
    auto probe = gaussian_dataset(3, 10, 10, 10).features();
    EXPECT_EQ(predict(a, probe), predict(b, probe));
}

TEST(Forest, GaussiansHeldOut) {
    auto train = gaussian_dataset(4, 100, 100, 100, 0.5, 1.0);
    auto test = gaussian_dataset(5, 100, 100, 100, 0.5, 1.0);
    EXPECT_GE(evaluate(train_random_forest(train, 1), test).accuracy, 0.9);
}

TEST(Forest, Preconditions) {
    EXPECT_THROW(train_random_forest(gaussian_dataset(1, 20, 0, 0), 1), Error);
    EXPECT_THROW(train_random_forest(gaussian_dataset(1, 3, 3, 0), 1), Error);
}

TEST(Boost, SeparableFitsExactly) {
    auto d = separable(6, 20);
    EXPECT_DOUBLE_EQ(train_accuracy(train_gradient_boost(d, 3), d), 1.0);
}

TEST(Boost, ZeroLearningRatePredictsPrior) {
    auto d = gaussian_dataset(7, 10, 30, 15);
    BoostParams p;
    p.learning_rate = 0;
    p.rounds = 5;
    auto m = train_gradient_boost(d, 1, p);
    for (const auto& x : gaussian_dataset(8, 10, 10, 10).features()) EXPECT_EQ(predict(m, x), Label::standard);
}

TEST(Boost, GaussiansHeldOut) {
    auto train = gaussian_dataset(9, 100, 100, 100, 0.5, 1.0);
    auto test = gaussian_dataset(10, 100, 100, 100, 0.5, 1.0);
    EXPECT_GE(evaluate(train_gradient_boost(train, 1), test).accuracy, 0.9);
}

TEST(Boost, Deterministic) {
    auto d = gaussian_dataset(11, 30, 30, 30);
    EXPECT_EQ(train_gradient_boost(d, 4), train_gradient_boost(d, 4));
}

TEST(Predict, SingleLeafForest) {
    EnsembleModel m;
    m.classes = {Label::dry, Label::standard, Label::wet};
    DecisionTree t;
    t.nodes.push_back({-1, 0, -1, -1, {0, 0, 1}});
    m.trees.push_back(t);
    EXPECT_EQ(predict(m, FeatureVector{}), Label::wet);
    EXPECT_EQ(predict(m, FeatureVector::from_array({1e9, -3, 2, 2, 2, 1})), Label::wet);
}

TEST(Predict, VoteTieGoesToEarlierClass) {
    EnsembleModel m;
    m.classes = {Label::dry, Label::standard, Label::wet};
    DecisionTree a, b;
    a.nodes.push_back({-1, 0, -1, -1, {0, 0, 1}});
    b.nodes.push_back({-1, 0, -1, -1, {0, 1, 0}});
    m.trees = {a, b};
    EXPECT_EQ(predict(m, FeatureVector{}), Label::standard);
}

TEST(Predict, MatchesTraversalOracle) {
    auto d = gaussian_dataset(12, 40, 40, 40, 1.0, 1.0);
    ForestParams fp;
    fp.trees = 20;
    BoostParams bp;
    bp.rounds = 20;
    auto probe = gaussian_dataset(13, 30, 30, 30, 1.5, 1.0).features();
    for (const auto& m : {train_random_forest(d, 2, fp), train_gradient_boost(d, 2, bp)}) {
        for (const auto& x : probe) EXPECT_EQ(predict(m, x), traverse_oracle(m, x));
    }
}

TEST(Metrics, Examples) {
    std::vector<Label> t{Label::dry, Label::standard, Label::wet, Label::wet};
    auto perfect = compute_metrics(t, t);
    EXPECT_DOUBLE_EQ(perfect.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(perfect.f1, 1.0);

    std::vector<Label> wrong{Label::standard, Label::wet, Label::dry, Label::dry};
    EXPECT_DOUBLE_EQ(compute_metrics(t, wrong).accuracy, 0.0);

    // confusion [[2,1],[0,3]]
    std::vector<Label> truth{Label::dry, Label::dry, Label::dry, Label::wet, Label::wet, Label::wet};
    std::vector<Label> pred{Label::dry, Label::dry, Label::wet, Label::wet, Label::wet, Label::wet};
    auto m = compute_metrics(truth, pred);
    EXPECT_EQ(m.confusion, (std::vector<std::vector<std::size_t>>{{2, 1}, {0, 3}}));
    EXPECT_DOUBLE_EQ(m.accuracy, 5.0 / 6.0);
    EXPECT_DOUBLE_EQ(m.precision, 0.875);
    const double r0 = 2.0 / 3.0, f0 = 2 * 1.0 * r0 / (1.0 + r0), f1 = 2 * 0.75 / 1.75;
    EXPECT_DOUBLE_EQ(m.recall, (r0 + 1.0) / 2);
    EXPECT_DOUBLE_EQ(m.f1, (f0 + f1) / 2);

    EXPECT_THROW(compute_metrics(std::vector<Label>{}, std::vector<Label>{}), Error);
}

TEST(Metrics, ZeroDivisionGivesZero) {
    // standard is never predicted: its precision is 0, not NaN
    std::vector<Label> truth{Label::dry, Label::standard};
    std::vector<Label> pred{Label::dry, Label::dry};
    auto m = compute_metrics(truth, pred);
    EXPECT_DOUBLE_EQ(m.precision, 0.25);
    EXPECT_DOUBLE_EQ(m.recall, 0.5);
}

TEST(Metrics, SmallSetMatchesHandCount) {
    auto d = gaussian_dataset(14, 30, 30, 30);
    auto m = train_random_forest(d, 1);
    auto small = gaussian_dataset(15, 3, 3, 3, 2.0);
    auto pred = predict(m, small.features());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < small.size(); ++i) correct += pred[i] == small[i].label;
    EXPECT_DOUBLE_EQ(evaluate(m, small).accuracy, static_cast<double>(correct) / 9.0);
    std::size_t total = 0;
    for (const auto& row : evaluate(m, small).confusion)
        for (auto c : row) total += c;
    EXPECT_EQ(total, 9u);
}

TEST(Serialize, RoundTrip) {
    auto d = gaussian_dataset(16, 30, 30, 30);
    for (const auto& m : {train_random_forest(d, 5), train_gradient_boost(d, 5)}) {
        std::stringstream ss;
        write_model(ss, m);
        EXPECT_EQ(read_model(ss), m);
    }
    std::stringstream junk("not a model");
    EXPECT_THROW(read_model(junk), Error);
}

TEST(Invariance, PositiveScalingOfOneFeature) {
    auto train = gaussian_dataset(17, 40, 40, 40, 1.0, 1.0);
    auto test = gaussian_dataset(18, 40, 40, 40, 1.0, 1.0);
    auto scale = [](double x) { return x * 1e32; };
    auto tr2 = transform_feature(train, 2, +scale), te2 = transform_feature(test, 2, +scale);
    EXPECT_EQ(predict(train_random_forest(train, 3), test.features()),
              predict(train_random_forest(tr2, 3), te2.features()));
    EXPECT_EQ(predict(train_gradient_boost(train, 3), test.features()),
              predict(train_gradient_boost(tr2, 3), te2.features()));
}

TEST(Invariance, MonotoneTransformOnTrainingPoints) {
    auto train = gaussian_dataset(19, 40, 40, 40, 1.0, 1.0);
    auto cube = [](double x) { return x * x * x; };
    auto tr = transform_feature(train, 0, +cube);
    EXPECT_EQ(predict(train_random_forest(train, 4), train.features()),
              predict(train_random_forest(tr, 4), tr.features()));
}
