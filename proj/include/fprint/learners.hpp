#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "fprint/dataset.hpp"

namespace fprint {

/// Axis-aligned binary tree. Leaves carry either class probabilities
/// (classification) or a single value (regression).
struct DecisionTree {
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;  // go left when x[feature] <= threshold
        int left = -1;
        int right = -1;
        std::vector<double> value;
        friend bool operator==(const Node&, const Node&) = default;
    };
    std::vector<Node> nodes;  // nodes[0] is the root

    const std::vector<double>& leaf(const FeatureVector& x) const;
    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

enum class ModelKind { random_forest, gradient_boost };
std::string_view to_string(ModelKind k);

struct ForestParams {
    int trees = 100;
    int max_depth = 8;
    int features_per_split = 3;  // ceil(sqrt(6))
    int min_samples_leaf = 1;
};

struct BoostParams {
    int rounds = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    int min_samples_leaf = 1;
    double subsample = 1.0;
};

/// Trained ensemble. For gradient boosting `trees` holds rounds x classes
/// regression trees, round-major.
struct EnsembleModel {
    ModelKind kind = ModelKind::random_forest;
    std::vector<Label> classes;
    std::vector<DecisionTree> trees;
    std::vector<double> init_scores;  // boosting only, one per class
    double learning_rate = 0.0;       // boosting only
    std::uint64_t seed = 0;
    double validation_accuracy = 0.0;

    friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;
};

EnsembleModel train_random_forest(const Dataset& d, std::uint64_t seed, const ForestParams& params = {});
EnsembleModel train_gradient_boost(const Dataset& d, std::uint64_t seed, const BoostParams& params = {});

/// Ties resolve to the earlier entry of the model's class list.
Label predict(const EnsembleModel& model, const FeatureVector& x);
std::vector<Label> predict(const EnsembleModel& model, std::span<const FeatureVector> xs);

struct Metrics {
    std::vector<Label> classes;
    /// confusion[truth][predicted], indexed by position in `classes`.
    std::vector<std::vector<std::size_t>> confusion;
    double accuracy = 0.0;
    double precision = 0.0;  // macro
    double recall = 0.0;     // macro
    double f1 = 0.0;         // macro, mean of per-class F1
};

/// Classes are every label seen in truth or prediction, canonical order.
Metrics compute_metrics(std::span<const Label> truth, std::span<const Label> predicted);
Metrics evaluate(const EnsembleModel& model, const Dataset& test);

void write_model(std::ostream& os, const EnsembleModel& model);
EnsembleModel read_model(std::istream& is);
void save_model(const std::filesystem::path& path, const EnsembleModel& model);
EnsembleModel load_model(const std::filesystem::path& path);

}  // namespace fprint
