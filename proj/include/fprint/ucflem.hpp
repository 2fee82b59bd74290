#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fprint/balance.hpp"
#include "fprint/dataset.hpp"
#include "fprint/learners.hpp"

namespace fprint {

/// Identity of the two base learners: psi1 is the random forest, psi2 the
/// gradient-boosted ensemble.
enum class Learner { psi1 = 0, psi2 = 1 };
std::string_view to_string(Learner l);

struct LayerModels {
    Learner layer1 = Learner::psi2;
    Learner layer2 = Learner::psi2;
};

/// Layer 1 takes psi1 only when it is strictly more accurate; layer 2 takes
/// psi1 only when it is strictly less accurate. Equal accuracies put psi2 on
/// both layers.
LayerModels assign_layer_models(double a1, double a2);

struct Resolved {
    std::size_t sample = 0;  // index into the original test set
    Label label = Label::standard;
    friend bool operator==(const Resolved&, const Resolved&) = default;
};

struct Agreement {
    std::vector<Resolved> rho;      // both layers agreed
    std::vector<std::size_t> tau;   // layers disagreed
};

/// `ids` names the samples the two label lists describe.
Agreement split_agreement(std::span<const std::size_t> ids, std::span<const Label> l1, std::span<const Label> l2);

struct UcflemConfig {
    double train_fraction = 0.7;
    double validation_fraction = 0.2;
    bool balance = true;
    std::uint64_t seed = 42;
    ForestParams forest;
    BoostParams boost;
    BalanceParams balancing;
};

struct PhaseResult {
    std::vector<Resolved> rho;
    std::vector<std::size_t> tau;
    double accuracy_psi1 = 0.0;  // A_1, validation fold
    double accuracy_psi2 = 0.0;  // A_2, validation fold
    LayerModels layers;
    EnsembleModel psi1;
    EnsembleModel psi2;
    std::size_t train_size = 0;
    ClassCounts train_counts{};
    BalanceReport balance_report;
};

/// One fuzzification phase. `test_ids` index into `test` and name the samples
/// this phase must label.
PhaseResult run_phase(const Dataset& train, std::span<const FeatureVector> test,
                      std::span<const std::size_t> test_ids, const UcflemConfig& cfg, std::uint64_t phase_seed);

/// Per-learner validation accuracies, one entry per phase the learner ran in.
struct AccuracyTable {
    std::vector<double> psi1;
    std::vector<double> psi2;
};

/// One entry per layer a learner served in, across the given phases.
AccuracyTable layer_accuracies(std::initializer_list<const PhaseResult*> phases);

/// Mean accuracy per learner; the larger wins, ties go to psi2.
Learner best_learner(const AccuracyTable& table);

struct Defuzzified {
    std::vector<Label> labels;
    Learner fallback = Learner::psi2;
    std::vector<std::size_t> fallback_samples;
};

/// Agreed labels are kept; every sample in `unresolved` is labeled by the
/// best-average learner, predicted through `fallback`. The union of rho1,
/// rho2 and unresolved must partition [0, total).
Defuzzified defuzzify(std::size_t total, std::span<const Resolved> rho1, std::span<const Resolved> rho2,
                      std::span<const std::size_t> unresolved, const AccuracyTable& table,
                      const std::function<Label(Learner, std::size_t)>& fallback);

struct UcflemResult {
    std::vector<std::size_t> test_indices;  // into the input dataset
    std::vector<Label> truth;
    std::vector<Label> predicted;
    Metrics metrics;
    PhaseResult phase1;
    PhaseResult phase2;
    Learner fallback = Learner::psi2;
    std::size_t fallback_count = 0;
};

/// Seeded stratified split; returns (train indices, test indices).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const Dataset& d, double train_fraction,
                                                                               std::uint64_t seed);

/// Full two-phase run on a labeled dataset with evaluation.
UcflemResult classify_dataset(const Dataset& d, const UcflemConfig& cfg);

std::string report_text(const UcflemResult& r, const UcflemConfig& cfg);
std::string report_json(const UcflemResult& r, const UcflemConfig& cfg);

}  // namespace fprint
