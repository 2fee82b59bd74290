#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fprint/dataset.hpp"
#include "fprint/error.hpp"

namespace fprint {

using Vec6 = std::array<double, kFeatureCount>;
using Mat6 = std::array<Vec6, kFeatureCount>;

/// Medoid neighbourhood: rows 0..4 are the medoid's five nearest class
/// members, row 5 is the medoid itself.
struct NeighborMatrix {
    Mat6 rows{};
    /// Set when the class had fewer than 6 members and rows were filled by
    /// repeating the medoid.
    bool padded = false;
};

struct EigenDirection {
    Vec6 direction{};  // unit length, first non-zero entry positive
    double magnitude = 0.0;
};

/// Thrown when a neighbourhood has zero spread.
class DegenerateClass : public Error {
public:
    using Error::Error;
};

double euclidean(const FeatureVector& a, const FeatureVector& b);

/// Index of the member minimizing the summed distance to all others; ties
/// resolve to the lowest index.
std::size_t medoid_index(std::span<const FeatureVector> members);
FeatureVector class_medoid(std::span<const FeatureVector> members);

/// Five nearest members (distance ties by index) then the medoid. Needs >= 6 members unless
/// `pad_small` is set, in which case missing rows repeat the medoid.
NeighborMatrix build_neighbor_matrix(std::span<const FeatureVector> members, std::size_t medoid,
                                     bool pad_small = false);

/// Sample covariance (divisor n-1) of the six rows.
Mat6 covariance(const NeighborMatrix& m);
/// Largest eigenpair of a symmetric 6x6 matrix.
EigenDirection dominant_eigenpair(const Mat6& symmetric);
EigenDirection dominant_eigendirection(const NeighborMatrix& m);

/// medoid + step * sqrt(magnitude) * direction, with non-negative fields
/// clamped at zero.
FeatureVector generate_candidate(const NeighborMatrix& m, double step);
FeatureVector generate_candidate(const NeighborMatrix& m, const EigenDirection& e, double step);

// ---------------------------------------------------------------------------
// KL guard

/// Equal-width per-feature binning over a reference set's min-max range.
struct Binning {
    static constexpr int kBins = 16;
    Vec6 lo{};
    Vec6 hi{};

    static Binning fit(std::span<const FeatureVector> reference);
    int bin(std::size_t feature, double value) const;
    friend bool operator==(const Binning&, const Binning&) = default;
};

/// Concatenated per-feature histograms, each smoothed and normalized to 1.
struct Distribution {
    Binning binning;
    std::vector<double> mass;  // kFeatureCount * Binning::kBins entries
};

inline constexpr double kKlSmoothing = 1e-6;

Distribution make_distribution(std::span<const FeatureVector> samples, const Binning& binning);
/// Distribution from raw per-bin counts (kFeatureCount * kBins entries).
Distribution distribution_from_counts(std::span<const double> counts, const Binning& binning);
/// Sum over all bins of p * ln(p / q). Throws on mismatched binning.
double kl_divergence(const Distribution& p, const Distribution& q);

/// Label of the class whose distribution diverges most from the whole set.
/// Ties go to the earlier label.
Label max_divergence_class(const Dataset& d);

enum class GuardReason { none, argmax_shift, duplicate };
std::string_view to_string(GuardReason r);

struct GuardDecision {
    bool accepted = false;
    GuardReason reason = GuardReason::none;
};

GuardDecision kl_guard(const LabeledSample& candidate, Label kappa, const Dataset& balanced);
GuardDecision kl_guard(const LabeledSample& candidate, const Dataset& original, const Dataset& balanced);

// ---------------------------------------------------------------------------
// Oversampling

struct BalanceParams {
    double step = 1.0;
    double jitter_lo = 0.25;
    double jitter_hi = 1.75;
    int max_attempts = 50;
    /// Draw the medoid's five neighbours from the observed class members
    /// only. The medoid itself is still chosen among all members, synthetic
    /// ones included. With this off, neighbourhoods fill up with earlier
    /// synthetic samples and their spread shrinks geometrically.
    bool observed_neighbors = true;
};

struct BalanceLogEntry {
    std::size_t attempt = 0;
    Label label = Label::standard;
    double step = 0.0;
    bool accepted = false;
    GuardReason reason = GuardReason::none;
};

struct BalanceReport {
    Label kappa = Label::standard;
    std::vector<BalanceLogEntry> log;
    std::vector<Label> padded_classes;     // had < 6 members at some point
    std::vector<Label> exhausted_classes;  // ran out of attempts
    std::vector<std::string> warnings;
};

/// Per-feature sample standard deviation (1 where a feature is constant).
Vec6 feature_scales(const Dataset& d);

/// Eigen-direction oversampling up to the majority count. Medoids,
/// neighbourhoods and eigen-directions are found on features divided by
/// feature_scales(d); candidates are generated and guarded in raw units. The output keeps
/// the input as a prefix; synthetic samples follow in acceptance order.
Dataset balance_dataset(const Dataset& d, std::uint64_t seed, const BalanceParams& params = {},
                        BalanceReport* report = nullptr);

/// Acceptance log as CSV: attempt,class,step,decision,reason
std::string format_balance_log(const BalanceReport& report);

/// Classic SMOTE interpolation toward one of the k nearest same-class neighbours.
Dataset smote_baseline(const Dataset& d, int k, std::uint64_t seed);

}  // namespace fprint
