#pragma once

#include <array>
#include <span>
#include <vector>

#include "fprint/features.hpp"
#include "fprint/label.hpp"

namespace fprint {

using ClassCounts = std::array<std::size_t, kLabelCount>;

/// Ordered labeled samples with per-class tallies kept in step.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<LabeledSample> samples);

    void add(LabeledSample s);

    std::span<const LabeledSample> samples() const { return samples_; }
    const LabeledSample& operator[](std::size_t i) const { return samples_[i]; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }

    const ClassCounts& counts() const { return counts_; }
    std::size_t count(Label l) const { return counts_[label_index(l)]; }

    /// Labels with at least one sample, in canonical order.
    std::vector<Label> classes() const;
    std::vector<FeatureVector> features_of(Label l) const;
    std::vector<FeatureVector> features() const;
    std::vector<Label> labels() const;

    Dataset subset(std::span<const std::size_t> indices) const;

private:
    std::vector<LabeledSample> samples_;
    ClassCounts counts_{};
};

}  // namespace fprint
