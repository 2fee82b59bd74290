#include "fprint/dataset.hpp"

namespace fprint {

Dataset::Dataset(std::vector<LabeledSample> samples) : samples_(std::move(samples)) {
    for (const auto& s : samples_) ++counts_[label_index(s.label)];
}

void Dataset::add(LabeledSample s) {
    ++counts_[label_index(s.label)];
    samples_.push_back(std::move(s));
}

std::vector<Label> Dataset::classes() const {
    std::vector<Label> out;
    for (auto l : kAllLabels) {
        if (counts_[label_index(l)] > 0) out.push_back(l);
    }
    return out;
}

std::vector<FeatureVector> Dataset::features_of(Label l) const {
    std::vector<FeatureVector> out;
    out.reserve(count(l));
    for (const auto& s : samples_) {
        if (s.label == l) out.push_back(s.features);
    }
    return out;
}

std::vector<FeatureVector> Dataset::features() const {
    std::vector<FeatureVector> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.push_back(s.features);
    return out;
}

std::vector<Label> Dataset::labels() const {
    std::vector<Label> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.push_back(s.label);
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    for (auto i : indices) out.add(samples_.at(i));
    return out;
}

}  // namespace fprint
