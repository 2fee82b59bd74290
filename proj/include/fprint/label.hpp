#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace fprint {

/// Scan quality class. Order is the canonical class-list order used for ties.
enum class Label : int { dry = 0, standard = 1, wet = 2 };

inline constexpr std::array<Label, 3> kAllLabels{Label::dry, Label::standard, Label::wet};
inline constexpr std::size_t kLabelCount = kAllLabels.size();

inline std::size_t label_index(Label l) { return static_cast<std::size_t>(l); }

inline std::string_view to_string(Label l) {
    switch (l) {
        case Label::dry: return "dry";
        case Label::standard: return "standard";
        case Label::wet: return "wet";
    }
    return "?";
}

inline std::optional<Label> parse_label(std::string_view s) {
    for (auto l : kAllLabels) {
        if (s == to_string(l)) return l;
    }
    return std::nullopt;
}

}  // namespace fprint
