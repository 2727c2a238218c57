#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cxr {

/// Diagnostic class of a chest radiograph.
enum class Label { Covid19, Normal, ViralPneumonia };

inline constexpr std::array<Label, 3> kAllLabels{Label::Covid19, Label::Normal,
                                                 Label::ViralPneumonia};

/// Classification scheme. The class order returned by scheme_labels() is the
/// row/column order of every confusion matrix and score vector.
enum class Scheme { TwoClass, ThreeClass };

std::string_view to_string(Label label);
std::string_view to_string(Scheme scheme);

/// Accepts the canonical names (COVID19, NORMAL, VIRAL_PNEUMONIA) and a few
/// common spellings ("covid-19", "viral", ...), case-insensitively.
std::optional<Label> parse_label(std::string_view text);
std::optional<Scheme> parse_scheme(std::string_view text);

std::span<const Label> scheme_labels(Scheme scheme);

/// Index of `label` within the scheme's class order, or nullopt if the
/// scheme does not contain it.
std::optional<int> class_index(Scheme scheme, Label label);

}  // namespace cxr
