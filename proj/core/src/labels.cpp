#include "cxr/labels.hpp"

#include <algorithm>
#include <cctype>

namespace cxr {

namespace {

constexpr std::array<Label, 2> kTwoClass{Label::Covid19, Label::Normal};

std::string normalized(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '-' || c == ' ' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Covid19: return "COVID19";
    case Label::Normal: return "NORMAL";
    case Label::ViralPneumonia: return "VIRAL_PNEUMONIA";
  }
  return "UNKNOWN";
}

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::TwoClass ? "TWO_CLASS" : "THREE_CLASS";
}

std::optional<Label> parse_label(std::string_view text) {
  const auto key = normalized(text);
  if (key == "covid19" || key == "covid") return Label::Covid19;
  if (key == "normal") return Label::Normal;
  if (key == "viralpneumonia" || key == "viral" || key == "pneumonia") return Label::ViralPneumonia;
  return std::nullopt;
}

std::optional<Scheme> parse_scheme(std::string_view text) {
  const auto key = normalized(text);
  if (key == "twoclass" || key == "2class" || key == "2") return Scheme::TwoClass;
  if (key == "threeclass" || key == "3class" || key == "3") return Scheme::ThreeClass;
  return std::nullopt;
}

std::span<const Label> scheme_labels(Scheme scheme) {
  if (scheme == Scheme::TwoClass) return kTwoClass;
  return kAllLabels;
}

std::optional<int> class_index(Scheme scheme, Label label) {
  const auto labels = scheme_labels(scheme);
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return std::nullopt;
  return static_cast<int>(it - labels.begin());
}

}  // namespace cxr
