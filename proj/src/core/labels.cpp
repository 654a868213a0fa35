#include "holdstab/core/labels.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace holdstab {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::string_view to_string(Phase p) noexcept {
    switch (p) {
        case Phase::Grasp: return "grasp";
        case Phase::Pose: return "pose";
        case Phase::Shake: return "shake";
        case Phase::Retract: return "retract";
    }
    return "?";
}

std::string_view to_string(PhaseLabel l) noexcept {
    switch (l) {
        case PhaseLabel::Pass: return "pass";
        case PhaseLabel::Slip: return "slip";
        case PhaseLabel::Drop: return "drop";
        case PhaseLabel::NotPresent: return "not_present";
    }
    return "?";
}

std::string_view to_string(BinaryLabel b) noexcept {
    return b == BinaryLabel::Stable ? "stable" : "not_stable";
}

std::optional<Phase> parse_phase(std::string_view s) noexcept {
    const auto v = lower(s);
    for (auto p : kPhases)
        if (v == to_string(p)) return p;
    if (v == "shaking" || v == "stability_check") return Phase::Shake;
    if (v == "release") return Phase::Retract;
    return std::nullopt;
}

std::optional<PhaseLabel> parse_phase_label(std::string_view s) noexcept {
    const auto v = lower(s);
    for (auto l : kPhaseLabels)
        if (v == to_string(l)) return l;
    if (v == "notpresent" || v == "not present" || v == "not-present") return PhaseLabel::NotPresent;
    return std::nullopt;
}

std::optional<BinaryLabel> parse_binary_label(std::string_view s) noexcept {
    const auto v = lower(s);
    if (v == "stable") return BinaryLabel::Stable;
    if (v == "not_stable" || v == "notstable" || v == "not stable") return BinaryLabel::NotStable;
    return std::nullopt;
}

}  // namespace holdstab
