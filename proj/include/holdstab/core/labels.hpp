#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace holdstab {

enum class Phase : std::uint8_t { Grasp = 0, Pose = 1, Shake = 2, Retract = 3 };

inline constexpr std::array<Phase, 4> kPhases{Phase::Grasp, Phase::Pose, Phase::Shake,
                                              Phase::Retract};

enum class PhaseLabel : std::uint8_t { Pass = 0, Slip = 1, Drop = 2, NotPresent = 3 };

inline constexpr std::array<PhaseLabel, 4> kPhaseLabels{PhaseLabel::Pass, PhaseLabel::Slip,
                                                        PhaseLabel::Drop, PhaseLabel::NotPresent};

/// Class order is fixed: index 0 = Stable, index 1 = NotStable.
enum class BinaryLabel : std::uint8_t { Stable = 0, NotStable = 1 };

constexpr std::size_t index(Phase p) noexcept { return static_cast<std::size_t>(p); }
constexpr int class_index(BinaryLabel b) noexcept { return static_cast<int>(b); }

constexpr BinaryLabel binary_label(PhaseLabel p) noexcept {
    return p == PhaseLabel::Pass ? BinaryLabel::Stable : BinaryLabel::NotStable;
}

std::string_view to_string(Phase p) noexcept;
std::string_view to_string(PhaseLabel l) noexcept;
std::string_view to_string(BinaryLabel b) noexcept;

std::optional<Phase> parse_phase(std::string_view s) noexcept;
std::optional<PhaseLabel> parse_phase_label(std::string_view s) noexcept;
std::optional<BinaryLabel> parse_binary_label(std::string_view s) noexcept;

}  // namespace holdstab
