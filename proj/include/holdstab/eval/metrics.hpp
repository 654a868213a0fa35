#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "holdstab/core/cycle.hpp"
#include "holdstab/features/sequence.hpp"

namespace holdstab {

struct Metrics {
    double accuracy = 0.0;
    /// Over test sequences whose pose and shake labels differ; NaN when there are none.
    double accuracy_on_sneq = 0.0;
    /// confusion[actual][predicted], Stable = 0.
    std::array<std::array<std::size_t, 2>, 2> confusion{};
    std::size_t n = 0;
    std::size_t n_sneq = 0;

    nlohmann::json to_json() const;
};

/// Scores predictions against shake labels. DataError on an empty set or a
/// length mismatch.
Metrics evaluate(std::span<const BinaryLabel> predicted, std::span<const FeatureSequence* const> test);

using Classifier = std::function<std::vector<BinaryLabel>(std::span<const FeatureSequence* const>)>;

Metrics evaluate(const Classifier& classifier, std::span<const FeatureSequence* const> test);

/// Majority training label; a tie is Stable. DataError when empty.
BinaryLabel majority_label(std::span<const BinaryLabel> train_labels);

/// Constant classifier predicting the majority training label.
Classifier majority_baseline(std::span<const BinaryLabel> train_labels);

struct PhaseCounts {
    std::size_t pass = 0;
    std::size_t slip = 0;
    std::size_t drop = 0;
    std::size_t not_present = 0;

    std::size_t total() const noexcept { return pass + slip + drop + not_present; }
    std::size_t unstable() const noexcept { return slip + drop; }
};

/// Per-phase label tallies over every cycle of a dataset.
struct DatasetStatistics {
    std::array<PhaseCounts, 4> phases{};
    std::size_t cycles = 0;

    const PhaseCounts& at(Phase p) const noexcept { return phases[index(p)]; }
    /// (slip + drop) / cycles in percent, truncated to two decimals and
    /// returned in hundredths of a percent (4364 for 43.64%).
    long unstable_hundredths(Phase p) const;
    /// "43.64%".
    std::string unstable_percent(Phase p) const;

    nlohmann::json to_json() const;
};

DatasetStatistics dataset_statistics(const Dataset& d);

/// Grasp, Pose and Shake rows: Pass, Slip, Drop, Slip+Drop %.
std::string format_statistics_table(const DatasetStatistics& s);
std::string format_statistics_csv(const DatasetStatistics& s);

/// Truncating percentage of num/den in hundredths, exact in integer arithmetic.
long percent_hundredths(std::size_t num, std::size_t den);

}  // namespace holdstab
