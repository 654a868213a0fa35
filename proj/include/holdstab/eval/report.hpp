#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "holdstab/eval/experiment.hpp"

namespace holdstab {

/// Mean and sample standard deviation (0 for a single value) of the finite
/// values; NaN mean when there are none.
struct Summary {
    double mean = 0.0;
    double std = 0.0;
    std::size_t n = 0;
};

Summary summarize(std::span<const double> values);

enum class Score { Accuracy, AccuracyOnSneq };

/// Accuracy summary over every run matching (protocol, variant, modalities).
Summary cell(std::span<const RunResult> results, Protocol protocol, Variant variant, Modalities modalities,
             Score score = Score::Accuracy);

/// "85.21 ± 1.37" in percent, or "-" when the cell is empty.
std::string format_cell(const Summary& s);

/// Unseen-pose table: rows Tactile, Vision, Vision + Tactile; columns
/// Pose Group, Random Poses, Uniform.
std::string format_pose_table(std::span<const RunResult> results, Variant variant = Variant::LstmDrs,
                              Score score = Score::Accuracy);

/// Unseen-object table: one row per variant, columns Vision, Tactile, Both.
std::string format_object_table(std::span<const RunResult> results, Score score = Score::Accuracy);

/// LSTM+DRS minus LSTM, in percentage points, for every (protocol, modalities)
/// where both variants have runs.
std::string format_deltas(std::span<const RunResult> results);

/// One row per (protocol, variant, modalities): n, mean and std of both scores.
std::string format_summary_csv(std::span<const RunResult> results);

struct BarSeries {
    std::string name;
    /// One summary per category; empty cells are skipped.
    std::vector<Summary> values;
};

/// Grouped bar chart with one-std error bars, values in percent.
std::string render_bar_chart_svg(const std::string& title, const std::vector<std::string>& categories,
                                 const std::vector<BarSeries>& series);

std::string pose_chart_svg(std::span<const RunResult> results, Variant variant = Variant::LstmDrs);
std::string object_chart_svg(std::span<const RunResult> results);

}  // namespace holdstab
