#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "holdstab/core/parallel.hpp"
#include "holdstab/features/sequence.hpp"

namespace holdstab {

inline constexpr double kStdFloor = 1e-8;

/// Per-coordinate affine map to zero mean and unit variance, pooled over every
/// row of every fitting sequence.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;

    int dimension() const noexcept { return static_cast<int>(mean.size()); }

    static Standardizer identity(int dimension);

    /// DataError on a column-count mismatch.
    FeatureSequence apply(const FeatureSequence& seq) const;
    void apply_in_place(Eigen::MatrixXd& m) const;

    nlohmann::json to_json() const;
    static Standardizer from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static Standardizer load(const std::filesystem::path& path);
};

/// Two-pass fit. Population std, floored at kStdFloor. A column that holds a
/// single value gets exactly that value as its mean, so it maps to exact zeros.
/// Per-sequence partial sums are reduced in input order, so the result does not
/// depend on the thread count.
Standardizer fit_standardizer(std::span<const FeatureSequence* const> seqs, Exec exec = Exec::Parallel);
Standardizer fit_standardizer(const std::vector<FeatureSequence>& seqs, Exec exec = Exec::Parallel);

}  // namespace holdstab
