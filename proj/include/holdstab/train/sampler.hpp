#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "holdstab/core/rng.hpp"

namespace holdstab {

/// Deferred resampling: after the learning-rate anneal, batches are drawn as a
/// uniform pre-batch whose label-consistent members are thinned.
struct DrsConfig {
    /// Target ratio of label-changing to label-consistent updates.
    double sigma = 0.5;
    int pre_batch_size = 200;
    /// First iteration that uses DRS. Negative means "at the anneal".
    int defer_until = -1;

    void validate() const;
    nlohmann::json to_json() const;
    static DrsConfig from_json(const nlohmann::json& j);
};

/// Training examples split by whether their pose and shake labels agree.
struct Partition {
    std::vector<std::size_t> s_eq;
    std::vector<std::size_t> s_neq;
    /// Per training index: true for members of s_neq.
    std::vector<char> changes;
    /// |s_neq| / |s_eq|.
    double r = 0.0;

    std::size_t size() const noexcept { return changes.size(); }
};

/// DataError when no example has matching labels (r undefined).
Partition partition(std::span<const char> label_changes);
Partition partition(const std::vector<bool>& label_changes);

/// min(size, n) distinct indices from [0, n), uniformly at random.
std::vector<std::size_t> uniform_batch(std::size_t n, std::size_t size, Rng& rng);

/// Uniform pre-batch without replacement; keeps every s_neq member and each
/// s_eq member with probability r / sigma. ConfigError unless sigma > r.
std::vector<std::size_t> drs_batch(const Partition& part, const DrsConfig& cfg, Rng& rng);

}  // namespace holdstab
