#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "holdstab/core/cycle.hpp"
#include "holdstab/posespace/posespace.hpp"

namespace holdstab {

enum class Protocol { Uniform, RandomPoses, PoseGroup, UnseenObjects };

std::string_view to_string(Protocol p) noexcept;
/// Accepts "uniform", "random-poses", "pose-group", "unseen-objects" (and _ variants).
Protocol parse_protocol(std::string_view s);

/// The fields of a cycle that splits look at.
struct CycleKey {
    std::string cycle_id;
    std::string object_id;
    int pose_id = 1;
};

std::vector<CycleKey> usable_keys(const Dataset& d);

struct SplitManifest {
    Protocol protocol = Protocol::Uniform;
    std::uint64_t seed = 0;
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    /// Protocol parameters: train_fraction, held_out_poses, held_group,
    /// exclude_reference, held_out_objects.
    nlohmann::json params = nlohmann::json::object();

    nlohmann::json to_json() const;
    static SplitManifest from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static SplitManifest load(const std::filesystem::path& path);
};

inline constexpr double kDefaultTrainFraction = 0.6875;

/// floor(train_fraction * n) random cycles train; the rest is halved into val and test.
SplitManifest split_uniform(std::span<const CycleKey> keys, double train_fraction, std::uint64_t seed);
SplitManifest split_random_poses(std::span<const CycleKey> keys, int n_test_poses, std::uint64_t seed);
/// Reference-pose cycles stay in train unless `exclude_reference`, which drops them.
/// `seed` only drives the val/test halving.
SplitManifest split_pose_group(std::span<const CycleKey> keys, PoseGroup held, std::uint64_t seed = 0,
                               bool exclude_reference = false);
SplitManifest split_unseen_objects(std::span<const CycleKey> keys, int n_test_objects, std::uint64_t seed);

/// Dataset-level conveniences: split the usable cycles.
SplitManifest split_uniform(const Dataset& d, double train_fraction, std::uint64_t seed);
SplitManifest split_random_poses(const Dataset& d, int n_test_poses, std::uint64_t seed);
SplitManifest split_pose_group(const Dataset& d, PoseGroup held, std::uint64_t seed = 0, bool exclude_reference = false);
SplitManifest split_unseen_objects(const Dataset& d, int n_test_objects, std::uint64_t seed);

/// Problems found in a manifest against the keys it was drawn from; empty
/// means clean. Checks disjointness, membership, leakage at the protocol's unit
/// and the val/test halving.
std::vector<std::string> audit_manifest(const SplitManifest& m, std::span<const CycleKey> keys);

}  // namespace holdstab
