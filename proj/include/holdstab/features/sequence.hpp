#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "holdstab/core/cycle.hpp"
#include "holdstab/core/parallel.hpp"
#include "holdstab/features/embedder.hpp"

namespace holdstab {

inline constexpr int kDefaultTimesteps = 20;
inline constexpr int kWrenchDim = 6;

struct Modalities {
    bool vision = false;
    bool tactile = false;

    bool any() const noexcept { return vision || tactile; }
    bool operator==(const Modalities&) const = default;
};

/// "v", "t", "vt" (also "tv", "v+t"); ConfigError otherwise.
Modalities parse_modalities(std::string_view s);
/// Canonical "V", "T" or "V+T".
std::string to_string(Modalities m);

enum class Span { GraspToPoseEnd, GraspToReleaseEnd };

Span parse_span(std::string_view s);
std::string_view to_string(Span s) noexcept;

/// Column ranges of a feature row: tactile | rgb | wrench | grip force.
struct FeatureLayout {
    Modalities modalities;
    int tactile_dim = 0;
    int rgb_dim = 0;

    int tactile_offset() const noexcept { return 0; }
    int rgb_offset() const noexcept { return modalities.tactile ? tactile_dim : 0; }
    int wrench_offset() const noexcept { return rgb_offset() + (modalities.vision ? rgb_dim : 0); }
    int force_offset() const noexcept { return wrench_offset() + kWrenchDim; }
    int dimension() const noexcept { return force_offset() + 1; }

    bool operator==(const FeatureLayout&) const = default;
};

struct FeatureSequence {
    /// T x D.
    Eigen::MatrixXd matrix;
    BinaryLabel label_shake = BinaryLabel::Stable;
    BinaryLabel label_pose = BinaryLabel::Stable;
    std::string cycle_id;
    std::string object_id;
    int pose_id = 1;

    int timesteps() const noexcept { return static_cast<int>(matrix.rows()); }
    int dimension() const noexcept { return static_cast<int>(matrix.cols()); }
    /// Member of S-neq: pose and shake labels disagree.
    bool label_changes() const noexcept { return label_pose != label_shake; }
};

/// Start and end of the span on the cycle clock. Release end is the end of the retract phase.
PhaseInterval span_interval(const GraspCycle& c, Span span);

/// n >= 2 evenly spaced timestamps from span start to span end inclusive. Each
/// stream named in `required` must cover the span; DataError names the first
/// one that does not.
std::vector<double> sample_timesteps(const GraspCycle& c, int n, Span span,
                                     const std::vector<std::string_view>& required = {"tactile", "rgb", "wrench"});

/// Index of the frame closest to t; ties go to the earlier frame.
std::size_t nearest_frame(const std::vector<double>& times, double t);

/// frame - pre_contact, as floats. DataError on shape mismatch.
ImageF tactile_delta(const Image8& frame, const Image8& pre_contact);

struct AssembleOptions {
    Modalities modalities{true, true};
    int timesteps = kDefaultTimesteps;
    Span span = Span::GraspToPoseEnd;
};

/// Embedders may be null when their modality is not selected.
FeatureSequence assemble(const GraspCycle& c, const ImageEmbedder* tactile, const ImageEmbedder* rgb,
                         const AssembleOptions& opts);

FeatureLayout layout_for(const ImageEmbedder* tactile, const ImageEmbedder* rgb, Modalities m);

/// Drops the columns of modalities not in `keep`. `keep` must be a subset of `from.modalities`.
FeatureSequence select_modalities(const FeatureSequence& seq, const FeatureLayout& from, Modalities keep);
FeatureLayout select_layout(const FeatureLayout& from, Modalities keep);

/// Sequences of a whole dataset for one span, extracted once with every
/// modality so protocol runs can slice instead of re-embedding.
struct FeatureBank {
    FeatureLayout layout;
    Span span = Span::GraspToPoseEnd;
    int timesteps = kDefaultTimesteps;
    std::vector<FeatureSequence> sequences;
    /// Embedder descriptions and extraction settings.
    nlohmann::json provenance = nlohmann::json::object();

    std::size_t size() const noexcept { return sequences.size(); }
    /// Position of a cycle id; DataError if absent.
    std::size_t find(std::string_view cycle_id) const;
};

/// In-memory dataset; only usable cycles should be passed in.
FeatureBank extract_features(const std::vector<GraspCycle>& cycles, const ImageEmbedder& tactile,
                             const ImageEmbedder& rgb, Span span, int timesteps, Exec exec = Exec::Parallel);

/// Loads the listed cycles from a dataset directory one at a time, so peak
/// memory is a few cycles per thread rather than the whole dataset.
FeatureBank extract_features(const std::filesystem::path& dataset_root, const std::vector<std::string>& cycle_ids,
                             const ImageEmbedder& tactile, const ImageEmbedder& rgb, Span span, int timesteps,
                             Exec exec = Exec::Parallel);

/// Binary cache: JSON sidecar plus one .npy of shape N x T x D.
void save_feature_bank(const FeatureBank& bank, const std::filesystem::path& stem);
FeatureBank load_feature_bank(const std::filesystem::path& stem);

}  // namespace holdstab
