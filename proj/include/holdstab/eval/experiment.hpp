#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "holdstab/core/parallel.hpp"
#include "holdstab/eval/metrics.hpp"
#include "holdstab/eval/splits.hpp"
#include "holdstab/features/sequence.hpp"
#include "holdstab/features/standardizer.hpp"
#include "holdstab/model/params.hpp"
#include "holdstab/train/trainer.hpp"

namespace holdstab {

/// LstmP trains on pose-phase labels and is scored on shake labels; LstmWc sees
/// the whole cycle including the shake.
enum class Variant { Lstm, LstmDrs, LstmP, LstmWc, Linear, Majority };

inline constexpr Variant kAllVariants[] = {Variant::LstmWc, Variant::Majority, Variant::LstmP,
                                           Variant::Linear, Variant::Lstm,     Variant::LstmDrs};

/// "lstm", "lstm-drs", "lstm-p", "lstm-wc", "linear", "majority".
std::string_view to_string(Variant v) noexcept;
Variant parse_variant(std::string_view s);
/// Row label used in reports, e.g. "LSTM+DRS".
std::string_view display_name(Variant v) noexcept;

struct ProtocolParams {
    double train_fraction = kDefaultTrainFraction;
    int n_test_poses = 5;
    int n_test_objects = 4;
    bool exclude_reference = false;

    nlohmann::json to_json() const;
    static ProtocolParams from_json(const nlohmann::json& j);
};

/// Split number `index` of a protocol. Pose-group splits cycle through G1, G2, G3.
SplitManifest make_manifest(std::span<const CycleKey> keys, Protocol protocol, const ProtocolParams& params,
                            std::size_t index, std::uint64_t split_seed);

/// Sigma used when not tuning: 0.5 for tactile-only features, 1 otherwise.
double default_sigma(Modalities m) noexcept;
inline constexpr double kSigmaChoices[] = {0.5, 1.0};

struct VariantOptions {
    TrainConfig train;
    std::optional<double> sigma;
    /// Pick sigma from kSigmaChoices by validation accuracy.
    bool tune_sigma = false;
};

/// Feature banks for the two spans. `release` is only needed by LstmWc.
struct ExperimentData {
    const FeatureBank* pose = nullptr;
    const FeatureBank* release = nullptr;

    std::vector<CycleKey> keys() const;
};

/// A trained classifier plus everything needed to reuse it.
struct FittedModel {
    Variant variant = Variant::Lstm;
    Modalities modalities;
    FeatureLayout layout;
    Standardizer standardizer;
    std::optional<Model<float>> model;
    BinaryLabel majority = BinaryLabel::Stable;
    std::optional<TrainResult> training;
    double sigma = 0.0;

    /// Standardizes and predicts. Sequences must have the bank's full layout.
    std::vector<BinaryLabel> predict(std::span<const FeatureSequence* const> raw) const;
    nlohmann::json describe() const;
};

/// Fits one variant on the manifest's train slice, selecting checkpoints on
/// its val slice. Test labels are never read.
FittedModel fit_variant(const ExperimentData& data, Variant variant, Modalities modalities, const SplitManifest& manifest,
                        const VariantOptions& opts, Exec exec = Exec::Parallel, std::ostream* train_log = nullptr);

struct RunResult {
    Protocol protocol = Protocol::Uniform;
    Variant variant = Variant::Lstm;
    Modalities modalities;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
    /// Held group or split index, for reports.
    std::string split_tag;
    Metrics metrics;
    int best_iteration = -1;
    double best_val_accuracy = 0.0;
    double sigma = 0.0;

    nlohmann::json to_json() const;
};

/// Fits and scores one (manifest, seed) run.
RunResult run_single(const ExperimentData& data, Variant variant, Modalities modalities, const SplitManifest& manifest,
                     const VariantOptions& opts, Exec exec = Exec::Parallel, std::ostream* train_log = nullptr);

struct ExperimentSpec {
    Protocol protocol = Protocol::Uniform;
    Variant variant = Variant::LstmDrs;
    Modalities modalities{true, true};
    /// Number of splits; split i uses seed split_seed_base + i.
    int repeats = 1;
    std::uint64_t split_seed_base = 0;
    /// Training seeds per split.
    std::vector<std::uint64_t> seeds{0};
    VariantOptions options;
    ProtocolParams params;

    nlohmann::json to_json() const;
};

struct RunHooks {
    std::function<void(const SplitManifest&, std::size_t split_index)> on_manifest;
    std::function<void(const RunResult&)> on_result;
};

/// Every (split, seed) run of a spec. Runs execute in parallel under
/// Exec::Parallel, each training serially inside; results come back in
/// (split, seed) order regardless of scheduling.
std::vector<RunResult> run_experiment(const ExperimentData& data, const ExperimentSpec& spec,
                                      Exec exec = Exec::Parallel, const RunHooks* hooks = nullptr);

/// Columns: protocol, variant, modalities, seed, split_seed, accuracy,
/// accuracy_on_Sneq, n_test.
void write_results_header(std::ostream& out);
void write_result_row(std::ostream& out, const RunResult& r);
void write_results_csv(std::ostream& out, std::span<const RunResult> results);
std::vector<RunResult> read_results_csv(std::istream& in);

}  // namespace holdstab
