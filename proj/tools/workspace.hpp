#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "holdstab/core/cycle.hpp"
#include "holdstab/eval/experiment.hpp"
#include "holdstab/features/sequence.hpp"

namespace holdstab::cli {

inline constexpr const char* kDataRootEnv = "HOLDSTAB_DATA_ROOT";

/// Built-in defaults for every configurable value, grouped by section.
nlohmann::json default_config();

/// defaults <- config file <- overrides, each a JSON merge patch.
nlohmann::json resolve_config(const std::optional<std::filesystem::path>& config_file, const nlohmann::json& overrides);

/// --data, then the config's data_root, then $HOLDSTAB_DATA_ROOT. ConfigError if none.
std::filesystem::path data_root(const nlohmann::json& config);

/// Train config for a protocol: the matching preset overlaid with config["train"].
TrainConfig train_config(const nlohmann::json& config, Protocol protocol);
VariantOptions variant_options(const nlohmann::json& config, Protocol protocol);
ProtocolParams protocol_params(const nlohmann::json& config);

/// Usable cycle ids of a dataset directory, read from metadata only.
std::vector<std::string> usable_ids(const std::filesystem::path& root);

/// Feature bank for a span, cached under <root>/features keyed by the
/// embedder settings, timesteps and cycle list. Extraction runs on a miss.
FeatureBank load_or_extract(const std::filesystem::path& root, const nlohmann::json& config, Span span,
                            std::ostream* progress = nullptr);

/// Run directory contents: config.json, manifest.json, model.ckpt (absent
/// for the majority baseline), fitted.json, train_log.jsonl.
void save_run(const std::filesystem::path& dir, const FittedModel& fm, const SplitManifest& manifest,
              const nlohmann::json& config);
FittedModel load_run(const std::filesystem::path& dir, const FeatureLayout& layout);

nlohmann::json layout_to_json(const FeatureLayout& l);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& s);

}  // namespace holdstab::cli
