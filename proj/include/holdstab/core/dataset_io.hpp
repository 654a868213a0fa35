#pragma once

#include <filesystem>

#include <json.hpp>

#include "holdstab/core/cycle.hpp"
#include "holdstab/core/parallel.hpp"

namespace holdstab {

/// On-disk layout:
///   <root>/dataset.json               format tag, provenance, ordered cycle ids, dataset metadata
///   <root>/cycles/<cycle_id>/meta.json
///   <root>/cycles/<cycle_id>/{tactile,tactile_t,rgb,rgb_t,wrench,wrench_t,pre_contact}.npy
inline constexpr int kDatasetFormatVersion = 1;

enum class LoadMode { Full, MetadataOnly };

nlohmann::json cycle_metadata(const GraspCycle& c);
/// Parses a meta.json record; streams are left empty. Unknown keys land in `raw`.
GraspCycle cycle_from_metadata(const nlohmann::json& j);

void save_cycle(const GraspCycle& c, const std::filesystem::path& dir);
GraspCycle load_cycle(const std::filesystem::path& dir, LoadMode mode = LoadMode::Full);

void save_dataset(const Dataset& d, const std::filesystem::path& root, Exec exec = Exec::Parallel);
Dataset load_dataset(const std::filesystem::path& root, LoadMode mode = LoadMode::Full,
                     Exec exec = Exec::Parallel);

/// Ids are used as directory names, so only [A-Za-z0-9._-] is accepted.
bool is_safe_id(std::string_view id) noexcept;

std::string to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

}  // namespace holdstab
