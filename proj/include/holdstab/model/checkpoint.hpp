#pragma once

#include <filesystem>

#include <json.hpp>

#include "holdstab/model/params.hpp"

namespace holdstab {

/// Binary container:
///   8 bytes   magic "HSCKPT\0\1"
///   u32 LE    format version
///   u64 LE    header length
///   header    JSON: dtype, model config, tensor table, caller metadata
///   payload   parameters as raw little-endian values of the stored dtype
/// A model saved and loaded at the same precision round-trips bit for bit.
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class S>
void save_checkpoint(const std::filesystem::path& path, const Model<S>& model,
                     const nlohmann::json& metadata = nlohmann::json::object());

/// Values stored at the other precision are converted. DataError on a
/// malformed file. The caller metadata is returned through `metadata`.
template <class S>
Model<S> load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

/// Header only; cheap.
nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

}  // namespace holdstab
