#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "holdstab/core/image.hpp"

namespace holdstab {

/// What an embedder gets to see. File-backed embedders key on the first three
/// fields; computing embedders only look at the image.
struct EmbedQuery {
    std::string_view cycle_id;
    std::string_view stream;  // "tactile" or "rgb"
    double timestamp = 0.0;
    const ImageF& image;
};

/// Frozen image encoder. Implementations must be safe to call concurrently.
class ImageEmbedder {
public:
    virtual ~ImageEmbedder() = default;

    virtual int dimension() const noexcept = 0;
    virtual bool deterministic() const noexcept = 0;
    virtual Eigen::VectorXd embed(const EmbedQuery& q) const = 0;
    /// Enough to rebuild the embedder; recorded in every artifact that used it.
    virtual nlohmann::json describe() const = 0;
};

/// Average-pools `pool`x`pool` blocks, scales to [0, 1] per 255 and projects
/// with a fixed Gaussian matrix drawn from `seed`. Input shape is fixed at
/// construction.
class RandomProjectionEmbedder final : public ImageEmbedder {
public:
    RandomProjectionEmbedder(int height, int width, int channels, int dimension, int pool, std::uint64_t seed);

    int dimension() const noexcept override { return static_cast<int>(projection_.rows()); }
    bool deterministic() const noexcept override { return true; }
    Eigen::VectorXd embed(const EmbedQuery& q) const override;
    nlohmann::json describe() const override;

    int pooled_size() const noexcept { return static_cast<int>(projection_.cols()); }

private:
    int height_, width_, channels_, pool_;
    std::uint64_t seed_;
    Eigen::MatrixXd projection_;
};

/// Looks vectors up in a JSON Lines file with one record per frame:
///   {"cycle_id": "...", "stream": "tactile", "t": 1.2, "v": [..]}
/// Timestamps match to the microsecond.
class PrecomputedEmbedder final : public ImageEmbedder {
public:
    explicit PrecomputedEmbedder(const std::filesystem::path& file);

    int dimension() const noexcept override { return dimension_; }
    bool deterministic() const noexcept override { return true; }
    /// Throws DataError when the record is absent.
    Eigen::VectorXd embed(const EmbedQuery& q) const override;
    nlohmann::json describe() const override;

    std::size_t size() const noexcept { return table_.size(); }

    static std::string key(std::string_view cycle_id, std::string_view stream, double timestamp);

private:
    std::filesystem::path path_;
    int dimension_ = 0;
    std::unordered_map<std::string, Eigen::VectorXd> table_;
};

/// Rebuilds an embedder from describe() output.
std::unique_ptr<ImageEmbedder> make_embedder(const nlohmann::json& description);

}  // namespace holdstab
