#include "holdstab/features/embedder.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "holdstab/core/error.hpp"
#include "holdstab/core/rng.hpp"

namespace holdstab {

namespace {

int pooled_dim(int extent, int pool) { return (extent + pool - 1) / pool; }

}  // namespace

RandomProjectionEmbedder::RandomProjectionEmbedder(int height, int width, int channels, int dimension,
                                                   int pool, std::uint64_t seed)
    : height_(height), width_(width), channels_(channels), pool_(pool), seed_(seed) {
    if (height <= 0 || width <= 0 || channels <= 0) throw ConfigError("embedder input shape must be positive");
    if (dimension <= 0) throw ConfigError("embedding dimension must be positive");
    if (pool <= 0) throw ConfigError("pool size must be positive");

    const int in = pooled_dim(height, pool) * pooled_dim(width, pool) * channels;
    projection_.resize(dimension, in);
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index j = 0; j < projection_.cols(); ++j)
        for (Eigen::Index i = 0; i < projection_.rows(); ++i) projection_(i, j) = standard_normal(rng) * scale;
}

Eigen::VectorXd RandomProjectionEmbedder::embed(const EmbedQuery& q) const {
    const ImageF& img = q.image;
    if (img.height != height_ || img.width != width_ || img.channels != channels_)
        throw DataError("embedder expects " + std::to_string(height_) + "x" + std::to_string(width_) + "x" +
                        std::to_string(channels_) + " images, got " + std::to_string(img.height) + "x" +
                        std::to_string(img.width) + "x" + std::to_string(img.channels) + " (" +
                        std::string(q.stream) + ")");

    const int pw = pooled_dim(width_, pool_);
    Eigen::VectorXd pooled = Eigen::VectorXd::Zero(projection_.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(projection_.cols());
    for (int r = 0; r < height_; ++r)
        for (int c = 0; c < width_; ++c)
            for (int ch = 0; ch < channels_; ++ch) {
                const Eigen::Index k = ((r / pool_) * pw + c / pool_) * channels_ + ch;
                pooled[k] += img.at(r, c, ch);
                counts[k] += 1.0;
            }
    pooled = pooled.cwiseQuotient(counts) / 255.0;
    return projection_ * pooled;
}

nlohmann::json RandomProjectionEmbedder::describe() const {
    return {{"kind", "random_projection"},
            {"height", height_},
            {"width", width_},
            {"channels", channels_},
            {"dimension", dimension()},
            {"pool", pool_},
            {"seed", seed_}};
}

std::string PrecomputedEmbedder::key(std::string_view cycle_id, std::string_view stream, double timestamp) {
    const auto micros = static_cast<long long>(std::llround(timestamp * 1e6));
    std::string k;
    k.reserve(cycle_id.size() + stream.size() + 24);
    k.append(cycle_id).push_back('\x1f');
    k.append(stream).push_back('\x1f');
    k += std::to_string(micros);
    return k;
}

PrecomputedEmbedder::PrecomputedEmbedder(const std::filesystem::path& file) : path_(file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open embedding file " + file.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = [&] { return file.string() + ":" + std::to_string(lineno); };
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(where() + ": " + e.what());
        }
        if (!rec.contains("cycle_id") || !rec.contains("stream") || !rec.contains("t") || !rec.contains("v"))
            throw DataError(where() + ": record needs cycle_id, stream, t and v");
        const auto& v = rec.at("v");
        if (!v.is_array() || v.empty()) throw DataError(where() + ": v must be a nonempty array");
        if (dimension_ == 0) dimension_ = static_cast<int>(v.size());
        if (static_cast<int>(v.size()) != dimension_)
            throw DataError(where() + ": expected " + std::to_string(dimension_) + " values, got " +
                            std::to_string(v.size()));
        Eigen::VectorXd vec(dimension_);
        for (int i = 0; i < dimension_; ++i) vec[i] = v[i].get<double>();
        table_.insert_or_assign(
            key(rec.at("cycle_id").get<std::string>(), rec.at("stream").get<std::string>(), rec.at("t").get<double>()),
            std::move(vec));
    }
    if (table_.empty()) throw DataError("embedding file " + file.string() + " has no records");
}

Eigen::VectorXd PrecomputedEmbedder::embed(const EmbedQuery& q) const {
    const auto it = table_.find(key(q.cycle_id, q.stream, q.timestamp));
    if (it == table_.end()) {
        char t[32];
        std::snprintf(t, sizeof t, "%.6f", q.timestamp);
        throw DataError("no precomputed embedding for cycle '" + std::string(q.cycle_id) + "', stream '" +
                        std::string(q.stream) + "', t=" + t + " in " + path_.string());
    }
    return it->second;
}

nlohmann::json PrecomputedEmbedder::describe() const {
    return {{"kind", "precomputed"}, {"path", path_.string()}, {"dimension", dimension_}};
}

std::unique_ptr<ImageEmbedder> make_embedder(const nlohmann::json& d) {
    const auto kind = d.value("kind", std::string{});
    if (kind == "random_projection")
        return std::make_unique<RandomProjectionEmbedder>(d.at("height").get<int>(), d.at("width").get<int>(),
                                                          d.at("channels").get<int>(), d.at("dimension").get<int>(),
                                                          d.at("pool").get<int>(), d.at("seed").get<std::uint64_t>());
    if (kind == "precomputed") return std::make_unique<PrecomputedEmbedder>(d.at("path").get<std::string>());
    throw ConfigError("unknown embedder kind '" + kind + "'");
}

}  // namespace holdstab
