#include "holdstab/train/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "holdstab/core/error.hpp"

namespace holdstab {

void DrsConfig::validate() const {
    if (!(sigma > 0.0)) throw ConfigError("DRS sigma must be positive");
    if (pre_batch_size <= 0) throw ConfigError("DRS pre-batch size must be positive");
}

nlohmann::json DrsConfig::to_json() const {
    return {{"sigma", sigma}, {"pre_batch_size", pre_batch_size}, {"defer_until", defer_until}};
}

DrsConfig DrsConfig::from_json(const nlohmann::json& j) {
    DrsConfig c;
    c.sigma = j.value("sigma", c.sigma);
    c.pre_batch_size = j.value("pre_batch_size", c.pre_batch_size);
    c.defer_until = j.value("defer_until", c.defer_until);
    c.validate();
    return c;
}

Partition partition(std::span<const char> label_changes) {
    Partition p;
    p.changes.assign(label_changes.begin(), label_changes.end());
    for (std::size_t i = 0; i < p.changes.size(); ++i) (p.changes[i] ? p.s_neq : p.s_eq).push_back(i);
    if (p.s_eq.empty()) throw DataError("no training example has matching pose and shake labels; r is undefined");
    p.r = static_cast<double>(p.s_neq.size()) / static_cast<double>(p.s_eq.size());
    return p;
}

Partition partition(const std::vector<bool>& label_changes) {
    std::vector<char> flags(label_changes.begin(), label_changes.end());
    return partition(std::span<const char>(flags));
}

std::vector<std::size_t> uniform_batch(std::size_t n, std::size_t size, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t k = std::min(size, n);
    // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

std::vector<std::size_t> drs_batch(const Partition& part, const DrsConfig& cfg, Rng& rng) {
    cfg.validate();
    if (!(cfg.sigma > part.r))
        throw ConfigError("DRS needs sigma > r (sigma = " + std::to_string(cfg.sigma) +
                          ", r = " + std::to_string(part.r) + ")");
    const double keep = part.r / cfg.sigma;
    const auto pre = uniform_batch(part.size(), static_cast<std::size_t>(cfg.pre_batch_size), rng);
    std::vector<std::size_t> out;
    out.reserve(pre.size());
    for (const auto i : pre) {
        // One draw per pre-batch member keeps the stream position independent of labels.
        const double u = uniform01(rng);
        if (part.changes[i] || u < keep) out.push_back(i);
    }
    return out;
}

}  // namespace holdstab
