#include "holdstab/eval/splits.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "holdstab/core/error.hpp"
#include "holdstab/core/rng.hpp"

namespace holdstab {

namespace {

constexpr std::uint64_t kValTestStream = 0x7661'6c74'6573'74ULL;

std::string canonical(std::string_view s) {
    std::string out;
    for (char ch : s) out.push_back(ch == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    return out;
}

/// Shuffles the non-train ids and gives the first floor(n/2) to val.
void halve(SplitManifest& m, std::vector<std::string> rest) {
    Rng rng(derive_seed(m.seed, kValTestStream));
    shuffle(rest.begin(), rest.end(), rng);
    const auto n_val = rest.size() / 2;
    m.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
    m.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_val), rest.end());
    if (m.train.empty() || m.val.empty() || m.test.empty())
        throw DataError(std::string(to_string(m.protocol)) + " split leaves train, val or test empty (" +
                        std::to_string(m.train.size()) + "/" + std::to_string(m.val.size()) + "/" +
                        std::to_string(m.test.size()) + ")");
}

template <class Unit, class Of>
SplitManifest split_by_unit(std::span<const CycleKey> keys, Protocol protocol, std::uint64_t seed,
                            const std::set<Unit>& held, Of&& unit_of) {
    SplitManifest m;
    m.protocol = protocol;
    m.seed = seed;
    std::vector<std::string> rest;
    for (const auto& k : keys) (held.count(unit_of(k)) ? rest : m.train).push_back(k.cycle_id);
    halve(m, std::move(rest));
    return m;
}

/// k distinct values from `pool`, chosen with rng; returned sorted.
template <class T>
std::set<T> sample_units(std::vector<T> pool, int k, Rng& rng) {
    shuffle(pool.begin(), pool.end(), rng);
    return std::set<T>(pool.begin(), pool.begin() + k);
}

}  // namespace

std::string_view to_string(Protocol p) noexcept {
    switch (p) {
        case Protocol::Uniform: return "uniform";
        case Protocol::RandomPoses: return "random-poses";
        case Protocol::PoseGroup: return "pose-group";
        case Protocol::UnseenObjects: return "unseen-objects";
    }
    return "?";
}

Protocol parse_protocol(std::string_view s) {
    const auto k = canonical(s);
    if (k == "uniform") return Protocol::Uniform;
    if (k == "random-poses" || k == "poses") return Protocol::RandomPoses;
    if (k == "pose-group" || k == "group") return Protocol::PoseGroup;
    if (k == "unseen-objects" || k == "objects") return Protocol::UnseenObjects;
    throw ConfigError("unknown protocol '" + std::string(s) + "'");
}

std::vector<CycleKey> usable_keys(const Dataset& d) {
    std::vector<CycleKey> keys;
    for (const auto& c : d.cycles)
        if (is_usable(c)) keys.push_back({c.cycle_id, c.object_id, c.pose_id});
    return keys;
}

nlohmann::json SplitManifest::to_json() const {
    return {{"format", "holdstab-manifest"},
            {"format_version", 1},
            {"protocol", std::string(to_string(protocol))},
            {"seed", seed},
            {"params", params},
            {"train", train},
            {"val", val},
            {"test", test}};
}

SplitManifest SplitManifest::from_json(const nlohmann::json& j) {
    SplitManifest m;
    m.protocol = parse_protocol(j.at("protocol").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.params = j.value("params", nlohmann::json::object());
    m.train = j.at("train").get<std::vector<std::string>>();
    m.val = j.at("val").get<std::vector<std::string>>();
    m.test = j.at("test").get<std::vector<std::string>>();
    return m;
}

void SplitManifest::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << to_json().dump(1) << '\n';
}

SplitManifest SplitManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

SplitManifest split_uniform(std::span<const CycleKey> keys, double train_fraction, std::uint64_t seed) {
    if (keys.size() < 10)
        throw DataError("uniform split needs at least 10 usable cycles, have " + std::to_string(keys.size()));
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train fraction must lie strictly between 0 and 1");
    std::vector<std::string> ids;
    for (const auto& k : keys) ids.push_back(k.cycle_id);
    Rng rng(seed);
    shuffle(ids.begin(), ids.end(), rng);
    // The epsilon keeps 0.6875 * 1600 at 1100 despite binary rounding.
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(ids.size()) + 1e-9));
    SplitManifest m;
    m.protocol = Protocol::Uniform;
    m.seed = seed;
    m.params = {{"train_fraction", train_fraction}};
    m.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    halve(m, std::vector<std::string>(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end()));
    return m;
}

SplitManifest split_random_poses(std::span<const CycleKey> keys, int n_test_poses, std::uint64_t seed) {
    std::set<int> present;
    for (const auto& k : keys) present.insert(k.pose_id);
    if (n_test_poses <= 0) throw ConfigError("n_test_poses must be positive");
    if (static_cast<int>(present.size()) < std::max(6, n_test_poses + 1))
        throw DataError("random-poses split with " + std::to_string(n_test_poses) + " test poses needs at least " +
                        std::to_string(std::max(6, n_test_poses + 1)) + " distinct poses, have " +
                        std::to_string(present.size()));
    Rng rng(seed);
    const auto held = sample_units(std::vector<int>(present.begin(), present.end()), n_test_poses, rng);
    auto m = split_by_unit(keys, Protocol::RandomPoses, seed, held, [](const CycleKey& k) { return k.pose_id; });
    m.params = {{"n_test_poses", n_test_poses}, {"held_out_poses", std::vector<int>(held.begin(), held.end())}};
    return m;
}

SplitManifest split_pose_group(std::span<const CycleKey> keys, PoseGroup held, std::uint64_t seed,
                               bool exclude_reference) {
    if (held == PoseGroup::Reference) throw ConfigError("the reference pose is not a holdable group");
    SplitManifest m;
    m.protocol = Protocol::PoseGroup;
    m.seed = seed;
    m.params = {{"held_group", std::string(to_string(held))}, {"exclude_reference", exclude_reference}};
    std::vector<std::string> rest;
    for (const auto& k : keys) {
        const auto g = pose_group(k.pose_id);
        if (g == held)
            rest.push_back(k.cycle_id);
        else if (g != PoseGroup::Reference || !exclude_reference)
            m.train.push_back(k.cycle_id);
    }
    if (rest.empty()) throw DataError("held group " + std::string(to_string(held)) + " has no usable cycles");
    halve(m, std::move(rest));
    return m;
}

SplitManifest split_unseen_objects(std::span<const CycleKey> keys, int n_test_objects, std::uint64_t seed) {
    std::set<std::string> present;
    for (const auto& k : keys) present.insert(k.object_id);
    if (n_test_objects <= 0) throw ConfigError("n_test_objects must be positive");
    if (static_cast<int>(present.size()) < std::max(5, n_test_objects + 1))
        throw DataError("unseen-objects split with " + std::to_string(n_test_objects) + " test objects needs at least " +
                        std::to_string(std::max(5, n_test_objects + 1)) + " distinct objects, have " +
                        std::to_string(present.size()));
    Rng rng(seed);
    const auto held =
        sample_units(std::vector<std::string>(present.begin(), present.end()), n_test_objects, rng);
    auto m = split_by_unit(keys, Protocol::UnseenObjects, seed, held, [](const CycleKey& k) { return k.object_id; });
    m.params = {{"n_test_objects", n_test_objects},
                {"held_out_objects", std::vector<std::string>(held.begin(), held.end())}};
    return m;
}

SplitManifest split_uniform(const Dataset& d, double train_fraction, std::uint64_t seed) {
    const auto keys = usable_keys(d);
    return split_uniform(keys, train_fraction, seed);
}

SplitManifest split_random_poses(const Dataset& d, int n_test_poses, std::uint64_t seed) {
    const auto keys = usable_keys(d);
    return split_random_poses(keys, n_test_poses, seed);
}

SplitManifest split_pose_group(const Dataset& d, PoseGroup held, std::uint64_t seed, bool exclude_reference) {
    const auto keys = usable_keys(d);
    return split_pose_group(keys, held, seed, exclude_reference);
}

SplitManifest split_unseen_objects(const Dataset& d, int n_test_objects, std::uint64_t seed) {
    const auto keys = usable_keys(d);
    return split_unseen_objects(keys, n_test_objects, seed);
}

std::vector<std::string> audit_manifest(const SplitManifest& m, std::span<const CycleKey> keys) {
    std::vector<std::string> problems;
    std::unordered_map<std::string, const CycleKey*> by_id;
    for (const auto& k : keys) by_id.emplace(k.cycle_id, &k);

    std::unordered_map<std::string, int> seen;
    const auto scan = [&](const std::vector<std::string>& ids, const char* name) {
        for (const auto& id : ids) {
            if (!by_id.count(id)) problems.push_back(std::string(name) + " cycle '" + id + "' is not a usable cycle");
            if (++seen[id] > 1) problems.push_back("cycle '" + id + "' appears more than once");
        }
    };
    scan(m.train, "train");
    scan(m.val, "val");
    scan(m.test, "test");

    const std::size_t rest = m.val.size() + m.test.size();
    if (m.val.size() != rest / 2 || m.test.size() != rest - rest / 2)
        problems.push_back("val/test sizes " + std::to_string(m.val.size()) + "/" + std::to_string(m.test.size()) +
                           " are not a 50/50 split of " + std::to_string(rest));

    // Unit of leakage per protocol; the uniform protocol's unit is the cycle itself.
    const auto unit = [&](const std::string& id) -> std::string {
        const auto it = by_id.find(id);
        if (it == by_id.end()) return "?" + id;
        const auto& k = *it->second;
        switch (m.protocol) {
            case Protocol::Uniform: return k.cycle_id;
            case Protocol::RandomPoses: return std::to_string(k.pose_id);
            case Protocol::PoseGroup: return std::string(to_string(pose_group(k.pose_id)));
            case Protocol::UnseenObjects: return k.object_id;
        }
        return k.cycle_id;
    };
    std::unordered_set<std::string> train_units;
    for (const auto& id : m.train) train_units.insert(unit(id));
    std::set<std::string> leaked;
    for (const auto* side : {&m.val, &m.test})
        for (const auto& id : *side)
            if (train_units.count(unit(id))) leaked.insert(unit(id));
    for (const auto& u : leaked)
        problems.push_back(std::string(to_string(m.protocol)) + " unit '" + u + "' occurs in train and in val/test");

    // Every cycle of a held unit must be outside train, and nothing else may be.
    {
        std::unordered_set<std::string> held_units;
        for (const auto* side : {&m.val, &m.test})
            for (const auto& id : *side) held_units.insert(unit(id));
        std::size_t expected_rest = 0;
        const bool exclude_ref = m.params.value("exclude_reference", false);
        for (const auto& k : keys) {
            if (held_units.count(unit(k.cycle_id))) ++expected_rest;
            else if (!seen.count(k.cycle_id) &&
                     !(m.protocol == Protocol::PoseGroup && exclude_ref && pose_group(k.pose_id) == PoseGroup::Reference))
                problems.push_back("cycle '" + k.cycle_id + "' is missing from the manifest");
        }
        if (expected_rest != rest)
            problems.push_back("held units have " + std::to_string(expected_rest) + " cycles but val+test has " +
                               std::to_string(rest));
    }
    return problems;
}

}  // namespace holdstab
