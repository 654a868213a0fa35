#include "workspace.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "holdstab/core/dataset_io.hpp"
#include "holdstab/core/error.hpp"
#include "holdstab/core/rng.hpp"
#include "holdstab/features/embedder.hpp"
#include "holdstab/model/checkpoint.hpp"
#include "holdstab/simulate/simulator.hpp"

namespace holdstab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

json default_config() {
    return {
        {"data_root", nullptr},
        {"threads", 0},
        {"synth", {{"objects", 26}, {"seed", 7}, {"catalog", nullptr}, {"sim", SimConfig{}.to_json()}}},
        {"features",
         {{"timesteps", kDefaultTimesteps},
          {"cache_dir", nullptr},
          {"tactile", {{"kind", "random_projection"}, {"dimension", 64}, {"pool", 4}, {"seed", 11}}},
          {"rgb", {{"kind", "random_projection"}, {"dimension", 64}, {"pool", 4}, {"seed", 12}}}}},
        {"split",
         {{"protocol", "uniform"},
          {"seed", 0},
          {"index", 0},
          {"train_fraction", kDefaultTrainFraction},
          {"n_test_poses", 5},
          {"n_test_objects", 4},
          {"exclude_reference", false}}},
        {"model", {{"variant", "lstm-drs"}, {"modalities", "V+T"}}},
        // Overrides only; the protocol's preset fills in the rest.
        {"train", json::object()},
        {"drs", {{"sigma", nullptr}, {"tune", false}}},
        {"sweep",
         {{"protocols", {"uniform", "random-poses", "pose-group"}},
          {"variants", {"lstm", "lstm-drs"}},
          {"modalities", {"T", "V", "V+T"}},
          {"repeats", 3},
          {"seeds", {0}}}},
    };
}

json resolve_config(const std::optional<fs::path>& config_file, const json& overrides) {
    json cfg = default_config();
    if (config_file) {
        const auto file = read_json(*config_file);
        if (!file.is_object()) throw ConfigError("config file '" + config_file->string() + "' is not a JSON object");
        cfg.merge_patch(file);
    }
    cfg.merge_patch(overrides);
    return cfg;
}

fs::path data_root(const json& config) {
    if (config.contains("data_root") && config["data_root"].is_string()) return config["data_root"].get<std::string>();
    if (const char* env = std::getenv(kDataRootEnv); env && *env) return env;
    throw ConfigError(std::string("no data root: pass --data, set data_root in the config, or set ") + kDataRootEnv);
}

TrainConfig train_config(const json& config, Protocol protocol) {
    const auto preset =
        protocol == Protocol::UnseenObjects ? TrainConfig::unseen_object_preset() : TrainConfig::unseen_pose_preset();
    auto cfg = TrainConfig::from_json(config.value("train", json::object()), preset);
    cfg.validate();
    return cfg;
}

VariantOptions variant_options(const json& config, Protocol protocol) {
    VariantOptions o;
    o.train = train_config(config, protocol);
    const auto& drs = config.at("drs");
    if (drs.contains("sigma") && !drs["sigma"].is_null()) o.sigma = drs["sigma"].get<double>();
    o.tune_sigma = drs.value("tune", false);
    return o;
}

ProtocolParams protocol_params(const json& config) { return ProtocolParams::from_json(config.at("split")); }

std::vector<std::string> usable_ids(const fs::path& root) {
    const auto meta = load_dataset(root, LoadMode::MetadataOnly);
    const auto usable = filter_usable(meta, ValidationOptions{.require_streams = false});
    std::vector<std::string> ids;
    ids.reserve(usable.size());
    for (const auto& c : usable.cycles) ids.push_back(c.cycle_id);
    if (ids.empty()) throw DataError("dataset '" + root.string() + "' has no usable cycles");
    return ids;
}

namespace {

/// Fills in the image shape a random projection needs from a sample cycle.
json embedder_description(const json& section, const Image8& sample) {
    json d = section;
    if (d.value("kind", std::string{}) == "random_projection") {
        d["height"] = sample.height;
        d["width"] = sample.width;
        d["channels"] = sample.channels;
    }
    return d;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

FeatureBank load_or_extract(const fs::path& root, const json& config, Span span, std::ostream* progress) {
    const auto ids = usable_ids(root);
    const auto& f = config.at("features");
    const int timesteps = f.value("timesteps", kDefaultTimesteps);

    const auto sample = load_cycle(root / "cycles" / ids.front());
    if (sample.tactile.empty() || sample.rgb.empty())
        throw DataError("cycle '" + sample.cycle_id + "' has no image streams to size the embedders");
    const auto tactile_desc = embedder_description(f.at("tactile"), sample.tactile.samples.front());
    const auto rgb_desc = embedder_description(f.at("rgb"), sample.rgb.samples.front());

    const json key = {{"tactile", tactile_desc}, {"rgb", rgb_desc}, {"timesteps", timesteps},
                      {"span", to_string(span)}, {"cycles", ids}};
    const fs::path dir = f.contains("cache_dir") && f["cache_dir"].is_string()
                             ? fs::path(f["cache_dir"].get<std::string>())
                             : root / "features";
    const auto stem = dir / (std::string(to_string(span)) + "-" + hex(stable_hash(key.dump())));
    if (fs::exists(fs::path(stem).concat(".json")) && fs::exists(fs::path(stem).concat(".npy"))) {
        if (progress) *progress << "features: cached " << stem.string() << "\n";
        return load_feature_bank(stem);
    }

    if (progress) *progress << "features: extracting " << ids.size() << " cycles (" << to_string(span) << ")\n";
    const auto tactile = make_embedder(tactile_desc);
    const auto rgb = make_embedder(rgb_desc);
    auto bank = extract_features(root, ids, *tactile, *rgb, span, timesteps);
    fs::create_directories(dir);
    save_feature_bank(bank, stem);
    return bank;
}

json layout_to_json(const FeatureLayout& l) {
    return {{"modalities", to_string(l.modalities)}, {"tactile_dim", l.tactile_dim}, {"rgb_dim", l.rgb_dim}};
}

void save_run(const fs::path& dir, const FittedModel& fm, const SplitManifest& manifest, const json& config) {
    fs::create_directories(dir);
    write_json(dir / "config.json", config);
    manifest.save(dir / "manifest.json");
    json fitted = fm.describe();
    fitted["layout"] = layout_to_json(fm.layout);
    fitted["sigma"] = fm.sigma;
    write_json(dir / "fitted.json", fitted);
    if (fm.model) save_checkpoint(dir / "model.ckpt", *fm.model, fitted);
}

FittedModel load_run(const fs::path& dir, const FeatureLayout& layout) {
    const auto fitted = read_json(dir / "fitted.json");
    if (fitted.at("layout") != layout_to_json(layout))
        throw DataError("run '" + dir.string() + "' was trained on features with layout " + fitted["layout"].dump() +
                        ", current features have " + layout_to_json(layout).dump());
    FittedModel fm;
    fm.variant = parse_variant(fitted.at("variant").get<std::string>());
    fm.modalities = parse_modalities(fitted.at("modalities").get<std::string>());
    fm.layout = layout;
    fm.sigma = fitted.value("sigma", 0.0);
    if (fm.variant == Variant::Majority) {
        const auto label = parse_binary_label(fitted.at("majority").get<std::string>());
        if (!label) throw DataError("run '" + dir.string() + "' has a bad majority label");
        fm.majority = *label;
        return fm;
    }
    fm.standardizer = Standardizer::from_json(fitted.at("standardizer"));
    fm.model = load_checkpoint<float>(dir / "model.ckpt");
    return fm;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& s) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << s;
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

}  // namespace holdstab::cli
