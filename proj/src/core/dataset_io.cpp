#include "holdstab/core/dataset_io.hpp"

#include <algorithm>
#include <fstream>

#include "holdstab/core/error.hpp"
#include "holdstab/core/npy.hpp"

namespace holdstab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormatTag = "holdstab-dataset";

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot open '" + p.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("invalid JSON in '" + p.string() + "': " + e.what());
    }
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) throw DataError("cannot open '" + p.string() + "' for writing");
    out << j.dump(2) << '\n';
}

void write_frames(const fs::path& dir, const std::string& name, const TimedStream<Image8>& s) {
    std::vector<std::size_t> shape{s.size(), 0, 0, 0};
    std::vector<std::uint8_t> flat;
    if (!s.samples.empty()) {
        const auto& f = s.samples.front();
        shape = {s.size(), static_cast<std::size_t>(f.height), static_cast<std::size_t>(f.width),
                 static_cast<std::size_t>(f.channels)};
        flat.reserve(s.size() * f.size());
        for (const auto& img : s.samples) flat.insert(flat.end(), img.pixels.begin(), img.pixels.end());
    }
    if (shape[3] == 1) shape.pop_back();
    npy::write_u8(dir / (name + ".npy"), shape, flat);
    npy::write_f64(dir / (name + "_t.npy"), {s.times.size()}, s.times);
}

TimedStream<Image8> read_frames(const fs::path& dir, const std::string& name, const std::string& cycle_id) {
    TimedStream<Image8> s;
    const auto arr = npy::read(dir / (name + ".npy"));
    s.times = npy::read(dir / (name + "_t.npy")).as<double>();
    if (arr.shape.size() < 3 || arr.shape.size() > 4) throw SchemaError(cycle_id, name, "frame array must be N x H x W [x C]");
    const auto n = arr.shape[0];
    const int h = static_cast<int>(arr.shape[1]);
    const int w = static_cast<int>(arr.shape[2]);
    const int c = arr.shape.size() == 4 ? static_cast<int>(arr.shape[3]) : 1;
    if (n != s.times.size()) throw SchemaError(cycle_id, name, "frame count differs from timestamp count");
    const auto pixels = arr.as<std::uint8_t>();
    const std::size_t per = static_cast<std::size_t>(h) * w * c;
    s.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Image8 img(h, w, c);
        std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(i * per), per, img.pixels.begin());
        s.samples.push_back(std::move(img));
    }
    return s;
}

}  // namespace

bool is_safe_id(std::string_view id) noexcept {
    if (id.empty() || id == "." || id == "..") return false;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

std::string to_string(Provenance p) { return p == Provenance::Synthetic ? "synthetic" : "ingested"; }

Provenance parse_provenance(std::string_view s) {
    if (s == "synthetic") return Provenance::Synthetic;
    if (s == "ingested") return Provenance::Ingested;
    throw DataError("unknown provenance '" + std::string(s) + "'");
}

json cycle_metadata(const GraspCycle& c) {
    json labels = json::object();
    json bounds = json::object();
    for (auto p : kPhases) {
        labels[std::string(to_string(p))] = std::string(to_string(c.label(p)));
        bounds[std::string(to_string(p))] = {c.interval(p).start, c.interval(p).end};
    }
    json j = {{"cycle_id", c.cycle_id},
              {"object_id", c.object_id},
              {"grasp_point_id", c.grasp_point_id},
              {"grip_force_n", c.grip_force_n},
              {"pose_id", c.pose_id},
              {"labels", labels},
              {"phase_boundaries", bounds}};
    if (!c.raw.empty()) j["raw"] = c.raw;
    return j;
}

GraspCycle cycle_from_metadata(const json& j) {
    GraspCycle c;
    const std::string id = j.value("cycle_id", std::string{});
    auto need = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw SchemaError(id, key, "missing field");
        return j.at(key);
    };
    try {
        c.cycle_id = need("cycle_id").get<std::string>();
        c.object_id = need("object_id").get<std::string>();
        c.grasp_point_id = need("grasp_point_id").get<std::string>();
        c.grip_force_n = need("grip_force_n").get<double>();
        c.pose_id = need("pose_id").get<int>();
        const auto& labels = need("labels");
        const auto& bounds = need("phase_boundaries");
        for (auto p : kPhases) {
            const std::string key(to_string(p));
            if (!labels.contains(key)) throw SchemaError(id, "labels." + key, "missing field");
            const auto l = parse_phase_label(labels.at(key).get<std::string>());
            if (!l) throw SchemaError(id, "labels." + key, "unknown label '" + labels.at(key).get<std::string>() + "'");
            c.labels[index(p)] = *l;
            if (!bounds.contains(key) || !bounds.at(key).is_array() || bounds.at(key).size() != 2)
                throw SchemaError(id, "phase_boundaries." + key, "expected [start, end]");
            c.boundaries[index(p)] = {bounds.at(key)[0].get<double>(), bounds.at(key)[1].get<double>()};
        }
    } catch (const json::exception& e) {
        throw SchemaError(id, "metadata", e.what());
    }
    static const char* known[] = {"cycle_id", "object_id", "grasp_point_id", "grip_force_n",
                                  "pose_id", "labels", "phase_boundaries", "raw"};
    if (j.contains("raw")) c.raw = j.at("raw");
    for (const auto& [key, value] : j.items()) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) c.raw[key] = value;
    }
    return c;
}

void save_cycle(const GraspCycle& c, const fs::path& dir) {
    if (!is_safe_id(c.cycle_id)) throw SchemaError(c.cycle_id, "cycle_id", "not usable as a directory name");
    fs::create_directories(dir);
    write_json(dir / "meta.json", cycle_metadata(c));
    write_frames(dir, "tactile", c.tactile);
    write_frames(dir, "rgb", c.rgb);
    std::vector<double> flat;
    flat.reserve(c.wrench.size() * 6);
    for (const auto& w : c.wrench.samples) flat.insert(flat.end(), w.begin(), w.end());
    npy::write_f64(dir / "wrench.npy", {c.wrench.size(), 6}, flat);
    npy::write_f64(dir / "wrench_t.npy", {c.wrench.times.size()}, c.wrench.times);
    const auto& pc = c.pre_contact_tactile;
    npy::write_u8(dir / "pre_contact.npy",
                  {static_cast<std::size_t>(pc.height), static_cast<std::size_t>(pc.width)}, pc.pixels);
}

GraspCycle load_cycle(const fs::path& dir, LoadMode mode) {
    GraspCycle c = cycle_from_metadata(read_json(dir / "meta.json"));
    if (mode == LoadMode::MetadataOnly) return c;
    c.tactile = read_frames(dir, "tactile", c.cycle_id);
    c.rgb = read_frames(dir, "rgb", c.cycle_id);
    const auto w = npy::read(dir / "wrench.npy");
    if (w.shape.size() != 2 || w.shape[1] != 6) throw SchemaError(c.cycle_id, "wrench_series", "expected N x 6 array");
    const auto values = w.as<double>();
    c.wrench.times = npy::read(dir / "wrench_t.npy").as<double>();
    if (c.wrench.times.size() != w.shape[0])
        throw SchemaError(c.cycle_id, "wrench_series", "sample count differs from timestamp count");
    c.wrench.samples.resize(w.shape[0]);
    for (std::size_t i = 0; i < w.shape[0]; ++i)
        for (int k = 0; k < 6; ++k) c.wrench.samples[i][k] = values[i * 6 + k];
    const auto pc = npy::read(dir / "pre_contact.npy");
    if (pc.shape.size() != 2) throw SchemaError(c.cycle_id, "pre_contact_tactile", "expected H x W array");
    c.pre_contact_tactile = Image8(static_cast<int>(pc.shape[0]), static_cast<int>(pc.shape[1]));
    c.pre_contact_tactile.pixels = pc.as<std::uint8_t>();
    return c;
}

void save_dataset(const Dataset& d, const fs::path& root, Exec exec) {
    check_unique_ids(d);
    fs::create_directories(root / "cycles");
    json ids = json::array();
    for (const auto& c : d.cycles) ids.push_back(c.cycle_id);
    json manifest = {{"format", kFormatTag},
                     {"format_version", kDatasetFormatVersion},
                     {"provenance", to_string(d.provenance)},
                     {"metadata", d.metadata},
                     {"cycles", ids}};
    for_each_index(exec, d.cycles.size(),
                   [&](std::size_t i) { save_cycle(d.cycles[i], root / "cycles" / d.cycles[i].cycle_id); });
    write_json(root / "dataset.json", manifest);
}

Dataset load_dataset(const fs::path& root, LoadMode mode, Exec exec) {
    const auto manifest_path = root / "dataset.json";
    if (!fs::exists(manifest_path)) throw DataError("no dataset at '" + root.string() + "' (missing dataset.json)");
    const json manifest = read_json(manifest_path);
    if (manifest.value("format", std::string{}) != kFormatTag)
        throw DataError("'" + manifest_path.string() + "' is not a holdstab dataset");
    if (manifest.value("format_version", 0) != kDatasetFormatVersion)
        throw DataError("unsupported dataset format version in '" + manifest_path.string() + "'");
    Dataset d;
    d.provenance = parse_provenance(manifest.value("provenance", std::string{"synthetic"}));
    d.metadata = manifest.value("metadata", json::object());
    const auto ids = manifest.at("cycles").get<std::vector<std::string>>();
    d.cycles.resize(ids.size());
    for_each_index(exec, ids.size(), [&](std::size_t i) {
        if (!is_safe_id(ids[i])) throw SchemaError(ids[i], "cycle_id", "not usable as a directory name");
        d.cycles[i] = load_cycle(root / "cycles" / ids[i], mode);
        if (d.cycles[i].cycle_id != ids[i])
            throw SchemaError(ids[i], "cycle_id", "meta.json id differs from directory listing");
    });
    check_unique_ids(d);
    return d;
}

}  // namespace holdstab
