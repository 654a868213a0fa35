#include "holdstab/core/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "holdstab/core/dataset_io.hpp"
#include "holdstab/core/error.hpp"
#include "holdstab/core/npy.hpp"

namespace holdstab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Dotted lookup ("labels.grasp"); returns nullptr when absent.
const json* lookup(const json& j, const std::string& dotted) {
    const json* cur = &j;
    std::size_t pos = 0;
    while (pos <= dotted.size()) {
        const auto next = dotted.find('.', pos);
        const auto key = dotted.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &cur->at(key);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return cur;
}

std::string top_key(const std::string& dotted) { return dotted.substr(0, dotted.find('.')); }

const json* first_of(const json& j, const std::vector<std::string>& names, std::set<std::string>& used) {
    for (const auto& n : names) {
        if (const json* v = lookup(j, n)) {
            used.insert(top_key(n));
            return v;
        }
    }
    return nullptr;
}

std::string sanitize(std::string s) {
    for (auto& c : s)
        if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.'))
            c = '_';
    return s;
}

std::string as_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    return v.dump();
}

PhaseLabel parse_label_value(const json& v, const std::string& id, const std::string& field) {
    if (v.is_string()) {
        if (auto l = parse_phase_label(v.get<std::string>())) return *l;
    } else if (v.is_number_integer()) {
        const auto k = v.get<int>();
        if (k >= 0 && k <= 3) return static_cast<PhaseLabel>(k);
    }
    throw SchemaError(id, field, "unrecognized label value " + v.dump());
}

std::optional<fs::path> find_stream(const fs::path& dir, const std::vector<std::string>& names) {
    for (const auto& n : names)
        if (fs::exists(dir / (n + ".npy"))) return dir / n;
    return std::nullopt;
}

TimedStream<Image8> frames_from(const fs::path& base, const std::string& id, const std::string& field) {
    TimedStream<Image8> s;
    const auto arr = npy::read(base.string() + ".npy");
    const auto tpath = fs::path(base.string() + "_t.npy");
    if (!fs::exists(tpath)) throw SchemaError(id, field, "missing timestamps " + tpath.string());
    s.times = npy::read(tpath).as<double>();
    if (arr.shape.size() < 3) throw SchemaError(id, field, "frame array must be N x H x W [x C]");
    const int h = static_cast<int>(arr.shape[1]), w = static_cast<int>(arr.shape[2]);
    const int c = arr.shape.size() > 3 ? static_cast<int>(arr.shape[3]) : 1;
    const auto px = arr.as<double>();
    const std::size_t per = static_cast<std::size_t>(h) * w * c;
    for (std::size_t i = 0; i < arr.shape[0]; ++i) {
        Image8 img(h, w, c);
        for (std::size_t k = 0; k < per; ++k)
            img.pixels[k] = static_cast<std::uint8_t>(std::clamp(px[i * per + k], 0.0, 255.0));
        s.samples.push_back(std::move(img));
    }
    return s;
}

}  // namespace

IngestMapping IngestMapping::from_json(const json& j) {
    IngestMapping m;
    if (j.contains("metadata_files")) m.metadata_files = j.at("metadata_files").get<std::vector<std::string>>();
    if (j.contains("field_aliases"))
        for (const auto& [k, v] : j.at("field_aliases").items()) m.field_aliases[k] = v.get<std::vector<std::string>>();
    if (j.contains("stream_files"))
        for (const auto& [k, v] : j.at("stream_files").items()) m.stream_files[k] = v.get<std::vector<std::string>>();
    m.zero_based_pose = j.value("zero_based_pose", false);
    return m;
}

json IngestMapping::to_json() const {
    return {{"metadata_files", metadata_files},
            {"field_aliases", field_aliases},
            {"stream_files", stream_files},
            {"zero_based_pose", zero_based_pose}};
}

Dataset ingest_release(const fs::path& source, const IngestMapping& mapping, IngestReport* report) {
    if (!fs::is_directory(source)) throw DataError("ingest source '" + source.string() + "' is not a directory");
    IngestReport local;
    IngestReport& rep = report ? *report : local;

    std::vector<std::pair<fs::path, fs::path>> found;  // (dir, metadata file)
    for (const auto& entry : fs::recursive_directory_iterator(source)) {
        if (!entry.is_directory()) continue;
        for (const auto& name : mapping.metadata_files) {
            if (fs::exists(entry.path() / name)) {
                found.emplace_back(entry.path(), entry.path() / name);
                break;
            }
        }
    }
    for (const auto& name : mapping.metadata_files)
        if (fs::exists(source / name)) found.emplace_back(source, source / name);
    std::sort(found.begin(), found.end());

    Dataset d;
    d.provenance = Provenance::Ingested;
    d.metadata = {{"ingest_source", source.string()}, {"ingest_mapping", mapping.to_json()}};

    for (const auto& [dir, meta_path] : found) {
        json meta;
        {
            std::ifstream in(meta_path);
            try {
                meta = json::parse(in);
            } catch (const json::exception& e) {
                rep.skipped.push_back(dir.string() + ": invalid JSON (" + e.what() + ")");
                continue;
            }
        }
        std::set<std::string> used;
        auto field = [&](const std::string& key) { return first_of(meta, mapping.field_aliases.at(key), used); };

        GraspCycle c;
        const json* idv = field("cycle_id");
        c.cycle_id = sanitize(idv ? as_text(*idv) : fs::relative(dir, source).generic_string());
        const std::string& id = c.cycle_id;
        const json* obj = field("object_id");
        if (!obj) throw SchemaError(id, "object_id", "missing in " + meta_path.string());
        c.object_id = as_text(*obj);
        const json* gp = field("grasp_point_id");
        c.grasp_point_id = gp ? as_text(*gp) : "0";
        const json* force = field("grip_force_n");
        if (!force || !force->is_number()) throw SchemaError(id, "grip_force_n", "missing or not numeric");
        c.grip_force_n = force->get<double>();
        const json* pose = field("pose_id");
        if (!pose || !pose->is_number_integer()) throw SchemaError(id, "pose_id", "missing or not an integer");
        c.pose_id = pose->get<int>() + (mapping.zero_based_pose ? 1 : 0);
        for (auto p : kPhases) {
            const std::string key = "label." + std::string(to_string(p));
            const json* v = field(key);
            if (!v) throw SchemaError(id, "labels." + std::string(to_string(p)), "missing");
            c.labels[index(p)] = parse_label_value(*v, id, "labels." + std::string(to_string(p)));
        }
        if (const json* pb = field("phase_boundaries")) {
            for (auto p : kPhases) {
                const std::string key(to_string(p));
                if (!pb->contains(key)) throw SchemaError(id, "phase_boundaries." + key, "missing");
                const auto& iv = pb->at(key);
                c.boundaries[index(p)] = {iv.at(0).get<double>(), iv.at(1).get<double>()};
            }
        } else {
            throw SchemaError(id, "phase_boundaries", "missing");
        }
        for (const auto& [key, value] : meta.items())
            if (!used.count(key)) c.raw[key] = value;

        const auto& sf = mapping.stream_files;
        const auto tactile = find_stream(dir, sf.at("tactile"));
        const auto rgb = find_stream(dir, sf.at("rgb"));
        const auto wrench = find_stream(dir, sf.at("wrench"));
        const auto pre = find_stream(dir, sf.at("pre_contact"));
        if (tactile && rgb && wrench && pre) {
            c.tactile = frames_from(*tactile, id, "tactile_frames");
            c.rgb = frames_from(*rgb, id, "rgb_frames");
            const auto w = npy::read(wrench->string() + ".npy");
            const auto wt = fs::path(wrench->string() + "_t.npy");
            if (w.shape.size() != 2 || w.shape[1] != 6) throw SchemaError(id, "wrench_series", "expected N x 6");
            if (!fs::exists(wt)) throw SchemaError(id, "wrench_series", "missing timestamps");
            c.wrench.times = npy::read(wt).as<double>();
            const auto vals = w.as<double>();
            c.wrench.samples.resize(w.shape[0]);
            for (std::size_t i = 0; i < w.shape[0]; ++i)
                for (int k = 0; k < 6; ++k) c.wrench.samples[i][k] = vals[i * 6 + k];
            const auto pc = npy::read(pre->string() + ".npy");
            if (pc.shape.size() < 2) throw SchemaError(id, "pre_contact_tactile", "expected H x W");
            c.pre_contact_tactile = Image8(static_cast<int>(pc.shape[0]), static_cast<int>(pc.shape[1]));
            const auto px = pc.as<double>();
            for (std::size_t k = 0; k < c.pre_contact_tactile.pixels.size(); ++k)
                c.pre_contact_tactile.pixels[k] = static_cast<std::uint8_t>(std::clamp(px[k], 0.0, 255.0));
            ++rep.with_streams;
        }
        const auto violations = validate_cycle(c, {.require_streams = c.has_streams()});
        if (!violations.empty())
            throw SchemaError(id, violations.front().field, violations.front().rule);
        d.cycles.push_back(std::move(c));
        ++rep.cycles;
    }
    check_unique_ids(d);
    return d;
}

}  // namespace holdstab
