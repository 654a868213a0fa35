#include "holdstab/features/sequence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "holdstab/core/dataset_io.hpp"
#include "holdstab/core/error.hpp"
#include "holdstab/core/npy.hpp"

namespace holdstab {

namespace {

constexpr double kCoverageSlack = 1e-6;

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

BinaryLabel require_binary_label(const nlohmann::json& j, const std::string& where) {
    const auto l = parse_binary_label(j.get<std::string>());
    if (!l) throw DataError(where + ": bad binary label " + j.dump());
    return *l;
}

const std::vector<double>& stream_times(const GraspCycle& c, std::string_view stream) {
    if (stream == "tactile") return c.tactile.times;
    if (stream == "rgb") return c.rgb.times;
    if (stream == "wrench") return c.wrench.times;
    throw ConfigError("unknown stream '" + std::string(stream) + "'");
}

}  // namespace

Modalities parse_modalities(std::string_view s) {
    const auto k = lower(s);
    if (k == "v") return {true, false};
    if (k == "t") return {false, true};
    if (k == "vt" || k == "tv" || k == "v+t" || k == "t+v" || k == "both") return {true, true};
    throw ConfigError("invalid modalities '" + std::string(s) + "' (expected v, t or vt)");
}

std::string to_string(Modalities m) {
    if (m.vision && m.tactile) return "V+T";
    if (m.vision) return "V";
    if (m.tactile) return "T";
    return "none";
}

Span parse_span(std::string_view s) {
    const auto k = lower(s);
    if (k == "grasp-to-pose-end" || k == "grasptoposeend" || k == "pose") return Span::GraspToPoseEnd;
    if (k == "grasp-to-release-end" || k == "grasptoreleaseend" || k == "release" || k == "whole")
        return Span::GraspToReleaseEnd;
    throw ConfigError("invalid span '" + std::string(s) + "'");
}

std::string_view to_string(Span s) noexcept {
    return s == Span::GraspToPoseEnd ? "grasp-to-pose-end" : "grasp-to-release-end";
}

PhaseInterval span_interval(const GraspCycle& c, Span span) {
    const double start = c.interval(Phase::Grasp).start;
    const double end = span == Span::GraspToPoseEnd ? c.interval(Phase::Pose).end : c.interval(Phase::Retract).end;
    return {start, end};
}

std::vector<double> sample_timesteps(const GraspCycle& c, int n, Span span,
                                     const std::vector<std::string_view>& required) {
    if (n < 2) throw ConfigError("need at least 2 timesteps, got " + std::to_string(n));
    const auto iv = span_interval(c, span);
    if (!(iv.end > iv.start))
        throw DataError("cycle '" + c.cycle_id + "': empty " + std::string(to_string(span)) + " span");
    for (const auto stream : required) {
        const auto& t = stream_times(c, stream);
        if (t.empty() || t.front() > iv.start + kCoverageSlack || t.back() < iv.end - kCoverageSlack)
            throw DataError("cycle '" + c.cycle_id + "': stream '" + std::string(stream) + "' does not cover [" +
                            std::to_string(iv.start) + ", " + std::to_string(iv.end) + "]");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    const double step = (iv.end - iv.start) / (n - 1);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = iv.start + step * i;
    out.back() = iv.end;
    return out;
}

std::size_t nearest_frame(const std::vector<double>& times, double t) {
    if (times.empty()) throw DataError("nearest_frame on an empty stream");
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0;
    if (it == times.end()) return times.size() - 1;
    const auto hi = static_cast<std::size_t>(it - times.begin());
    return (t - times[hi - 1] <= times[hi] - t) ? hi - 1 : hi;
}

ImageF tactile_delta(const Image8& frame, const Image8& pre_contact) {
    if (!frame.same_shape(pre_contact))
        throw DataError("tactile frame " + std::to_string(frame.height) + "x" + std::to_string(frame.width) +
                        " does not match pre-contact frame " + std::to_string(pre_contact.height) + "x" +
                        std::to_string(pre_contact.width));
    ImageF out(frame.height, frame.width, frame.channels);
    for (std::size_t i = 0; i < frame.pixels.size(); ++i)
        out.pixels[i] = static_cast<float>(frame.pixels[i]) - static_cast<float>(pre_contact.pixels[i]);
    return out;
}

FeatureLayout layout_for(const ImageEmbedder* tactile, const ImageEmbedder* rgb, Modalities m) {
    if (!m.any()) throw ConfigError("at least one of V and T must be selected");
    if (m.tactile && !tactile) throw ConfigError("tactile modality selected without a tactile embedder");
    if (m.vision && !rgb) throw ConfigError("vision modality selected without an rgb embedder");
    FeatureLayout l;
    l.modalities = m;
    l.tactile_dim = m.tactile ? tactile->dimension() : 0;
    l.rgb_dim = m.vision ? rgb->dimension() : 0;
    return l;
}

FeatureSequence assemble(const GraspCycle& c, const ImageEmbedder* tactile, const ImageEmbedder* rgb,
                         const AssembleOptions& opts) {
    const auto layout = layout_for(tactile, rgb, opts.modalities);
    std::vector<std::string_view> required{"wrench"};
    if (opts.modalities.tactile) required.push_back("tactile");
    if (opts.modalities.vision) required.push_back("rgb");
    const auto times = sample_timesteps(c, opts.timesteps, opts.span, required);

    FeatureSequence seq;
    seq.cycle_id = c.cycle_id;
    seq.object_id = c.object_id;
    seq.pose_id = c.pose_id;
    seq.label_pose = binary_label(c.label(Phase::Pose));
    seq.label_shake = binary_label(c.label(Phase::Shake));
    seq.matrix.resize(opts.timesteps, layout.dimension());

    for (int r = 0; r < opts.timesteps; ++r) {
        const double t = times[static_cast<std::size_t>(r)];
        auto row = seq.matrix.row(r);
        if (opts.modalities.tactile) {
            const auto k = nearest_frame(c.tactile.times, t);
            const auto delta = tactile_delta(c.tactile.samples[k], c.pre_contact_tactile);
            const auto v = tactile->embed({c.cycle_id, "tactile", c.tactile.times[k], delta});
            row.segment(layout.tactile_offset(), layout.tactile_dim) = v.transpose();
        }
        if (opts.modalities.vision) {
            const auto k = nearest_frame(c.rgb.times, t);
            const auto img = image_cast<float>(c.rgb.samples[k]);
            const auto v = rgb->embed({c.cycle_id, "rgb", c.rgb.times[k], img});
            row.segment(layout.rgb_offset(), layout.rgb_dim) = v.transpose();
        }
        const auto& w = c.wrench.samples[nearest_frame(c.wrench.times, t)];
        for (int j = 0; j < kWrenchDim; ++j) row[layout.wrench_offset() + j] = w[static_cast<std::size_t>(j)];
        row[layout.force_offset()] = c.grip_force_n;
    }
    if (!seq.matrix.allFinite()) throw NumericError("cycle '" + c.cycle_id + "': non-finite feature values");
    return seq;
}

FeatureLayout select_layout(const FeatureLayout& from, Modalities keep) {
    if (!keep.any()) throw ConfigError("at least one of V and T must be selected");
    if ((keep.tactile && !from.modalities.tactile) || (keep.vision && !from.modalities.vision))
        throw ConfigError("cannot select " + to_string(keep) + " from " + to_string(from.modalities) + " features");
    FeatureLayout l = from;
    l.modalities = keep;
    if (!keep.tactile) l.tactile_dim = 0;
    if (!keep.vision) l.rgb_dim = 0;
    return l;
}

FeatureSequence select_modalities(const FeatureSequence& seq, const FeatureLayout& from, Modalities keep) {
    const auto to = select_layout(from, keep);
    if (seq.dimension() != from.dimension())
        throw DataError("sequence has " + std::to_string(seq.dimension()) + " columns, layout expects " +
                        std::to_string(from.dimension()));
    if (to == from) return seq;
    FeatureSequence out = seq;
    out.matrix.resize(seq.timesteps(), to.dimension());
    if (keep.tactile)
        out.matrix.middleCols(to.tactile_offset(), to.tactile_dim) =
            seq.matrix.middleCols(from.tactile_offset(), from.tactile_dim);
    if (keep.vision)
        out.matrix.middleCols(to.rgb_offset(), to.rgb_dim) = seq.matrix.middleCols(from.rgb_offset(), from.rgb_dim);
    out.matrix.rightCols(kWrenchDim + 1) = seq.matrix.rightCols(kWrenchDim + 1);
    return out;
}

std::size_t FeatureBank::find(std::string_view cycle_id) const {
    for (std::size_t i = 0; i < sequences.size(); ++i)
        if (sequences[i].cycle_id == cycle_id) return i;
    throw DataError("cycle '" + std::string(cycle_id) + "' not in feature bank");
}

namespace {

FeatureBank empty_bank(const ImageEmbedder& tactile, const ImageEmbedder& rgb, Span span, int timesteps) {
    FeatureBank bank;
    bank.layout = layout_for(&tactile, &rgb, {true, true});
    bank.span = span;
    bank.timesteps = timesteps;
    bank.provenance = {{"tactile_embedder", tactile.describe()},
                       {"rgb_embedder", rgb.describe()},
                       {"span", std::string(to_string(span))},
                       {"timesteps", timesteps}};
    return bank;
}

}  // namespace

FeatureBank extract_features(const std::vector<GraspCycle>& cycles, const ImageEmbedder& tactile,
                             const ImageEmbedder& rgb, Span span, int timesteps, Exec exec) {
    auto bank = empty_bank(tactile, rgb, span, timesteps);
    bank.sequences.resize(cycles.size());
    const AssembleOptions opts{{true, true}, timesteps, span};
    for_each_index(exec, cycles.size(),
                   [&](std::size_t i) { bank.sequences[i] = assemble(cycles[i], &tactile, &rgb, opts); });
    return bank;
}

FeatureBank extract_features(const std::filesystem::path& dataset_root, const std::vector<std::string>& cycle_ids,
                             const ImageEmbedder& tactile, const ImageEmbedder& rgb, Span span, int timesteps,
                             Exec exec) {
    auto bank = empty_bank(tactile, rgb, span, timesteps);
    bank.sequences.resize(cycle_ids.size());
    const AssembleOptions opts{{true, true}, timesteps, span};
    for_each_index(exec, cycle_ids.size(), [&](std::size_t i) {
        const auto c = load_cycle(dataset_root / "cycles" / cycle_ids[i]);
        bank.sequences[i] = assemble(c, &tactile, &rgb, opts);
    });
    return bank;
}

void save_feature_bank(const FeatureBank& bank, const std::filesystem::path& stem) {
    const auto n = bank.sequences.size();
    const auto T = static_cast<std::size_t>(bank.timesteps);
    const auto D = static_cast<std::size_t>(bank.layout.dimension());
    std::vector<double> values;
    values.reserve(n * T * D);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : bank.sequences) {
        if (static_cast<std::size_t>(s.timesteps()) != T || static_cast<std::size_t>(s.dimension()) != D)
            throw DataError("feature bank sequence '" + s.cycle_id + "' has the wrong shape");
        for (std::size_t r = 0; r < T; ++r)
            for (std::size_t c = 0; c < D; ++c)
                values.push_back(s.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        rows.push_back({{"cycle_id", s.cycle_id},
                        {"object_id", s.object_id},
                        {"pose_id", s.pose_id},
                        {"label_pose", std::string(to_string(s.label_pose))},
                        {"label_shake", std::string(to_string(s.label_shake))}});
    }
    npy::write_f64(std::filesystem::path(stem.string() + ".npy"), {n, T, D}, values);
    const nlohmann::json side = {{"format", "holdstab-features"},
                                 {"format_version", 1},
                                 {"span", std::string(to_string(bank.span))},
                                 {"timesteps", bank.timesteps},
                                 {"tactile_dim", bank.layout.tactile_dim},
                                 {"rgb_dim", bank.layout.rgb_dim},
                                 {"vision", bank.layout.modalities.vision},
                                 {"tactile", bank.layout.modalities.tactile},
                                 {"provenance", bank.provenance},
                                 {"sequences", rows}};
    std::ofstream out(stem.string() + ".json");
    if (!out) throw DataError("cannot write " + stem.string() + ".json");
    out << side.dump(1) << '\n';
}

FeatureBank load_feature_bank(const std::filesystem::path& stem) {
    const std::filesystem::path side_path = stem.string() + ".json";
    std::ifstream in(side_path);
    if (!in) throw DataError("cannot open " + side_path.string());
    nlohmann::json side;
    try {
        side = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(side_path.string() + ": " + e.what());
    }
    if (side.value("format", "") != "holdstab-features") throw DataError(side_path.string() + ": not a feature bank");

    FeatureBank bank;
    bank.span = parse_span(side.at("span").get<std::string>());
    bank.timesteps = side.at("timesteps").get<int>();
    bank.layout.modalities = {side.at("vision").get<bool>(), side.at("tactile").get<bool>()};
    bank.layout.tactile_dim = side.at("tactile_dim").get<int>();
    bank.layout.rgb_dim = side.at("rgb_dim").get<int>();
    bank.provenance = side.value("provenance", nlohmann::json::object());

    const auto arr = npy::read(std::filesystem::path(stem.string() + ".npy"));
    const auto& rows = side.at("sequences");
    const auto T = static_cast<std::size_t>(bank.timesteps);
    const auto D = static_cast<std::size_t>(bank.layout.dimension());
    if (arr.shape != std::vector<std::size_t>{rows.size(), T, D})
        throw DataError(stem.string() + ".npy: shape does not match sidecar");
    const auto values = arr.as<double>();
    bank.sequences.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& s = bank.sequences[i];
        const auto& r = rows[i];
        s.cycle_id = r.at("cycle_id").get<std::string>();
        s.object_id = r.at("object_id").get<std::string>();
        s.pose_id = r.at("pose_id").get<int>();
        s.label_pose = require_binary_label(r.at("label_pose"), side_path.string());
        s.label_shake = require_binary_label(r.at("label_shake"), side_path.string());
        s.matrix.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(D));
        const double* p = values.data() + i * T * D;
        for (std::size_t rr = 0; rr < T; ++rr)
            for (std::size_t c = 0; c < D; ++c)
                s.matrix(static_cast<Eigen::Index>(rr), static_cast<Eigen::Index>(c)) = p[rr * D + c];
    }
    return bank;
}

}  // namespace holdstab
