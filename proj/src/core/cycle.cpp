#include "holdstab/core/cycle.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "holdstab/core/error.hpp"

namespace holdstab {

namespace {

constexpr double kTimeTol = 1e-9;
constexpr double kPreRoll = 1.0;  // streams start this long before grasping

template <class T>
void check_stream(const TimedStream<T>& s, const std::string& name, double from, double to,
                  std::vector<Violation>& out) {
    if (s.empty()) {
        out.push_back({name, "stream is empty"});
        return;
    }
    if (s.times.size() != s.samples.size()) {
        out.push_back({name, "timestamp count differs from sample count"});
        return;
    }
    for (std::size_t i = 1; i < s.times.size(); ++i) {
        if (!(s.times[i] > s.times[i - 1])) {
            out.push_back({name, "timestamps not strictly increasing"});
            break;
        }
    }
    if (s.times.front() > from + kTimeTol || s.times.back() < to - kTimeTol)
        out.push_back({name, "stream does not cover [grasp.start - 1 s, retract.end]"});
}

void check_frames(const TimedStream<Image8>& s, const std::string& name, int channels,
                  std::vector<Violation>& out) {
    if (s.samples.empty()) return;
    const auto& first = s.samples.front();
    if (first.channels != channels || first.empty()) {
        out.push_back({name, "unexpected frame channel count or empty frame"});
        return;
    }
    for (const auto& f : s.samples) {
        if (!f.same_shape(first) || f.pixels.size() != first.pixels.size()) {
            out.push_back({name, "frames have inconsistent shapes"});
            return;
        }
    }
}

}  // namespace

std::vector<Violation> validate_cycle(const GraspCycle& c, const ValidationOptions& opts) {
    std::vector<Violation> out;
    if (c.cycle_id.empty()) out.push_back({"cycle_id", "must be non-empty"});
    if (c.object_id.empty()) out.push_back({"object_id", "must be non-empty"});
    if (!(c.grip_force_n > 0.0) || !std::isfinite(c.grip_force_n))
        out.push_back({"grip_force_n", "must be positive and finite"});
    if (c.pose_id < 1 || c.pose_id > 16) out.push_back({"pose_id", "must be in 1..16"});

    bool dropped = false;
    for (auto p : kPhases) {
        const auto l = c.label(p);
        const std::string field = "labels." + std::string(to_string(p));
        if (static_cast<unsigned>(l) > 3u) {
            out.push_back({field, "unknown label value"});
            continue;
        }
        if (l == PhaseLabel::NotPresent && !dropped)
            out.push_back({field, "NotPresent without prior Drop"});
        if (dropped && l != PhaseLabel::NotPresent)
            out.push_back({field, "label after Drop must be NotPresent"});
        if (l == PhaseLabel::Drop) dropped = true;
    }

    for (auto p : kPhases) {
        const auto& iv = c.interval(p);
        if (!std::isfinite(iv.start) || !std::isfinite(iv.end) || !(iv.end > iv.start))
            out.push_back({"phase_boundaries." + std::string(to_string(p)), "empty or non-finite interval"});
    }
    for (std::size_t k = 0; k + 1 < kPhases.size(); ++k) {
        const auto& a = c.boundaries[k];
        const auto& b = c.boundaries[k + 1];
        const std::string field = "phase_boundaries." + std::string(to_string(kPhases[k + 1]));
        if (a.end > b.start + kTimeTol || b.end <= a.start)
            out.push_back({field, "phase boundaries overlap"});
        else if (a.end < b.start - kTimeTol)
            out.push_back({field, "phase boundaries not contiguous"});
    }

    if (opts.require_streams) {
        const double from = c.interval(Phase::Grasp).start - kPreRoll;
        const double to = c.interval(Phase::Retract).end;
        check_stream(c.tactile, "tactile_frames", from, to, out);
        check_stream(c.rgb, "rgb_frames", from, to, out);
        check_stream(c.wrench, "wrench_series", from, to, out);
        check_frames(c.tactile, "tactile_frames", 1, out);
        check_frames(c.rgb, "rgb_frames", 3, out);
        if (c.pre_contact_tactile.empty())
            out.push_back({"pre_contact_tactile", "missing"});
        else if (!c.tactile.samples.empty() && !c.pre_contact_tactile.same_shape(c.tactile.samples.front()))
            out.push_back({"pre_contact_tactile", "shape differs from tactile frames"});
        for (const auto& w : c.wrench.samples) {
            bool finite = true;
            for (double v : w) finite = finite && std::isfinite(v);
            if (!finite) {
                out.push_back({"wrench_series", "non-finite sample"});
                break;
            }
        }
    }
    return out;
}

bool is_usable(const GraspCycle& c) noexcept {
    return c.label(Phase::Grasp) != PhaseLabel::Drop && c.label(Phase::Pose) != PhaseLabel::Drop;
}

Dataset filter_usable(const Dataset& d, const ValidationOptions& opts) {
    Dataset out;
    out.provenance = d.provenance;
    out.metadata = d.metadata;
    for (const auto& c : d.cycles) {
        const auto violations = validate_cycle(c, opts);
        if (!violations.empty())
            throw SchemaError(c.cycle_id, violations.front().field, violations.front().rule);
        if (is_usable(c)) out.cycles.push_back(c);
    }
    return out;
}

void check_unique_ids(const Dataset& d) {
    std::unordered_set<std::string> seen;
    for (const auto& c : d.cycles)
        if (!seen.insert(c.cycle_id).second) throw SchemaError(c.cycle_id, "cycle_id", "duplicate cycle id");
}

}  // namespace holdstab
