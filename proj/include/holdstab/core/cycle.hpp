#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "holdstab/core/image.hpp"
#include "holdstab/core/labels.hpp"

namespace holdstab {

/// Force (N, x3) then torque (N*m, x3), sensor frame.
using Wrench = std::array<double, 6>;

/// Samples with timestamps in seconds relative to cycle start. times is sorted.
template <class T>
struct TimedStream {
    std::vector<double> times;
    std::vector<T> samples;

    std::size_t size() const noexcept { return times.size(); }
    bool empty() const noexcept { return times.empty(); }
    bool operator==(const TimedStream&) const = default;
};

struct PhaseInterval {
    double start = 0.0;
    double end = 0.0;
    bool operator==(const PhaseInterval&) const = default;
};

/// One grasp trial. Treated as an immutable value once built.
struct GraspCycle {
    std::string cycle_id;
    std::string object_id;
    std::string grasp_point_id;
    double grip_force_n = 0.0;
    int pose_id = 1;
    std::array<PhaseLabel, 4> labels{};
    std::array<PhaseInterval, 4> boundaries{};
    TimedStream<Image8> tactile;
    TimedStream<Image8> rgb;
    TimedStream<Wrench> wrench;
    Image8 pre_contact_tactile;
    /// Fields from an ingested source that have no place in this schema.
    nlohmann::json raw = nlohmann::json::object();

    PhaseLabel label(Phase p) const noexcept { return labels[index(p)]; }
    const PhaseInterval& interval(Phase p) const noexcept { return boundaries[index(p)]; }
    bool has_streams() const noexcept { return !tactile.empty() || !rgb.empty() || !wrench.empty(); }

    bool operator==(const GraspCycle&) const = default;
};

enum class Provenance { Synthetic, Ingested };

struct Dataset {
    std::vector<GraspCycle> cycles;
    Provenance provenance = Provenance::Synthetic;
    /// Dataset-level records (pose-space table, catalog, generator config).
    nlohmann::json metadata = nlohmann::json::object();

    std::size_t size() const noexcept { return cycles.size(); }
    bool empty() const noexcept { return cycles.empty(); }
};

struct Violation {
    std::string field;
    std::string rule;
    bool operator==(const Violation&) const = default;
};

struct ValidationOptions {
    /// Metadata-only loads skip the stream checks.
    bool require_streams = true;
};

/// Checks every GraspCycle invariant; empty result iff the cycle is well-formed.
std::vector<Violation> validate_cycle(const GraspCycle& c, const ValidationOptions& opts = {});

/// Cycles whose object is still held after the grasp and pose phases, in order.
/// Throws SchemaError for the first malformed cycle.
Dataset filter_usable(const Dataset& d, const ValidationOptions& opts = {});

bool is_usable(const GraspCycle& c) noexcept;

/// Throws SchemaError on duplicate ids.
void check_unique_ids(const Dataset& d);

}  // namespace holdstab
