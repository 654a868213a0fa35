#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "holdstab/core/cycle.hpp"
#include "holdstab/core/parallel.hpp"
#include "holdstab/posespace/posespace.hpp"
#include "holdstab/simulate/physics.hpp"
#include "holdstab/simulate/render.hpp"

namespace holdstab {

struct PhaseTiming {
    double pre_roll = 1.0;
    double grasp = 3.0;
    double pose = 4.0;
    double retract = 3.0;
    /// Offsets inside the grasp phase.
    double contact_after = 0.5;
    double lift_after = 1.5;
    /// Final wait in the pose phase before shaking.
    double pose_wait = 1.0;
    /// Gripper opens this long before the end of the retract phase.
    double release_before_end = 0.5;
};

struct NoiseConfig {
    double tactile_sigma = 1.5;
    double rgb_sigma = 2.0;
    double force_sigma = 0.05;
    double torque_sigma = 0.003;
};

struct SimConfig {
    Eigen::Vector3d gravity = kEarthGravity;
    double slip_band = 0.15;
    double lift_accel = 2.5;
    double transit_accel = 1.5;
    ShakeProfile shake;
    PhaseTiming timing;
    NoiseConfig noise;
    double image_rate_hz = 5.0;
    double wrench_rate_hz = 20.0;
    int tactile_height = 24;
    int tactile_width = 32;
    int rgb_height = 16;
    int rgb_width = 20;
    double high_force_n = kMaxGripForce;
    PoseSpaceConfig pose_space;

    void validate() const;
    nlohmann::json to_json() const;
    static SimConfig from_json(const nlohmann::json& j);
};

/// Timing of one cycle derived from a SimConfig.
std::array<PhaseInterval, 4> phase_boundaries(const SimConfig& cfg);

struct PhaseOutcome {
    StabilityMargin margin;
    PhaseLabel label = PhaseLabel::Pass;
};

/// Worst-case margin over the phase's kinematic samples:
///   Grasp   reference pose, rest and lift acceleration
///   Pose    target pose, rest and +-transit acceleration on each world axis
///   Shake   target pose, +-shake amplitude on each world axis, +-rot impulse
///           about the approach axis
///   Retract target and reference pose with transit samples
StabilityMargin phase_margin(Phase phase, const ObjectSpec& obj, std::string_view grasp_point, double grip_force_n,
                             const HoldingPose& pose, const SimConfig& cfg);

/// Margin > 0 Pass, (-slip_band, 0] Slip, otherwise Drop.
PhaseLabel label_from_margin(double margin, double slip_band) noexcept;

/// Labels for all four phases, NotPresent after a Drop.
std::array<PhaseOutcome, 4> phase_outcomes(const ObjectSpec& obj, std::string_view grasp_point, double grip_force_n,
                                           const HoldingPose& pose, const SimConfig& cfg);

MarginHistory margin_history(const std::array<PhaseOutcome, 4>& outcomes, const SimConfig& cfg);

ImprintParams imprint_params(const ObjectSpec& obj, std::string_view grasp_point, double grip_force_n,
                             const SimConfig& cfg);

GraspCycle simulate_cycle(const ObjectSpec& obj, std::string_view grasp_point, double grip_force_n,
                          const HoldingPose& pose, const SimConfig& cfg, std::uint64_t noise_seed);

std::string make_cycle_id(const ObjectSpec& obj, std::string_view grasp_point, double grip_force_n, int pose_id);

/// One (object, grasp point, force, pose) combination in generation order.
struct CycleRecipe {
    std::size_t object_index = 0;
    std::size_t grasp_point_index = 0;
    double grip_force_n = 0.0;
    int pose_id = 1;
};

/// grasp_points x {min_lift_force, high_force} x 16 poses per object.
std::vector<CycleRecipe> enumerate_recipes(const std::vector<ObjectSpec>& catalog, const SimConfig& cfg);

/// Builds one cycle of a catalog run; the noise seed depends only on (seed, index).
GraspCycle simulate_recipe(const std::vector<ObjectSpec>& catalog, const std::vector<HoldingPose>& poses,
                           const CycleRecipe& recipe, std::size_t index, const SimConfig& cfg, std::uint64_t seed);

/// Dataset metadata for a synthetic run (catalog, config, pose table, seed and
/// the generator's own label tally under "ground_truth").
nlohmann::json synthetic_metadata(const std::vector<ObjectSpec>& catalog, const SimConfig& cfg, std::uint64_t seed);

/// In-memory generation. Throws ConfigError for an empty catalog.
Dataset synthesize_dataset(const std::vector<ObjectSpec>& catalog, const SimConfig& cfg, std::uint64_t seed,
                           Exec exec = Exec::Parallel);

/// Streams cycles straight to a dataset directory without holding them all.
void synthesize_to_directory(const std::vector<ObjectSpec>& catalog, const SimConfig& cfg, std::uint64_t seed,
                             const std::filesystem::path& root, Exec exec = Exec::Parallel);

}  // namespace holdstab
