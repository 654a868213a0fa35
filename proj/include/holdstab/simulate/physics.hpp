#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "holdstab/posespace/posespace.hpp"

namespace holdstab {

inline const Eigen::Vector3d kEarthGravity{0.0, 0.0, -9.81};

/// Gripping forces available when lifting, newtons.
inline constexpr std::array<double, 3> kLiftForceOptions{5.0, 15.0, 40.0};
inline constexpr double kMaxGripForce = 80.0;

struct GraspPoint {
    std::string id;
    /// Object centre of mass relative to the grasp point, hand frame, metres.
    Eigen::Vector3d com_offset = Eigen::Vector3d::Zero();
};

struct ObjectSpec {
    std::string object_id;
    double mass_kg = 0.1;
    double friction = 0.5;
    /// Effective contact patch radius, metres.
    double patch_halfwidth_m = 0.008;
    std::vector<GraspPoint> grasp_points;
    double min_lift_force_n = 5.0;
    /// Visual extent used by the schematic camera, metres.
    double size_m = 0.06;
    std::array<std::uint8_t, 3> color{200, 80, 40};

    /// Throws ConfigError on non-physical values.
    void validate() const;
    /// Throws ConfigError for an unknown id.
    const GraspPoint& grasp_point(std::string_view id) const;

    nlohmann::json to_json() const;
    static ObjectSpec from_json(const nlohmann::json& j);
};

struct ShakeProfile {
    /// Angular acceleration about the gripper approach axis, rad/s^2.
    double rot_impulse = 40.0;
    /// Linear acceleration amplitude along each world axis, m/s^2.
    double lin_accel_amplitude = 6.0;
    double duration = 4.0;

    void validate() const;
};

/// (capacity - demand) / capacity for the friction force and the torsional
/// friction moment about the closing axis. Positive means the grasp holds.
struct StabilityMargin {
    double translational = 1.0;
    double rotational = 1.0;

    double combined() const noexcept { return translational < rotational ? translational : rotational; }
};

struct ContactLoad {
    double translational_demand = 0.0;
    double rotational_demand = 0.0;
    double translational_capacity = 0.0;
    double rotational_capacity = 0.0;
};

/// Quasi-static two-finger friction model. The gravito-inertial load
/// m * (gravity - a_com), expressed in the hand frame, must be carried by
/// friction in the finger plane (component along the closing axis is taken by
/// the finger normal). The moment of that load about the grasp point, projected
/// on the closing axis, must be carried by torsional friction of two uniform
/// circular patches: (2/3) * mu * F * r each.
///
/// `accel` is the gripper's kinematic acceleration (world frame);
/// `angular_accel` (world frame) adds alpha x r to the centre-of-mass acceleration.
ContactLoad contact_load(const ObjectSpec& obj, std::string_view grasp_point, double grip_force_n,
                         const HoldingPose& pose, const Eigen::Vector3d& accel,
                         const Eigen::Vector3d& gravity = kEarthGravity,
                         const Eigen::Vector3d& angular_accel = Eigen::Vector3d::Zero());

StabilityMargin margin_from_load(const ContactLoad& load) noexcept;

StabilityMargin stability_margin(const ObjectSpec& obj, std::string_view grasp_point, double grip_force_n,
                                 const HoldingPose& pose, const Eigen::Vector3d& accel,
                                 const Eigen::Vector3d& gravity = kEarthGravity,
                                 const Eigen::Vector3d& angular_accel = Eigen::Vector3d::Zero());

}  // namespace holdstab
