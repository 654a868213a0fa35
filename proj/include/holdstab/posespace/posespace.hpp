#pragma once

#include <array>
#include <string_view>
#include <vector>

#include <Eigen/Geometry>
#include <json.hpp>

namespace holdstab {

enum class PoseGroup { Reference, G1, G2, G3 };

std::string_view to_string(PoseGroup g) noexcept;
/// Accepts "G1", "g1", "1" etc. Throws ConfigError otherwise.
PoseGroup parse_pose_group(std::string_view s);

inline constexpr int kNumPoses = 16;
inline constexpr int kPosesPerGroup = 5;

/// Hand frame: the gripper approaches along hand -z and the fingers close
/// along hand +y. The reference pose (id 1) is the identity rotation, i.e.
/// gripper facing straight down.
inline const Eigen::Vector3d kApproachAxisHand{0.0, 0.0, -1.0};
inline const Eigen::Vector3d kClosingAxisHand{0.0, 1.0, 0.0};

struct HoldingPose {
    int pose_id = 1;
    PoseGroup group = PoseGroup::Reference;
    int index_in_group = 0;
    /// Hand frame -> world frame.
    Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
    /// Group rotation that produced the pose (zero for the reference).
    Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
    double angle_deg = 0.0;

    Eigen::Vector3d approach_direction() const { return orientation * kApproachAxisHand; }
    Eigen::Vector3d closing_direction() const { return orientation * kClosingAxisHand; }
};

struct PoseSpaceConfig {
    std::array<Eigen::Vector3d, 3> group_axes{Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                                              Eigen::Vector3d::UnitX()};
    std::array<double, 3> group_start_angles{30.0, 30.0, 15.0};
    std::array<double, 3> group_increments{30.0, 30.0, 15.0};
    /// Fixed rotation about world y applied before the group rotation.
    std::array<double, 3> group_pre_pitch{0.0, 0.0, 90.0};

    /// Throws ConfigError on zero increments or non-unit axes.
    void validate() const;

    nlohmann::json to_json() const;
    static PoseSpaceConfig from_json(const nlohmann::json& j);
};

/// 16 poses: id 1 is the reference, ids 2..6 / 7..11 / 12..16 are G1 / G2 / G3.
std::vector<HoldingPose> generate_pose_space(const PoseSpaceConfig& cfg = {});

/// Throws std::out_of_range outside 1..16.
PoseGroup pose_group(int pose_id);

/// A pose outside the sampled 16: `angle_deg` about `axis` after the reference.
HoldingPose custom_pose(const Eigen::Vector3d& axis, double angle_deg);

/// Rows of (id, group, axis, angle, quaternion wxyz).
nlohmann::json pose_table(const std::vector<HoldingPose>& poses);

/// Smallest rotation angle between two orientations, degrees.
double angular_distance_deg(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

}  // namespace holdstab
