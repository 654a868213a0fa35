#include "holdstab/posespace/posespace.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "holdstab/core/error.hpp"

namespace holdstab {

namespace {

double rad(double deg) { return deg * std::numbers::pi / 180.0; }

Eigen::Quaterniond about(const Eigen::Vector3d& axis, double deg) {
    return Eigen::Quaterniond(Eigen::AngleAxisd(rad(deg), axis.normalized()));
}

}  // namespace

std::string_view to_string(PoseGroup g) noexcept {
    switch (g) {
        case PoseGroup::Reference: return "reference";
        case PoseGroup::G1: return "G1";
        case PoseGroup::G2: return "G2";
        case PoseGroup::G3: return "G3";
    }
    return "?";
}

PoseGroup parse_pose_group(std::string_view s) {
    if (s == "G1" || s == "g1" || s == "1") return PoseGroup::G1;
    if (s == "G2" || s == "g2" || s == "2") return PoseGroup::G2;
    if (s == "G3" || s == "g3" || s == "3") return PoseGroup::G3;
    if (s == "reference" || s == "ref") return PoseGroup::Reference;
    throw ConfigError("unknown pose group '" + std::string(s) + "'");
}

void PoseSpaceConfig::validate() const {
    for (int g = 0; g < 3; ++g) {
        const double n = group_axes[g].norm();
        if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-9)
            throw ConfigError("pose group " + std::to_string(g + 1) + " axis is not unit-norm");
        if (!std::isfinite(group_increments[g]) || group_increments[g] == 0.0)
            throw ConfigError("pose group " + std::to_string(g + 1) + " increment must be nonzero");
        if (!std::isfinite(group_start_angles[g]) || !std::isfinite(group_pre_pitch[g]))
            throw ConfigError("pose group " + std::to_string(g + 1) + " angles must be finite");
    }
}

nlohmann::json PoseSpaceConfig::to_json() const {
    nlohmann::json axes = nlohmann::json::array();
    for (const auto& a : group_axes) axes.push_back({a.x(), a.y(), a.z()});
    return {{"group_axes", axes},
            {"group_start_angles", group_start_angles},
            {"group_increments", group_increments},
            {"group_pre_pitch", group_pre_pitch}};
}

PoseSpaceConfig PoseSpaceConfig::from_json(const nlohmann::json& j) {
    PoseSpaceConfig c;
    if (j.contains("group_axes")) {
        const auto axes = j.at("group_axes").get<std::vector<std::array<double, 3>>>();
        if (axes.size() != 3) throw ConfigError("group_axes needs three entries");
        for (int g = 0; g < 3; ++g) c.group_axes[g] = {axes[g][0], axes[g][1], axes[g][2]};
    }
    if (j.contains("group_start_angles")) c.group_start_angles = j.at("group_start_angles").get<std::array<double, 3>>();
    if (j.contains("group_increments")) c.group_increments = j.at("group_increments").get<std::array<double, 3>>();
    if (j.contains("group_pre_pitch")) c.group_pre_pitch = j.at("group_pre_pitch").get<std::array<double, 3>>();
    return c;
}

std::vector<HoldingPose> generate_pose_space(const PoseSpaceConfig& cfg) {
    cfg.validate();
    std::vector<HoldingPose> poses;
    poses.reserve(kNumPoses);
    poses.push_back(HoldingPose{});
    const PoseGroup groups[3] = {PoseGroup::G1, PoseGroup::G2, PoseGroup::G3};
    for (int g = 0; g < 3; ++g) {
        const auto pre = about(Eigen::Vector3d::UnitY(), cfg.group_pre_pitch[g]);
        for (int k = 0; k < kPosesPerGroup; ++k) {
            HoldingPose p;
            p.pose_id = 2 + g * kPosesPerGroup + k;
            p.group = groups[g];
            p.index_in_group = k;
            p.axis = cfg.group_axes[g];
            p.angle_deg = cfg.group_start_angles[g] + k * cfg.group_increments[g];
            p.orientation = (about(p.axis, p.angle_deg) * pre).normalized();
            poses.push_back(p);
        }
    }
    return poses;
}

PoseGroup pose_group(int pose_id) {
    if (pose_id < 1 || pose_id > kNumPoses)
        throw std::out_of_range("pose id " + std::to_string(pose_id) + " outside 1..16");
    if (pose_id == 1) return PoseGroup::Reference;
    if (pose_id <= 6) return PoseGroup::G1;
    if (pose_id <= 11) return PoseGroup::G2;
    return PoseGroup::G3;
}

HoldingPose custom_pose(const Eigen::Vector3d& axis, double angle_deg) {
    HoldingPose p;
    p.pose_id = 0;
    p.axis = axis.normalized();
    p.angle_deg = angle_deg;
    p.orientation = about(axis, angle_deg);
    return p;
}

nlohmann::json pose_table(const std::vector<HoldingPose>& poses) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : poses) {
        const auto& q = p.orientation;
        rows.push_back({{"id", p.pose_id},
                        {"group", std::string(to_string(p.group))},
                        {"axis", {p.axis.x(), p.axis.y(), p.axis.z()}},
                        {"angle_deg", p.angle_deg},
                        {"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}}});
    }
    return rows;
}

double angular_distance_deg(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
    const double d = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
    return 2.0 * std::acos(d) * 180.0 / std::numbers::pi;
}

}  // namespace holdstab
