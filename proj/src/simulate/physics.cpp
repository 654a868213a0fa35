#include "holdstab/simulate/physics.hpp"

#include <cmath>
#include <limits>

#include "holdstab/core/error.hpp"

namespace holdstab {

void ObjectSpec::validate() const {
    auto fail = [&](const std::string& what) { throw ConfigError("object '" + object_id + "': " + what); };
    if (object_id.empty()) throw ConfigError("object with empty id");
    if (!(mass_kg > 0.0) || !std::isfinite(mass_kg)) fail("mass must be > 0");
    if (!(friction > 0.0) || !std::isfinite(friction)) fail("friction coefficient must be > 0");
    if (!(patch_halfwidth_m > 0.0) || !std::isfinite(patch_halfwidth_m)) fail("patch halfwidth must be > 0");
    if (!(min_lift_force_n > 0.0)) fail("min lift force must be > 0");
    if (!(size_m > 0.0)) fail("size must be > 0");
    if (grasp_points.empty()) fail("needs at least one grasp point");
    for (std::size_t i = 0; i < grasp_points.size(); ++i) {
        if (grasp_points[i].id.empty()) fail("grasp point with empty id");
        if (!grasp_points[i].com_offset.allFinite()) fail("non-finite com offset");
        for (std::size_t j = 0; j < i; ++j)
            if (grasp_points[j].id == grasp_points[i].id) fail("duplicate grasp point '" + grasp_points[i].id + "'");
    }
}

const GraspPoint& ObjectSpec::grasp_point(std::string_view id) const {
    for (const auto& g : grasp_points)
        if (g.id == id) return g;
    throw ConfigError("object '" + object_id + "' has no grasp point '" + std::string(id) + "'");
}

nlohmann::json ObjectSpec::to_json() const {
    nlohmann::json gps = nlohmann::json::array();
    for (const auto& g : grasp_points)
        gps.push_back({{"id", g.id}, {"com_offset_m", {g.com_offset.x(), g.com_offset.y(), g.com_offset.z()}}});
    return {{"object_id", object_id},
            {"mass_kg", mass_kg},
            {"friction", friction},
            {"patch_halfwidth_m", patch_halfwidth_m},
            {"min_lift_force_n", min_lift_force_n},
            {"size_m", size_m},
            {"color", color},
            {"grasp_points", gps}};
}

ObjectSpec ObjectSpec::from_json(const nlohmann::json& j) {
    ObjectSpec o;
    try {
        o.object_id = j.at("object_id").get<std::string>();
        o.mass_kg = j.at("mass_kg").get<double>();
        o.friction = j.at("friction").get<double>();
        o.patch_halfwidth_m = j.at("patch_halfwidth_m").get<double>();
        o.min_lift_force_n = j.at("min_lift_force_n").get<double>();
        o.size_m = j.value("size_m", o.size_m);
        if (j.contains("color")) o.color = j.at("color").get<std::array<std::uint8_t, 3>>();
        for (const auto& g : j.at("grasp_points")) {
            const auto c = g.at("com_offset_m").get<std::array<double, 3>>();
            o.grasp_points.push_back({g.at("id").get<std::string>(), {c[0], c[1], c[2]}});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed object record: ") + e.what());
    }
    o.validate();
    return o;
}

void ShakeProfile::validate() const {
    if (!(rot_impulse >= 0.0) || !(lin_accel_amplitude >= 0.0) || !(duration > 0.0))
        throw ConfigError("shake profile values must be nonnegative (duration positive)");
}

ContactLoad contact_load(const ObjectSpec& obj, std::string_view grasp_point, double grip_force_n,
                         const HoldingPose& pose, const Eigen::Vector3d& accel, const Eigen::Vector3d& gravity,
                         const Eigen::Vector3d& angular_accel) {
    const Eigen::Vector3d r_hand = obj.grasp_point(grasp_point).com_offset;
    const Eigen::Matrix3d rot = pose.orientation.toRotationMatrix();
    const Eigen::Vector3d r_world = rot * r_hand;
    const Eigen::Vector3d com_accel = accel + angular_accel.cross(r_world);
    const Eigen::Vector3d load_hand = rot.transpose() * (obj.mass_kg * (gravity - com_accel));

    const Eigen::Vector3d& n = kClosingAxisHand;
    const Eigen::Vector3d tangential = load_hand - n.dot(load_hand) * n;

    ContactLoad out;
    out.translational_demand = tangential.norm();
    out.rotational_demand = std::abs(n.dot(r_hand.cross(load_hand)));
    out.translational_capacity = 2.0 * obj.friction * grip_force_n;
    out.rotational_capacity = (2.0 / 3.0) * 2.0 * obj.friction * grip_force_n * obj.patch_halfwidth_m;
    return out;
}

StabilityMargin margin_from_load(const ContactLoad& load) noexcept {
    auto margin = [](double capacity, double demand) {
        if (demand <= 0.0) return 1.0;
        if (capacity <= 0.0) return -std::numeric_limits<double>::infinity();
        return (capacity - demand) / capacity;
    };
    return {margin(load.translational_capacity, load.translational_demand),
            margin(load.rotational_capacity, load.rotational_demand)};
}

StabilityMargin stability_margin(const ObjectSpec& obj, std::string_view grasp_point, double grip_force_n,
                                 const HoldingPose& pose, const Eigen::Vector3d& accel,
                                 const Eigen::Vector3d& gravity, const Eigen::Vector3d& angular_accel) {
    return margin_from_load(contact_load(obj, grasp_point, grip_force_n, pose, accel, gravity, angular_accel));
}

}  // namespace holdstab
