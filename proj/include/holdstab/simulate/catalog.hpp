#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "holdstab/simulate/physics.hpp"

namespace holdstab {

struct CatalogOptions {
    double mass_min_kg = 0.1;
    double mass_max_kg = 1.5;
    double friction_min = 0.25;
    double friction_max = 1.4;
    double patch_min_m = 0.006;
    double patch_max_m = 0.014;
    double com_max_m = 0.04;
    /// Sideways com offset as a fraction of com_max_m.
    double com_side_fraction = 0.15;
    /// Probabilities of an object having 1, 2 or 3 grasp points.
    std::array<double, 3> grasp_point_weights{0.2, 0.4, 0.4};
    /// Static load ratio at min_lift_force on the reference pose.
    double load_ratio_min = 0.6;
    double load_ratio_max = 0.88;
};

/// Random but physically consistent catalog: min_lift_force is the smallest
/// of {5, 15, 40} N that holds the object on the reference pose at rest.
std::vector<ObjectSpec> generate_catalog(int n_objects, std::uint64_t seed, const CatalogOptions& opts = {});

/// Smallest option in kLiftForceOptions with positive static reference margin,
/// or the largest option if none.
double min_lift_force(const ObjectSpec& obj, const Eigen::Vector3d& gravity = kEarthGravity);

nlohmann::json catalog_to_json(const std::vector<ObjectSpec>& catalog);
std::vector<ObjectSpec> catalog_from_json(const nlohmann::json& j);

void save_catalog(const std::vector<ObjectSpec>& catalog, const std::filesystem::path& path);
/// Throws DataError naming the path when missing or malformed.
std::vector<ObjectSpec> load_catalog(const std::filesystem::path& path);

}  // namespace holdstab
