#pragma once

// Independent reference computations for the tests. Nothing here calls the
// code it is meant to check.

#include <cmath>
#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "holdstab/simulate/physics.hpp"

namespace holdstab::testing {

/// Rotation of `deg` degrees about `axis` by Rodrigues' formula.
Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis, double deg);

/// Hand-to-world rotation of pose 1..16 built directly from the pose
/// definitions: reference identity; G1 30..150 deg about world x; G2 the same
/// about world y; G3 15..75 deg about world x after a 90 deg pitch about y.
Eigen::Matrix3d expected_pose_rotation(int pose_id);

/// Friction capacity of one uniformly pressed disk, by midpoint quadrature on
/// a grid x grid lattice over the bounding square.
struct DiskCapacity {
    double force = 0.0;
    double torque = 0.0;
};
DiskCapacity disk_capacity(double mu, double normal_force, double radius, int grid = 400);

/// Quasi-static time stepping: the gravito-inertial load is ramped from zero
/// to its full value in `steps` increments while the two fingers try to hold
/// the object. Whenever the required friction force or moment exceeds what
/// the pressed patches can supply, the excess drives slip, which accumulates.
/// Everything is computed in the world frame.
struct SlipOutcome {
    bool holds = true;
    double slip = 0.0;
    /// Fraction of the ramp at which slip began (1 when it never did).
    double onset = 1.0;
};
SlipOutcome quasi_static_slip(const ObjectSpec& obj, std::string_view grasp_point, double grip_force_n,
                              const Eigen::Matrix3d& hand_to_world, const Eigen::Vector3d& accel,
                              const Eigen::Vector3d& gravity, const Eigen::Vector3d& angular_accel, int steps = 20000);

/// Five-point central differences of f at x, one coordinate at a time
/// (error O(h^4)).
std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-6);

}  // namespace holdstab::testing
