#include "holdstab/simulate/catalog.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "holdstab/core/error.hpp"
#include "holdstab/core/rng.hpp"

namespace holdstab {

double min_lift_force(const ObjectSpec& obj, const Eigen::Vector3d& gravity) {
    const HoldingPose reference;
    for (double f : kLiftForceOptions) {
        bool holds = true;
        for (const auto& gp : obj.grasp_points)
            holds = holds && stability_margin(obj, gp.id, f, reference, Eigen::Vector3d::Zero(), gravity).translational > 0.0;
        if (holds) return f;
    }
    return kLiftForceOptions.back();
}

std::vector<ObjectSpec> generate_catalog(int n_objects, std::uint64_t seed, const CatalogOptions& opts) {
    if (n_objects <= 0) throw ConfigError("catalog needs at least one object");
    std::vector<ObjectSpec> out;
    out.reserve(static_cast<std::size_t>(n_objects));
    for (int i = 0; i < n_objects; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i), 0xca7a1046ULL));
        auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };
        ObjectSpec o;
        std::ostringstream id;
        id << "obj" << std::setw(2) << std::setfill('0') << i;
        o.object_id = id.str();
        o.mass_kg = std::exp(uniform(std::log(opts.mass_min_kg), std::log(opts.mass_max_kg)));
        o.patch_halfwidth_m = uniform(opts.patch_min_m, opts.patch_max_m);
        o.size_m = 0.04 + 0.08 * std::cbrt(o.mass_kg);
        for (auto& ch : o.color) ch = static_cast<std::uint8_t>(40 + uniform_index(rng, 200));

        const double pick = uniform01(rng);
        int n_points = 3;
        if (pick < opts.grasp_point_weights[0])
            n_points = 1;
        else if (pick < opts.grasp_point_weights[0] + opts.grasp_point_weights[1])
            n_points = 2;
        for (int g = 0; g < n_points; ++g) {
            // Mostly hanging below the fingers, with a sideways component.
            const double along = uniform(0.0, opts.com_max_m);
            const double side = uniform(-opts.com_side_fraction, opts.com_side_fraction) * opts.com_max_m;
            const double across = uniform(-0.1, 0.1) * opts.com_max_m;
            o.grasp_points.push_back({std::to_string(g), Eigen::Vector3d(side, across, -along)});
        }

        // Pick the lifting force first, then a friction that makes it the minimum.
        // Forces whose implied friction is implausible are avoided when possible.
        const double ratio = uniform(opts.load_ratio_min, opts.load_ratio_max);
        const double weight = o.mass_kg * 9.81;
        std::vector<double> plausible;
        double nearest = kLiftForceOptions[0];
        double nearest_gap = 1e300;
        for (double f : kLiftForceOptions) {
            const double mu = weight / (2.0 * f * ratio);
            if (mu >= opts.friction_min && mu <= opts.friction_max) plausible.push_back(f);
            const double gap = mu < opts.friction_min ? opts.friction_min - mu : mu - opts.friction_max;
            if (gap < nearest_gap) {
                nearest_gap = gap;
                nearest = f;
            }
        }
        const double force = plausible.empty() ? nearest : plausible[uniform_index(rng, plausible.size())];
        o.friction = weight / (2.0 * force * ratio);
        o.min_lift_force_n = min_lift_force(o);
        o.validate();
        out.push_back(std::move(o));
    }
    return out;
}

nlohmann::json catalog_to_json(const std::vector<ObjectSpec>& catalog) {
    nlohmann::json objs = nlohmann::json::array();
    for (const auto& o : catalog) objs.push_back(o.to_json());
    return {{"format", "holdstab-catalog"}, {"objects", objs}};
}

std::vector<ObjectSpec> catalog_from_json(const nlohmann::json& j) {
    if (!j.contains("objects") || !j.at("objects").is_array()) throw ConfigError("catalog has no 'objects' array");
    std::vector<ObjectSpec> out;
    for (const auto& o : j.at("objects")) out.push_back(ObjectSpec::from_json(o));
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t k = 0; k < i; ++k)
            if (out[i].object_id == out[k].object_id) throw ConfigError("duplicate object id '" + out[i].object_id + "'");
    return out;
}

void save_catalog(const std::vector<ObjectSpec>& catalog, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write catalog '" + path.string() + "'");
    out << catalog_to_json(catalog).dump(2) << '\n';
}

std::vector<ObjectSpec> load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("catalog file not found: '" + path.string() + "'");
    try {
        return catalog_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed catalog '" + path.string() + "': " + e.what());
    } catch (const ConfigError& e) {
        throw DataError("invalid catalog '" + path.string() + "': " + e.what());
    }
}

}  // namespace holdstab
