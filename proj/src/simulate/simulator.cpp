#include "holdstab/simulate/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "holdstab/core/dataset_io.hpp"
#include "holdstab/core/error.hpp"
#include "holdstab/core/rng.hpp"

namespace holdstab {

namespace {

using Eigen::Vector3d;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double smoothstep(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * (3.0 - 2.0 * x);
}

std::vector<Vector3d> axis_samples(double magnitude) {
    std::vector<Vector3d> out;
    for (int k = 0; k < 3; ++k) {
        Vector3d e = Vector3d::Zero();
        e[k] = magnitude;
        out.push_back(e);
        out.push_back(-e);
    }
    return out;
}

StabilityMargin worst(const StabilityMargin& a, const StabilityMargin& b) {
    return {std::min(a.translational, b.translational), std::min(a.rotational, b.rotational)};
}

std::vector<double> sample_times(double from, double to, double rate) {
    std::vector<double> t;
    const auto n = static_cast<std::size_t>(std::floor((to - from) * rate + 1e-9)) + 1;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.push_back(from + static_cast<double>(i) / rate);
    if (t.back() < to - 1e-9) t.push_back(to);
    return t;
}

std::uint8_t quantize(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

/// Arm motion over the cycle: orientation, linear and angular acceleration.
struct Kinematic {
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Vector3d accel = Vector3d::Zero();
    Vector3d angular_accel = Vector3d::Zero();
    double lift_height = 0.0;
};

class Trajectory {
public:
    Trajectory(const SimConfig& cfg, const HoldingPose& pose)
        : cfg_(cfg), pose_(pose), bounds_(phase_boundaries(cfg)) {}

    Kinematic at(double t) const {
        Kinematic k;
        const auto& g = bounds_[index(Phase::Grasp)];
        const auto& p = bounds_[index(Phase::Pose)];
        const auto& s = bounds_[index(Phase::Shake)];
        const auto& r = bounds_[index(Phase::Retract)];
        const double lift = g.start + cfg_.timing.lift_after;
        const double release = r.end - cfg_.timing.release_before_end;
        const double top = 0.15;
        if (t < lift) return k;
        if (t < g.end) {
            if (t < lift + 0.5) k.accel = Vector3d(0, 0, cfg_.lift_accel);
            k.lift_height = top * smoothstep((t - lift) / (g.end - lift));
            return k;
        }
        k.lift_height = top;
        const Eigen::Quaterniond target = pose_.orientation;
        if (t < p.end) {
            const double move_end = p.end - cfg_.timing.pose_wait;
            if (t < move_end) {
                const double tau = (t - p.start) / (move_end - p.start);
                k.rotation = Eigen::Quaterniond::Identity().slerp(smoothstep(tau), target);
                k.accel = Vector3d(cfg_.transit_accel * std::sin(kTwoPi * tau), 0, 0);
            } else {
                k.rotation = target;
            }
            return k;
        }
        if (t < s.end) {
            k.rotation = target;
            const double tau = (t - s.start) / (s.end - s.start);
            if (tau < 0.25) {
                const double phase = tau / 0.25;
                k.angular_accel = cfg_.shake.rot_impulse * std::sin(kTwoPi * 2.0 * phase) * pose_.approach_direction();
            } else {
                const double phase = (tau - 0.25) / 0.75;
                const int axis = std::min(2, static_cast<int>(phase * 3.0));
                const double local = phase * 3.0 - axis;
                k.accel[axis] = cfg_.shake.lin_accel_amplitude * std::sin(kTwoPi * 3.0 * local);
            }
            return k;
        }
        const double tau = std::clamp((t - r.start) / (release - r.start), 0.0, 1.0);
        k.rotation = target.slerp(smoothstep(tau), Eigen::Quaterniond::Identity());
        k.accel = Vector3d(-cfg_.transit_accel * std::sin(kTwoPi * tau), 0, 0);
        k.lift_height = top * (1.0 - smoothstep(tau));
        return k;
    }

private:
    const SimConfig& cfg_;
    const HoldingPose& pose_;
    std::array<PhaseInterval, 4> bounds_;
};

void draw_disk(Image8& img, double cx, double cy, double radius, const std::array<std::uint8_t, 3>& color) {
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const double dx = c - cx, dy = r - cy;
            if (dx * dx + dy * dy <= radius * radius)
                for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = color[ch];
        }
}

void draw_segment(Image8& img, double x0, double y0, double x1, double y1, std::uint8_t shade) {
    const int steps = 4 * std::max(img.width, img.height);
    for (int i = 0; i <= steps; ++i) {
        const double f = static_cast<double>(i) / steps;
        const int c = static_cast<int>(std::lround(x0 + f * (x1 - x0)));
        const int r = static_cast<int>(std::lround(y0 + f * (y1 - y0)));
        if (r >= 0 && r < img.height && c >= 0 && c < img.width)
            for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = shade;
    }
}

}  // namespace

void SimConfig::validate() const {
    if (!gravity.allFinite()) throw ConfigError("gravity must be finite");
    if (!(slip_band > 0.0)) throw ConfigError("slip band must be positive");
    if (!(lift_accel >= 0.0) || !(transit_accel >= 0.0)) throw ConfigError("accelerations must be nonnegative");
    shake.validate();
    if (!(image_rate_hz > 0.0) || !(wrench_rate_hz > 0.0)) throw ConfigError("sensor rates must be positive");
    if (tactile_height < 4 || tactile_width < 4 || rgb_height < 4 || rgb_width < 4)
        throw ConfigError("image sizes must be at least 4x4");
    if (!(high_force_n > 0.0)) throw ConfigError("high grip force must be positive");
    const auto& t = timing;
    if (!(t.pre_roll >= 1.0 - 1e-12)) throw ConfigError("streams must start at least 1 s before grasping");
    if (!(t.grasp > t.lift_after && t.lift_after > t.contact_after && t.contact_after > 0.0))
        throw ConfigError("grasp phase timing must satisfy 0 < contact < lift < grasp duration");
    if (!(t.pose > t.pose_wait && t.pose_wait >= 0.0)) throw ConfigError("pose wait must fit in the pose phase");
    if (!(t.retract > t.release_before_end && t.release_before_end >= 0.0))
        throw ConfigError("release must happen inside the retract phase");
    pose_space.validate();
}

nlohmann::json SimConfig::to_json() const {
    return {{"gravity", {gravity.x(), gravity.y(), gravity.z()}},
            {"slip_band", slip_band},
            {"lift_accel", lift_accel},
            {"transit_accel", transit_accel},
            {"shake", {{"rot_impulse", shake.rot_impulse},
                       {"lin_accel_amplitude", shake.lin_accel_amplitude},
                       {"duration", shake.duration}}},
            {"timing", {{"pre_roll", timing.pre_roll},
                        {"grasp", timing.grasp},
                        {"pose", timing.pose},
                        {"retract", timing.retract},
                        {"contact_after", timing.contact_after},
                        {"lift_after", timing.lift_after},
                        {"pose_wait", timing.pose_wait},
                        {"release_before_end", timing.release_before_end}}},
            {"noise", {{"tactile_sigma", noise.tactile_sigma},
                       {"rgb_sigma", noise.rgb_sigma},
                       {"force_sigma", noise.force_sigma},
                       {"torque_sigma", noise.torque_sigma}}},
            {"image_rate_hz", image_rate_hz},
            {"wrench_rate_hz", wrench_rate_hz},
            {"tactile_size", {tactile_height, tactile_width}},
            {"rgb_size", {rgb_height, rgb_width}},
            {"high_force_n", high_force_n},
            {"pose_space", pose_space.to_json()}};
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
    SimConfig c;
    try {
        if (j.contains("gravity")) {
            const auto g = j.at("gravity").get<std::array<double, 3>>();
            c.gravity = {g[0], g[1], g[2]};
        }
        c.slip_band = j.value("slip_band", c.slip_band);
        c.lift_accel = j.value("lift_accel", c.lift_accel);
        c.transit_accel = j.value("transit_accel", c.transit_accel);
        if (j.contains("shake")) {
            const auto& s = j.at("shake");
            c.shake.rot_impulse = s.value("rot_impulse", c.shake.rot_impulse);
            c.shake.lin_accel_amplitude = s.value("lin_accel_amplitude", c.shake.lin_accel_amplitude);
            c.shake.duration = s.value("duration", c.shake.duration);
        }
        if (j.contains("timing")) {
            const auto& t = j.at("timing");
            c.timing.pre_roll = t.value("pre_roll", c.timing.pre_roll);
            c.timing.grasp = t.value("grasp", c.timing.grasp);
            c.timing.pose = t.value("pose", c.timing.pose);
            c.timing.retract = t.value("retract", c.timing.retract);
            c.timing.contact_after = t.value("contact_after", c.timing.contact_after);
            c.timing.lift_after = t.value("lift_after", c.timing.lift_after);
            c.timing.pose_wait = t.value("pose_wait", c.timing.pose_wait);
            c.timing.release_before_end = t.value("release_before_end", c.timing.release_before_end);
        }
        if (j.contains("noise")) {
            const auto& n = j.at("noise");
            c.noise.tactile_sigma = n.value("tactile_sigma", c.noise.tactile_sigma);
            c.noise.rgb_sigma = n.value("rgb_sigma", c.noise.rgb_sigma);
            c.noise.force_sigma = n.value("force_sigma", c.noise.force_sigma);
            c.noise.torque_sigma = n.value("torque_sigma", c.noise.torque_sigma);
        }
        c.image_rate_hz = j.value("image_rate_hz", c.image_rate_hz);
        c.wrench_rate_hz = j.value("wrench_rate_hz", c.wrench_rate_hz);
        if (j.contains("tactile_size")) {
            const auto s = j.at("tactile_size").get<std::array<int, 2>>();
            c.tactile_height = s[0];
            c.tactile_width = s[1];
        }
        if (j.contains("rgb_size")) {
            const auto s = j.at("rgb_size").get<std::array<int, 2>>();
            c.rgb_height = s[0];
            c.rgb_width = s[1];
        }
        c.high_force_n = j.value("high_force_n", c.high_force_n);
        if (j.contains("pose_space")) c.pose_space = PoseSpaceConfig::from_json(j.at("pose_space"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed simulator config: ") + e.what());
    }
    c.validate();
    return c;
}

std::array<PhaseInterval, 4> phase_boundaries(const SimConfig& cfg) {
    std::array<PhaseInterval, 4> b{};
    double t = cfg.timing.pre_roll;
    const double durations[4] = {cfg.timing.grasp, cfg.timing.pose, cfg.shake.duration, cfg.timing.retract};
    for (std::size_t k = 0; k < 4; ++k) {
        b[k] = {t, t + durations[k]};
        t += durations[k];
    }
    return b;
}

PhaseLabel label_from_margin(double margin, double slip_band) noexcept {
    if (margin > 0.0) return PhaseLabel::Pass;
    if (margin > -slip_band) return PhaseLabel::Slip;
    return PhaseLabel::Drop;
}

StabilityMargin phase_margin(Phase phase, const ObjectSpec& obj, std::string_view gp, double force,
                             const HoldingPose& pose, const SimConfig& cfg) {
    const Vector3d zero = Vector3d::Zero();
    auto eval = [&](const HoldingPose& at, const Vector3d& a, const Vector3d& alpha = Vector3d::Zero()) {
        return stability_margin(obj, gp, force, at, a, cfg.gravity, alpha);
    };
    switch (phase) {
        case Phase::Grasp: {
            const HoldingPose reference;
            return worst(eval(reference, zero), eval(reference, Vector3d(0, 0, cfg.lift_accel)));
        }
        case Phase::Pose: {
            auto m = eval(pose, zero);
            for (const auto& a : axis_samples(cfg.transit_accel)) m = worst(m, eval(pose, a));
            return m;
        }
        case Phase::Shake: {
            StabilityMargin m{1.0, 1.0};
            for (const auto& a : axis_samples(cfg.shake.lin_accel_amplitude)) m = worst(m, eval(pose, a));
            const Vector3d alpha = cfg.shake.rot_impulse * pose.approach_direction();
            m = worst(m, eval(pose, zero, alpha));
            m = worst(m, eval(pose, zero, -alpha));
            return m;
        }
        case Phase::Retract: {
            const HoldingPose reference;
            auto m = worst(eval(pose, zero), eval(reference, zero));
            for (const auto& a : axis_samples(cfg.transit_accel)) m = worst(worst(m, eval(pose, a)), eval(reference, a));
            return m;
        }
    }
    return {};
}

std::array<PhaseOutcome, 4> phase_outcomes(const ObjectSpec& obj, std::string_view gp, double force,
                                           const HoldingPose& pose, const SimConfig& cfg) {
    std::array<PhaseOutcome, 4> out{};
    bool dropped = false;
    for (auto p : kPhases) {
        auto& o = out[index(p)];
        o.margin = phase_margin(p, obj, gp, force, pose, cfg);
        if (dropped) {
            o.label = PhaseLabel::NotPresent;
            continue;
        }
        o.label = label_from_margin(o.margin.combined(), cfg.slip_band);
        dropped = o.label == PhaseLabel::Drop;
    }
    return out;
}

MarginHistory margin_history(const std::array<PhaseOutcome, 4>& outcomes, const SimConfig& cfg) {
    const auto b = phase_boundaries(cfg);
    MarginHistory h;
    h.slip_band = cfg.slip_band;
    const auto& g = b[index(Phase::Grasp)];
    h.contact_time = g.start + cfg.timing.contact_after;
    h.release_time = b[index(Phase::Retract)].end - cfg.timing.release_before_end;
    const double lift = g.start + cfg.timing.lift_after;
    h.segments.push_back({h.contact_time, lift, StabilityMargin{1.0, 1.0}, PhaseLabel::Pass});
    h.segments.push_back({lift, g.end, outcomes[0].margin, outcomes[0].label});
    for (std::size_t k = 1; k < 4; ++k) {
        const double end = k == 3 ? h.release_time : b[k].end;
        h.segments.push_back({b[k].start, end, outcomes[k].margin, outcomes[k].label});
    }
    return h;
}

ImprintParams imprint_params(const ObjectSpec& obj, std::string_view gp, double force, const SimConfig& cfg) {
    ImprintParams p;
    p.height = cfg.tactile_height;
    p.width = cfg.tactile_width;
    const std::uint64_t h = stable_hash(obj.object_id + "/" + std::string(gp));
    const double jr = static_cast<double>(h & 0xffff) / 65535.0 - 0.5;
    const double jc = static_cast<double>((h >> 16) & 0xffff) / 65535.0 - 0.5;
    p.center_row = 0.55 * (p.height - 1) + 3.0 * jr;
    p.center_col = 0.5 * (p.width - 1) + 4.0 * jc;
    const double scale = p.width / 32.0;
    p.sigma_major_px = scale * (2.0 + 350.0 * obj.patch_halfwidth_m);
    p.sigma_minor_px = 0.6 * p.sigma_major_px;
    p.amplitude = 35.0 + 55.0 * std::sqrt(std::min(force, 2.0 * kMaxGripForce) / kMaxGripForce);
    p.texture_contrast = 0.5 * std::clamp((obj.friction - 0.2) / 1.3, 0.0, 1.0);
    return p;
}

std::string make_cycle_id(const ObjectSpec& obj, std::string_view gp, double force, int pose_id) {
    std::ostringstream os;
    os << obj.object_id << "_g" << gp << "_f" << std::lround(force) << "_p" << (pose_id < 10 ? "0" : "") << pose_id;
    return os.str();
}

GraspCycle simulate_cycle(const ObjectSpec& obj, std::string_view gp, double force, const HoldingPose& pose,
                          const SimConfig& cfg, std::uint64_t noise_seed) {
    obj.validate();
    cfg.validate();
    if (!(force > 0.0)) throw ConfigError("grip force must be positive");
    const GraspPoint& grasp = obj.grasp_point(gp);

    GraspCycle c;
    c.cycle_id = make_cycle_id(obj, gp, force, pose.pose_id);
    c.object_id = obj.object_id;
    c.grasp_point_id = grasp.id;
    c.grip_force_n = force;
    c.pose_id = pose.pose_id;
    c.boundaries = phase_boundaries(cfg);

    const auto outcomes = phase_outcomes(obj, gp, force, pose, cfg);
    for (std::size_t k = 0; k < 4; ++k) c.labels[k] = outcomes[k].label;
    const auto history = margin_history(outcomes, cfg);
    const auto imprint = imprint_params(obj, gp, force, cfg);
    const Trajectory traj(cfg, pose);

    Rng rng(noise_seed);
    const double t0 = c.boundaries[0].start - cfg.timing.pre_roll;
    const double t1 = c.boundaries[3].end;
    const double lift = c.boundaries[0].start + cfg.timing.lift_after;

    const ImageF background = tactile_background(imprint);
    c.pre_contact_tactile = Image8(imprint.height, imprint.width);
    for (std::size_t i = 0; i < background.pixels.size(); ++i)
        c.pre_contact_tactile.pixels[i] = quantize(background.pixels[i] + cfg.noise.tactile_sigma * standard_normal(rng));

    const double px_per_m = cfg.rgb_width / 0.4;
    for (double t : sample_times(t0, t1, cfg.image_rate_hz)) {
        const ImageF clean = render_tactile(history, imprint, t);
        Image8 frame(clean.height, clean.width);
        for (std::size_t i = 0; i < clean.pixels.size(); ++i)
            frame.pixels[i] = quantize(clean.pixels[i] + cfg.noise.tactile_sigma * standard_normal(rng));
        c.tactile.times.push_back(t);
        c.tactile.samples.push_back(std::move(frame));

        // Schematic side view: image columns follow world x, rows follow -world z.
        const auto k = traj.at(t);
        const auto state = contact_state(history, imprint, t);
        const bool attached = state.in_contact && state.amplitude_factor > 0.0;
        Image8 rgb(cfg.rgb_height, cfg.rgb_width, 3, 170);
        const double table_row = cfg.rgb_height - 2.0;
        for (int col = 0; col < rgb.width; ++col) {
            rgb.at(cfg.rgb_height - 1, col, 0) = 120;
            rgb.at(cfg.rgb_height - 1, col, 1) = 90;
            rgb.at(cfg.rgb_height - 1, col, 2) = 60;
        }
        auto to_px = [&](const Vector3d& w) {
            return std::pair<double, double>{0.5 * (rgb.width - 1) + px_per_m * w.x(), table_row - px_per_m * w.z()};
        };
        const double clearance = 0.5 * obj.size_m;
        const Vector3d tip(0.0, 0.0, clearance + k.lift_height);
        const Vector3d wrist = tip - 0.1 * (k.rotation * kApproachAxisHand);
        const auto [tx, ty] = to_px(tip);
        const auto [wx, wy] = to_px(wrist);
        Vector3d obj_center = tip + k.rotation * grasp.com_offset;
        if (attached) {
            obj_center.z() -= 0.004 * state.accumulated_slip;
        } else {
            obj_center.z() = clearance;
        }
        const auto [ox, oy] = to_px(obj_center);
        draw_disk(rgb, ox, oy, std::max(1.0, 0.5 * px_per_m * obj.size_m), obj.color);
        draw_segment(rgb, wx, wy, tx, ty, 40);
        const Vector3d closing = 0.03 * (k.rotation * kClosingAxisHand);
        const auto [c0x, c0y] = to_px(tip - closing);
        const auto [c1x, c1y] = to_px(tip + closing);
        draw_segment(rgb, c0x, c0y, c1x, c1y, 60);
        for (auto& v : rgb.pixels) v = quantize(v + cfg.noise.rgb_sigma * standard_normal(rng));
        c.rgb.times.push_back(t);
        c.rgb.samples.push_back(std::move(rgb));
    }

    for (double t : sample_times(t0, t1, cfg.wrench_rate_hz)) {
        const auto k = traj.at(t);
        const auto state = contact_state(history, imprint, t);
        const bool carried = state.in_contact && state.amplitude_factor > 0.0 && t >= lift;
        Wrench w{};
        if (carried) {
            const Eigen::Matrix3d rot = k.rotation.toRotationMatrix();
            const Vector3d r_world = rot * grasp.com_offset;
            const Vector3d com_accel = k.accel + k.angular_accel.cross(r_world);
            const Vector3d f = rot.transpose() * (obj.mass_kg * (cfg.gravity - com_accel));
            const Vector3d tau = grasp.com_offset.cross(f);
            for (int i = 0; i < 3; ++i) {
                w[i] = f[i];
                w[3 + i] = tau[i];
            }
        }
        for (int i = 0; i < 3; ++i) w[i] += cfg.noise.force_sigma * standard_normal(rng);
        for (int i = 3; i < 6; ++i) w[i] += cfg.noise.torque_sigma * standard_normal(rng);
        c.wrench.times.push_back(t);
        c.wrench.samples.push_back(w);
    }
    return c;
}

std::vector<CycleRecipe> enumerate_recipes(const std::vector<ObjectSpec>& catalog, const SimConfig& cfg) {
    std::vector<CycleRecipe> out;
    for (std::size_t o = 0; o < catalog.size(); ++o) {
        const auto& obj = catalog[o];
        for (std::size_t g = 0; g < obj.grasp_points.size(); ++g)
            for (double force : {obj.min_lift_force_n, cfg.high_force_n})
                for (int pose = 1; pose <= kNumPoses; ++pose) out.push_back({o, g, force, pose});
    }
    return out;
}

GraspCycle simulate_recipe(const std::vector<ObjectSpec>& catalog, const std::vector<HoldingPose>& poses,
                           const CycleRecipe& recipe, std::size_t index, const SimConfig& cfg, std::uint64_t seed) {
    const auto& obj = catalog.at(recipe.object_index);
    return simulate_cycle(obj, obj.grasp_points.at(recipe.grasp_point_index).id, recipe.grip_force_n,
                          poses.at(static_cast<std::size_t>(recipe.pose_id - 1)), cfg, derive_seed(seed, index));
}

nlohmann::json synthetic_metadata(const std::vector<ObjectSpec>& catalog, const SimConfig& cfg, std::uint64_t seed) {
    const auto poses = generate_pose_space(cfg.pose_space);
    // Generator-side tally straight from the margin outcomes.
    nlohmann::json counts = nlohmann::json::object();
    std::array<std::array<std::size_t, 4>, 4> tally{};
    const auto recipes = enumerate_recipes(catalog, cfg);
    for (const auto& r : recipes) {
        const auto& obj = catalog[r.object_index];
        const auto out = phase_outcomes(obj, obj.grasp_points[r.grasp_point_index].id, r.grip_force_n,
                                        poses[static_cast<std::size_t>(r.pose_id - 1)], cfg);
        for (std::size_t k = 0; k < 4; ++k) ++tally[k][static_cast<std::size_t>(out[k].label)];
    }
    for (auto p : kPhases) {
        nlohmann::json row = nlohmann::json::object();
        for (auto l : kPhaseLabels) row[std::string(to_string(l))] = tally[index(p)][static_cast<std::size_t>(l)];
        counts[std::string(to_string(p))] = row;
    }
    return {{"generator", "holdstab-simulate"},
            {"seed", seed},
            {"sim_config", cfg.to_json()},
            {"pose_space", pose_table(poses)},
            {"catalog", [&] {
                 nlohmann::json a = nlohmann::json::array();
                 for (const auto& o : catalog) a.push_back(o.to_json());
                 return a;
             }()},
            {"ground_truth", {{"cycles", recipes.size()}, {"label_counts", counts}}}};
}

Dataset synthesize_dataset(const std::vector<ObjectSpec>& catalog, const SimConfig& cfg, std::uint64_t seed,
                           Exec exec) {
    if (catalog.empty()) throw ConfigError("object catalog is empty");
    for (const auto& o : catalog) o.validate();
    cfg.validate();
    const auto poses = generate_pose_space(cfg.pose_space);
    const auto recipes = enumerate_recipes(catalog, cfg);
    Dataset d;
    d.provenance = Provenance::Synthetic;
    d.metadata = synthetic_metadata(catalog, cfg, seed);
    d.cycles.resize(recipes.size());
    for_each_index(exec, recipes.size(),
                   [&](std::size_t i) { d.cycles[i] = simulate_recipe(catalog, poses, recipes[i], i, cfg, seed); });
    check_unique_ids(d);
    return d;
}

void synthesize_to_directory(const std::vector<ObjectSpec>& catalog, const SimConfig& cfg, std::uint64_t seed,
                             const std::filesystem::path& root, Exec exec) {
    if (catalog.empty()) throw ConfigError("object catalog is empty");
    for (const auto& o : catalog) o.validate();
    cfg.validate();
    const auto poses = generate_pose_space(cfg.pose_space);
    const auto recipes = enumerate_recipes(catalog, cfg);

    Dataset header;
    header.provenance = Provenance::Synthetic;
    header.metadata = synthetic_metadata(catalog, cfg, seed);
    std::vector<std::string> ids(recipes.size());
    for (std::size_t i = 0; i < recipes.size(); ++i) {
        const auto& obj = catalog[recipes[i].object_index];
        ids[i] = make_cycle_id(obj, obj.grasp_points[recipes[i].grasp_point_index].id, recipes[i].grip_force_n,
                               recipes[i].pose_id);
    }
    std::filesystem::create_directories(root / "cycles");
    for_each_index(exec, recipes.size(), [&](std::size_t i) {
        const auto c = simulate_recipe(catalog, poses, recipes[i], i, cfg, seed);
        save_cycle(c, root / "cycles" / c.cycle_id);
    });
    // The directory listing is written last so a partial run is never mistaken for a dataset.
    header.cycles.clear();
    nlohmann::json manifest = {{"format", "holdstab-dataset"},
                               {"format_version", kDatasetFormatVersion},
                               {"provenance", to_string(header.provenance)},
                               {"metadata", header.metadata},
                               {"cycles", ids}};
    std::ofstream out(root / "dataset.json");
    if (!out) throw DataError("cannot write '" + (root / "dataset.json").string() + "'");
    out << manifest.dump(2) << '\n';
}

}  // namespace holdstab
