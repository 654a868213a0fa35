#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "holdstab/core/error.hpp"
#include "holdstab/simulate/catalog.hpp"
#include "holdstab/simulate/render.hpp"
#include "holdstab/simulate/simulator.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace holdstab;
using doctest::Approx;

namespace {

ObjectSpec make_object(double mass, double mu, double patch, const Eigen::Vector3d& com) {
    ObjectSpec o;
    o.object_id = "probe";
    o.mass_kg = mass;
    o.friction = mu;
    o.patch_halfwidth_m = patch;
    o.grasp_points = {GraspPoint{"0", com}};
    o.min_lift_force_n = 5.0;
    return o;
}

int severity(PhaseLabel l) {
    switch (l) {
        case PhaseLabel::Pass: return 0;
        case PhaseLabel::Slip: return 1;
        case PhaseLabel::Drop: return 2;
        default: return 3;
    }
}

/// Intensity-weighted centroid of the imprint above background.
std::pair<double, double> imprint_centroid(const ImageF& frame, const ImageF& background) {
    double w = 0.0, r = 0.0, c = 0.0;
    for (int i = 0; i < frame.height; ++i)
        for (int j = 0; j < frame.width; ++j) {
            const double v = std::max(0.0, static_cast<double>(frame.at(i, j) - background.at(i, j)));
            w += v;
            r += v * i;
            c += v * j;
        }
    return {r / w, c / w};
}

float max_pixel(const ImageF& f) { return *std::max_element(f.pixels.begin(), f.pixels.end()); }

}  // namespace

TEST_CASE("one kilogram at 80 N with mu 0.5 on the reference pose") {
    const auto obj = make_object(1.0, 0.5, 0.008, Eigen::Vector3d::Zero());
    const auto poses = generate_pose_space();
    const auto load = contact_load(obj, "0", 80.0, poses[0], Eigen::Vector3d::Zero());
    CHECK(load.translational_demand == Approx(9.81).epsilon(1e-12));
    CHECK(load.translational_capacity == Approx(80.0).epsilon(1e-12));
    const auto m = stability_margin(obj, "0", 80.0, poses[0], Eigen::Vector3d::Zero());
    CHECK(m.translational == Approx((80.0 - 9.81) / 80.0).epsilon(1e-12));
    CHECK(m.translational == Approx(0.877).epsilon(1e-3));
    CHECK(m.rotational == 1.0);
}

TEST_CASE("capacities match the disk quadrature") {
    const auto obj = make_object(0.4, 0.7, 0.01, Eigen::Vector3d(0.02, 0.0, -0.01));
    const auto load = contact_load(obj, "0", 15.0, generate_pose_space()[0], Eigen::Vector3d::Zero());
    const auto pad = holdstab::testing::disk_capacity(0.7, 15.0, 0.01, 800);
    CHECK(load.translational_capacity == Approx(2.0 * pad.force).epsilon(1e-9));
    CHECK(load.rotational_capacity == Approx(2.0 * pad.torque).epsilon(2e-3));
}

TEST_CASE("zero lever arm, zero gravity and vanishing grip") {
    const auto poses = generate_pose_space();
    const auto centred = make_object(0.8, 0.5, 0.008, Eigen::Vector3d::Zero());
    for (const auto& p : poses)
        CHECK(stability_margin(centred, "0", 15.0, p, Eigen::Vector3d::Zero()).rotational == 1.0);

    const auto hanging = make_object(0.8, 0.5, 0.008, Eigen::Vector3d(0, 0, -0.05));
    CHECK(contact_load(hanging, "0", 15.0, poses[0], Eigen::Vector3d::Zero()).rotational_demand ==
          Approx(0.0).scale(1.0));

    const auto offset = make_object(0.8, 0.5, 0.008, Eigen::Vector3d(0.03, 0.01, -0.02));
    for (const auto& p : poses) {
        const auto m = stability_margin(offset, "0", 15.0, p, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero());
        CHECK(m.translational == 1.0);
        CHECK(m.rotational == 1.0);
    }

    SimConfig still;
    still.gravity = Eigen::Vector3d::Zero();
    still.lift_accel = 0.0;
    still.transit_accel = 0.0;
    still.shake.rot_impulse = 0.0;
    still.shake.lin_accel_amplitude = 0.0;
    for (const auto& p : poses)
        for (const auto& o : phase_outcomes(offset, "0", 5.0, p, still)) {
            CHECK(o.label == PhaseLabel::Pass);
            CHECK(o.margin.combined() == 1.0);
        }

    const auto weak = stability_margin(offset, "0", 1e-6, poses[5], Eigen::Vector3d::Zero());
    CHECK(weak.translational < 0.0);
    CHECK(weak.rotational < 0.0);
}

TEST_CASE("margin sign agrees with the quasi-static oracle on hand-picked cases") {
    const auto poses = generate_pose_space();
    const auto obj = make_object(0.6, 0.45, 0.009, Eigen::Vector3d(0.025, 0.0, -0.015));
    for (double force : {5.0, 15.0, 40.0, 80.0})
        for (int pid : {1, 4, 9, 14}) {
            const auto& p = poses[static_cast<std::size_t>(pid - 1)];
            const Eigen::Vector3d accel(1.0, -0.5, 2.0);
            const double m = stability_margin(obj, "0", force, p, accel).combined();
            if (std::abs(m) < 0.02) continue;
            const auto oracle = holdstab::testing::quasi_static_slip(obj, "0", force, p.orientation.toRotationMatrix(),
                                                                     accel, kEarthGravity, Eigen::Vector3d::Zero());
            CAPTURE(force);
            CAPTURE(pid);
            CHECK((m > 0.0) == oracle.holds);
        }
}

TEST_CASE("labels come from thresholding the margin") {
    CHECK(label_from_margin(0.3, 0.15) == PhaseLabel::Pass);
    CHECK(label_from_margin(1e-12, 0.15) == PhaseLabel::Pass);
    CHECK(label_from_margin(0.0, 0.15) == PhaseLabel::Slip);
    CHECK(label_from_margin(-0.1, 0.15) == PhaseLabel::Slip);
    CHECK(label_from_margin(-0.15, 0.15) == PhaseLabel::Drop);
    CHECK(label_from_margin(-3.0, 0.15) == PhaseLabel::Drop);
}

TEST_CASE("heavy off-centre object held sideways with a light grip fails the shake") {
    const auto obj = make_object(1.0, 0.6, 0.012, Eigen::Vector3d(0.0, 0.0, -0.03));
    const auto poses = generate_pose_space();
    const auto out = phase_outcomes(obj, "0", 40.0, poses[8], SimConfig{});
    CHECK(out[index(Phase::Grasp)].label == PhaseLabel::Pass);
    const auto shake = out[index(Phase::Shake)].label;
    CHECK((shake == PhaseLabel::Slip || shake == PhaseLabel::Drop || shake == PhaseLabel::NotPresent));
    CHECK(out[index(Phase::Shake)].margin.combined() <= 0.0);
}

TEST_CASE("more grip never makes a label worse") {
    const auto catalog = generate_catalog(6, 21);
    const auto poses = generate_pose_space();
    const SimConfig cfg;
    for (const auto& obj : catalog)
        for (const auto& gp : obj.grasp_points)
            for (const auto& p : poses) {
                std::array<int, 4> prev{3, 3, 3, 3};
                for (double f = 2.0; f <= 80.0; f += 6.0) {
                    const auto out = phase_outcomes(obj, gp.id, f, p, cfg);
                    for (std::size_t k = 0; k < 4; ++k) {
                        CHECK(severity(out[k].label) <= prev[k]);
                        prev[k] = severity(out[k].label);
                    }
                }
            }
}

TEST_CASE("simulation is deterministic and obeys the label algebra") {
    const auto catalog = generate_catalog(3, 4);
    const auto cfg = holdstab::testing::fast_sim_config();
    const auto a = synthesize_dataset(catalog, cfg, 9, Exec::Parallel);
    const auto b = synthesize_dataset(catalog, cfg, 9, Exec::Serial);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.cycles[i] == b.cycles[i]);
    CHECK(a.metadata == b.metadata);

    std::size_t expected = 0;
    for (const auto& o : catalog) expected += o.grasp_points.size() * 2 * 16;
    CHECK(a.size() == expected);

    for (const auto& c : a.cycles) {
        CHECK(validate_cycle(c).empty());
        bool dropped = false;
        for (auto p : kPhases) {
            if (dropped) CHECK(c.label(p) == PhaseLabel::NotPresent);
            dropped = dropped || c.label(p) == PhaseLabel::Drop;
        }
    }

    const auto& obj = catalog.front();
    const auto poses = generate_pose_space();
    const auto c1 = simulate_cycle(obj, obj.grasp_points[0].id, 15.0, poses[4], cfg, 77);
    const auto c2 = simulate_cycle(obj, obj.grasp_points[0].id, 15.0, poses[4], cfg, 77);
    const auto c3 = simulate_cycle(obj, obj.grasp_points[0].id, 15.0, poses[4], cfg, 78);
    CHECK(c1 == c2);
    CHECK(c1.labels == c3.labels);
    CHECK_FALSE(c1.tactile == c3.tactile);
}

TEST_CASE("one object with one grasp point yields 32 cycles") {
    auto obj = make_object(0.3, 0.6, 0.008, Eigen::Vector3d(0.01, 0, -0.01));
    obj.min_lift_force_n = min_lift_force(obj);
    const auto d = synthesize_dataset({obj}, holdstab::testing::fast_sim_config(), 1);
    CHECK(d.size() == 32);
    CHECK_THROWS_AS(synthesize_dataset({}, SimConfig{}, 1), ConfigError);
}

TEST_CASE("generator ground truth tallies the cycles it wrote") {
    const auto d = synthesize_dataset(generate_catalog(4, 8), holdstab::testing::fast_sim_config(), 2);
    const auto& gt = d.metadata.at("ground_truth");
    CHECK(gt.at("cycles").get<std::size_t>() == d.size());
    for (auto p : kPhases)
        for (auto l : kPhaseLabels) {
            const auto n = std::count_if(d.cycles.begin(), d.cycles.end(), [&](const GraspCycle& c) { return c.label(p) == l; });
            CHECK(gt["label_counts"][std::string(to_string(p))][std::string(to_string(l))].get<long>() == n);
        }
}

TEST_CASE("generated catalogs are valid and lift forces are minimal") {
    const auto catalog = generate_catalog(12, 5);
    REQUIRE(catalog.size() == 12);
    const auto ref = generate_pose_space()[0];
    for (const auto& o : catalog) {
        CHECK_NOTHROW(o.validate());
        CHECK(std::find(kLiftForceOptions.begin(), kLiftForceOptions.end(), o.min_lift_force_n) !=
              kLiftForceOptions.end());
        CHECK(o.min_lift_force_n == min_lift_force(o));
        bool holds = true;
        for (const auto& gp : o.grasp_points)
            holds = holds && stability_margin(o, gp.id, o.min_lift_force_n, ref, Eigen::Vector3d::Zero()).combined() > 0;
        if (o.min_lift_force_n < kLiftForceOptions.back()) CHECK(holds);
    }
    const auto back = catalog_from_json(catalog_to_json(catalog));
    REQUIRE(back.size() == catalog.size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i].to_json() == catalog[i].to_json());
    CHECK(generate_catalog(12, 5)[3].to_json() == catalog[3].to_json());
}

TEST_CASE("tactile imprint stays put while passing and vanishes after a drop") {
    const auto obj = make_object(0.2, 0.8, 0.01, Eigen::Vector3d(0.005, 0.0, -0.005));
    const SimConfig cfg;
    const auto poses = generate_pose_space();
    const auto params = imprint_params(obj, "0", 80.0, cfg);
    const auto background = tactile_background(params);
    const auto bounds = phase_boundaries(cfg);

    const auto pass = phase_outcomes(obj, "0", 80.0, poses[0], cfg);
    for (const auto& o : pass) REQUIRE(o.label == PhaseLabel::Pass);
    const auto held = margin_history(pass, cfg);

    CHECK(render_tactile(held, params, held.contact_time - 0.1) == background);

    const auto start = imprint_centroid(render_tactile(held, params, held.contact_time + 0.05), background);
    const auto end = imprint_centroid(render_tactile(held, params, bounds[index(Phase::Shake)].end - 1e-6), background);
    CHECK(std::hypot(start.first - end.first, start.second - end.second) <= 1.0);

    std::array<PhaseOutcome, 4> drop = pass;
    drop[index(Phase::Shake)] = {{-0.5, 0.2}, PhaseLabel::Drop};
    drop[index(Phase::Retract)] = {{-0.5, 0.2}, PhaseLabel::NotPresent};
    const auto dropped = margin_history(drop, cfg);
    const auto last = render_tactile(dropped, params, bounds[index(Phase::Shake)].end - 1e-6);
    const double noise_floor = 3.0 * cfg.noise.tactile_sigma;
    CHECK(max_pixel(last) <= max_pixel(background) + noise_floor);

    std::array<PhaseOutcome, 4> slip = pass;
    slip[index(Phase::Shake)] = {{-0.05, 0.3}, PhaseLabel::Slip};
    const auto slipping = margin_history(slip, cfg);
    const double t_mid = bounds[index(Phase::Shake)].start;
    const double t_end = bounds[index(Phase::Shake)].end - 1e-6;
    const auto c0 = imprint_centroid(render_tactile(slipping, params, t_mid), background);
    const auto c1 = imprint_centroid(render_tactile(slipping, params, t_end), background);
    // Toward the top row means a smaller row index.
    CHECK(c1.first < c0.first - 0.5);
    CHECK(max_pixel(render_tactile(slipping, params, t_end)) < max_pixel(render_tactile(slipping, params, t_mid)));
}
