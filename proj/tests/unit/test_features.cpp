#include <doctest.h>

#include <fstream>

#include "holdstab/core/error.hpp"
#include "holdstab/features/embedder.hpp"
#include "holdstab/features/sequence.hpp"
#include "holdstab/features/standardizer.hpp"
#include "holdstab/simulate/catalog.hpp"
#include "holdstab/simulate/simulator.hpp"
#include "support/fixtures.hpp"

using namespace holdstab;
using holdstab::testing::TempDir;

namespace {

std::vector<GraspCycle> usable_cycles(int objects, std::uint64_t seed) {
    const auto d = synthesize_dataset(generate_catalog(objects, seed), holdstab::testing::fast_sim_config(), seed);
    return filter_usable(d).cycles;
}

RandomProjectionEmbedder tactile_embedder(const GraspCycle& c, int dim) {
    const auto& f = c.tactile.samples.front();
    return {f.height, f.width, f.channels, dim, 2, 11};
}

RandomProjectionEmbedder rgb_embedder(const GraspCycle& c, int dim) {
    const auto& f = c.rgb.samples.front();
    return {f.height, f.width, f.channels, dim, 2, 12};
}

/// Pooled mean and population std of one column over every row of every sequence.
std::pair<double, double> pooled(const std::vector<FeatureSequence>& seqs, int col) {
    double n = 0, s = 0, ss = 0;
    for (const auto& q : seqs)
        for (int t = 0; t < q.timesteps(); ++t) {
            const double v = q.matrix(t, col);
            n += 1;
            s += v;
            ss += v * v;
        }
    const double mean = s / n;
    return {mean, std::sqrt(std::max(0.0, ss / n - mean * mean))};
}

}  // namespace

TEST_CASE("timesteps are evenly spaced over the span, endpoints included") {
    GraspCycle c;
    c.cycle_id = "x";
    c.boundaries = {PhaseInterval{1, 5}, PhaseInterval{5, 20}, PhaseInterval{20, 24}, PhaseInterval{24, 27}};
    const auto ts = sample_timesteps(c, 20, Span::GraspToPoseEnd, {});
    REQUIRE(ts.size() == 20);
    CHECK(ts.front() == 1.0);
    CHECK(ts.back() == 20.0);
    for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] - ts[i - 1] == doctest::Approx(1.0).epsilon(1e-12));

    const auto two = sample_timesteps(c, 2, Span::GraspToReleaseEnd, {});
    CHECK(two == std::vector<double>{1.0, 27.0});
    CHECK_THROWS_AS(sample_timesteps(c, 1, Span::GraspToPoseEnd, {}), ConfigError);
}

TEST_CASE("timesteps on a simulated cycle and the coverage check") {
    auto c = usable_cycles(1, 3).front();
    const auto ts = sample_timesteps(c, 20, Span::GraspToPoseEnd);
    REQUIRE(ts.size() == 20);
    for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] > ts[i - 1]);

    c.rgb.times.resize(3);
    c.rgb.samples.resize(3);
    try {
        (void)sample_timesteps(c, 20, Span::GraspToPoseEnd);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("'rgb'") != std::string::npos);
    }
}

TEST_CASE("nearest frame lookup breaks ties toward the earlier frame") {
    const std::vector<double> t{0.0, 1.0, 2.0};
    CHECK(nearest_frame(t, -5.0) == 0);
    CHECK(nearest_frame(t, 0.4) == 0);
    CHECK(nearest_frame(t, 0.5) == 0);
    CHECK(nearest_frame(t, 0.6) == 1);
    CHECK(nearest_frame(t, 9.0) == 2);
}

TEST_CASE("tactile delta") {
    Image8 a(4, 5, 1, 40), b(4, 5, 1, 40);
    const auto z = tactile_delta(a, b);
    for (float v : z.pixels) CHECK(v == 0.0f);
    a.at(2, 3) = 100;
    CHECK(tactile_delta(a, b).at(2, 3) == 60.0f);
    CHECK_THROWS_AS(tactile_delta(a, Image8(5, 4)), DataError);

    const auto c = usable_cycles(1, 3).front();
    const auto self = tactile_delta(c.pre_contact_tactile, c.pre_contact_tactile);
    for (float v : self.pixels) CHECK(v == 0.0f);
}

TEST_CASE("feature rows follow the tactile | rgb | wrench | force layout") {
    const auto cycles = usable_cycles(1, 3);
    const auto& c = cycles.front();
    const auto et = tactile_embedder(c, 64);
    const auto ev = rgb_embedder(c, 64);

    CHECK(layout_for(&et, nullptr, parse_modalities("t")).dimension() == 71);
    CHECK(layout_for(&et, &ev, parse_modalities("v+t")).dimension() == 135);
    CHECK(layout_for(nullptr, &ev, parse_modalities("v")).dimension() == 71);

    AssembleOptions opts;
    opts.modalities = parse_modalities("vt");
    const auto seq = assemble(c, &et, &ev, opts);
    CHECK(seq.timesteps() == kDefaultTimesteps);
    CHECK(seq.dimension() == 135);
    const auto layout = layout_for(&et, &ev, opts.modalities);
    for (int t = 0; t < seq.timesteps(); ++t) CHECK(seq.matrix(t, layout.force_offset()) == c.grip_force_n);
    CHECK(seq.label_pose == binary_label(c.label(Phase::Pose)));
    CHECK(seq.label_shake == binary_label(c.label(Phase::Shake)));

    CHECK(assemble(c, &et, &ev, opts).matrix == seq.matrix);

    opts.modalities = parse_modalities("t");
    const auto t_only = assemble(c, &et, nullptr, opts);
    CHECK(t_only.dimension() == 71);
    const auto sliced = select_modalities(seq, layout, parse_modalities("t"));
    CHECK(sliced.matrix == t_only.matrix);
    CHECK(select_layout(layout, parse_modalities("t")) == layout_for(&et, nullptr, parse_modalities("t")));
}

TEST_CASE("modality names") {
    CHECK(to_string(parse_modalities("V+T")) == "V+T");
    CHECK(to_string(parse_modalities("tv")) == "V+T");
    CHECK(to_string(parse_modalities("T")) == "T");
    CHECK_THROWS_AS(parse_modalities(""), ConfigError);
    CHECK_THROWS_AS(parse_modalities("x"), ConfigError);
}

TEST_CASE("random projection embedder is deterministic and seed dependent") {
    ImageF img(12, 16, 1);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>(i % 7) * 3.0f;
    const RandomProjectionEmbedder a(12, 16, 1, 8, 4, 5), b(12, 16, 1, 8, 4, 5), c(12, 16, 1, 8, 4, 6);
    const EmbedQuery q{"c", "tactile", 0.0, img};
    CHECK(a.embed(q) == b.embed(q));
    CHECK_FALSE(a.embed(q) == c.embed(q));
    CHECK(a.pooled_size() == 3 * 4);
    const auto rebuilt = make_embedder(a.describe());
    CHECK(rebuilt->embed(q) == a.embed(q));
}

TEST_CASE("precomputed embedder reads JSON Lines and reports misses") {
    TempDir tmp("emb");
    {
        std::ofstream out(tmp / "e.jsonl");
        out << R"({"cycle_id": "c1", "stream": "tactile", "t": 1.5, "v": [1, 2, 3]})" << "\n\n";
        out << R"({"cycle_id": "c1", "stream": "rgb", "t": 1.5, "v": [4, 5, 6]})" << "\n";
    }
    const PrecomputedEmbedder e(tmp / "e.jsonl");
    CHECK(e.dimension() == 3);
    CHECK(e.size() == 2);
    const ImageF img;
    CHECK(e.embed({"c1", "rgb", 1.5000001, img}) == Eigen::Vector3d(4, 5, 6));
    CHECK_THROWS_AS(e.embed({"c1", "rgb", 2.0, img}), DataError);

    std::ofstream(tmp / "bad.jsonl") << R"({"cycle_id": "c1", "stream": "rgb", "t": 1, "v": [1]})" << "\n"
                                     << R"({"cycle_id": "c2", "stream": "rgb", "t": 1, "v": [1, 2]})" << "\n";
    CHECK_THROWS_AS(PrecomputedEmbedder(tmp / "bad.jsonl"), DataError);
}

TEST_CASE("standardizer on the fitting set") {
    auto seqs = holdstab::testing::random_sequences(40, 7, 5, 3);
    for (auto& s : seqs) {
        s.matrix.col(1) = s.matrix.col(1) * 30.0 + Eigen::VectorXd::Constant(7, 500.0);
        s.matrix.col(4).setConstant(15.0);
    }
    const auto st = fit_standardizer(seqs);
    std::vector<FeatureSequence> out;
    for (const auto& s : seqs) out.push_back(st.apply(s));
    for (int d = 0; d < 5; ++d) {
        const auto [mean, sd] = pooled(out, d);
        CHECK(std::abs(mean) < 1e-9);
        if (d != 4) CHECK(std::abs(sd - 1.0) < 1e-6);
    }
    for (const auto& s : out) CHECK((s.matrix.col(4).array() == 0.0).all());
    CHECK(out[3].cycle_id == seqs[3].cycle_id);
    CHECK(out[3].label_pose == seqs[3].label_pose);

    // Refitting on standardized data gives (nearly) the identity.
    const auto again = fit_standardizer(out);
    CHECK(again.mean.cwiseAbs().maxCoeff() < 1e-9);
    for (int d = 0; d < 4; ++d) CHECK(std::abs(again.std[d] - 1.0) < 1e-9);

    // Positive scale keeps the per-column order.
    Eigen::Index before, after;
    seqs[0].matrix.col(1).maxCoeff(&before);
    out[0].matrix.col(1).maxCoeff(&after);
    CHECK(before == after);
}

TEST_CASE("standardizer edge cases") {
    FeatureSequence one;
    one.matrix = Eigen::MatrixXd::Random(1, 4);
    const auto st = fit_standardizer(std::vector<FeatureSequence>{one});
    CHECK((st.apply(one).matrix.array() == 0.0).all());

    const auto id = Standardizer::identity(4);
    CHECK(id.apply(one).matrix == one.matrix);

    FeatureSequence wide;
    wide.matrix = Eigen::MatrixXd::Zero(2, 5);
    CHECK_THROWS_AS(id.apply(wide), DataError);
    CHECK_THROWS_AS(fit_standardizer(std::vector<FeatureSequence>{}), DataError);

    auto seqs = holdstab::testing::random_sequences(25, 4, 6, 9);
    const auto s1 = fit_standardizer(seqs, Exec::Serial);
    const auto s2 = fit_standardizer(seqs, Exec::Parallel);
    CHECK(s1.mean == s2.mean);
    CHECK(s1.std == s2.std);
    const auto back = Standardizer::from_json(s1.to_json());
    CHECK(back.mean == s1.mean);
    CHECK(back.std == s1.std);
}

TEST_CASE("feature bank extraction matches serial and survives the cache") {
    const auto cycles = usable_cycles(2, 5);
    const auto et = tactile_embedder(cycles.front(), 16);
    const auto ev = rgb_embedder(cycles.front(), 16);
    const auto par = extract_features(cycles, et, ev, Span::GraspToPoseEnd, 8, Exec::Parallel);
    const auto ser = extract_features(cycles, et, ev, Span::GraspToPoseEnd, 8, Exec::Serial);
    REQUIRE(par.size() == cycles.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
        CHECK(par.sequences[i].matrix == ser.sequences[i].matrix);
        CHECK(par.sequences[i].cycle_id == cycles[i].cycle_id);
    }
    CHECK(par.layout.dimension() == 16 + 16 + 7);

    TempDir tmp("bank");
    save_feature_bank(par, tmp / "bank");
    const auto back = load_feature_bank(tmp / "bank");
    REQUIRE(back.size() == par.size());
    CHECK(back.layout == par.layout);
    CHECK(back.timesteps == 8);
    for (std::size_t i = 0; i < par.size(); ++i) {
        CHECK(back.sequences[i].matrix == par.sequences[i].matrix);
        CHECK(back.sequences[i].label_shake == par.sequences[i].label_shake);
        CHECK(back.sequences[i].label_pose == par.sequences[i].label_pose);
        CHECK(back.sequences[i].object_id == par.sequences[i].object_id);
        CHECK(back.sequences[i].pose_id == par.sequences[i].pose_id);
    }
    CHECK(back.find(cycles[1].cycle_id) == 1);
    CHECK_THROWS_AS(back.find("nope"), DataError);

    const auto release = extract_features(cycles, et, ev, Span::GraspToReleaseEnd, 8, Exec::Serial);
    CHECK_FALSE(release.sequences[0].matrix == ser.sequences[0].matrix);
}
