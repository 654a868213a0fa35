#include <doctest.h>

#include <sstream>

#include "holdstab/core/error.hpp"
#include "holdstab/eval/experiment.hpp"
#include "support/fixtures.hpp"

using namespace holdstab;

namespace {

constexpr int kT = 4;

FeatureBank make_bank(int timesteps, std::uint64_t seed) {
    FeatureBank b;
    b.layout = {Modalities{true, true}, 4, 4};
    b.timesteps = timesteps;
    b.sequences = holdstab::testing::random_sequences(224, timesteps, b.layout.dimension(), seed);
    // Give the label a weak footprint in the force column so models have something to find.
    for (auto& s : b.sequences)
        if (s.label_shake == BinaryLabel::NotStable) s.matrix.col(b.layout.force_offset()).array() += 1.0;
    return b;
}

VariantOptions quick_options() {
    VariantOptions o;
    o.train.hidden = 6;
    o.train.iterations = 30;
    o.train.anneal_at = 15;
    o.train.batch_size = 32;
    o.train.eval_every = 10;
    return o;
}

}  // namespace

TEST_CASE("variant names") {
    for (auto v : kAllVariants) CHECK(parse_variant(to_string(v)) == v);
    CHECK(parse_variant("LSTM_DRS") == Variant::LstmDrs);
    CHECK(parse_variant("lstm+drs") == Variant::LstmDrs);
    CHECK(display_name(Variant::LstmWc) == "LSTM-WC (Ceiling)");
    CHECK_THROWS_AS(parse_variant("forest"), ConfigError);
    CHECK(default_sigma(parse_modalities("t")) == 0.5);
    CHECK(default_sigma(parse_modalities("vt")) == 1.0);
    CHECK(default_sigma(parse_modalities("v")) == 1.0);
}

TEST_CASE("pose-group manifests cycle through the three groups") {
    const auto keys = holdstab::testing::grid_keys(3, 1);
    const ProtocolParams params;
    const char* expected[] = {"G1", "G2", "G3", "G1"};
    for (std::size_t i = 0; i < 4; ++i) {
        const auto m = make_manifest(keys, Protocol::PoseGroup, params, i, 7);
        CHECK(m.params.at("held_group").get<std::string>() == expected[i]);
    }
    const auto u = make_manifest(keys, Protocol::Uniform, params, 0, 7);
    CHECK(u.to_json() == split_uniform(keys, params.train_fraction, 7).to_json());
    CHECK(ProtocolParams::from_json(params.to_json()).to_json() == params.to_json());
}

TEST_CASE("fitting never reads test labels") {
    const auto bank = make_bank(kT, 1);
    const ExperimentData data{&bank, nullptr};
    const auto keys = data.keys();
    const auto m = split_uniform(keys, kDefaultTrainFraction, 2);

    auto scrambled = bank;
    for (const auto& id : m.test) {
        auto& s = scrambled.sequences[scrambled.find(id)];
        s.label_shake = s.label_shake == BinaryLabel::Stable ? BinaryLabel::NotStable : BinaryLabel::Stable;
        s.label_pose = BinaryLabel::NotStable;
    }
    const ExperimentData other{&scrambled, nullptr};
    for (auto v : {Variant::Lstm, Variant::LstmDrs, Variant::Linear, Variant::Majority}) {
        const auto a = fit_variant(data, v, parse_modalities("vt"), m, quick_options(), Exec::Serial);
        const auto b = fit_variant(other, v, parse_modalities("vt"), m, quick_options(), Exec::Serial);
        CHECK(a.describe() == b.describe());
        if (a.model) CHECK(a.model->data == b.model->data);
    }
}

TEST_CASE("LSTM-P learns pose labels only") {
    const auto bank = make_bank(kT, 3);
    const auto keys = ExperimentData{&bank, nullptr}.keys();
    const auto m = split_uniform(keys, kDefaultTrainFraction, 4);

    // Changing every shake label must not move an LSTM-P fit.
    auto shaken = bank;
    for (auto& s : shaken.sequences) s.label_shake = BinaryLabel::NotStable;
    const auto a = fit_variant({&bank, nullptr}, Variant::LstmP, parse_modalities("t"), m, quick_options(), Exec::Serial);
    const auto b = fit_variant({&shaken, nullptr}, Variant::LstmP, parse_modalities("t"), m, quick_options(), Exec::Serial);
    CHECK(a.model->data == b.model->data);
    CHECK(a.model->config.input_dim == 4 + kWrenchDim + 1);
}

TEST_CASE("LSTM-WC uses the release span and needs it") {
    const auto pose = make_bank(kT, 5);
    auto release = make_bank(kT + 3, 6);
    const ExperimentData without{&pose, nullptr};
    const auto m = split_uniform(without.keys(), kDefaultTrainFraction, 1);
    CHECK_THROWS_AS(fit_variant(without, Variant::LstmWc, parse_modalities("vt"), m, quick_options()), ConfigError);

    const ExperimentData with{&pose, &release};
    const auto r = run_single(with, Variant::LstmWc, parse_modalities("vt"), m, quick_options(), Exec::Serial);
    CHECK(r.metrics.n == m.test.size());
    CHECK(r.best_iteration >= 0);
}

TEST_CASE("modality and manifest errors") {
    auto bank = make_bank(kT, 7);
    bank.layout.modalities.vision = false;
    const ExperimentData data{&bank, nullptr};
    auto m = split_uniform(data.keys(), kDefaultTrainFraction, 1);
    CHECK_THROWS_AS(fit_variant(data, Variant::Lstm, parse_modalities("v"), m, quick_options()), ConfigError);
    CHECK_THROWS_AS(fit_variant(data, Variant::Lstm, Modalities{}, m, quick_options()), ConfigError);
    m.train.clear();
    CHECK_THROWS_AS(fit_variant(data, Variant::Lstm, parse_modalities("t"), m, quick_options()), DataError);
    CHECK_THROWS_AS(ExperimentData{}.keys(), ConfigError);
}

TEST_CASE("sigma tuning tries only choices above r") {
    const auto bank = make_bank(kT, 8);
    const ExperimentData data{&bank, nullptr};
    const auto m = split_uniform(data.keys(), kDefaultTrainFraction, 1);
    auto opts = quick_options();
    opts.tune_sigma = true;
    const auto fm = fit_variant(data, Variant::LstmDrs, parse_modalities("vt"), m, opts, Exec::Serial);
    CHECK((fm.sigma == 0.5 || fm.sigma == 1.0));
    CHECK(fm.describe().at("sigma") == fm.sigma);

    // With r above every choice there is nothing to try.
    auto heavy = bank;
    for (std::size_t i = 0; i < heavy.size(); ++i) {
        auto& s = heavy.sequences[i];
        if (i % 4 != 0)
            s.label_pose = s.label_shake == BinaryLabel::Stable ? BinaryLabel::NotStable : BinaryLabel::Stable;
    }
    CHECK_THROWS_AS(fit_variant({&heavy, nullptr}, Variant::LstmDrs, parse_modalities("vt"), m, opts), ConfigError);
}

TEST_CASE("experiments are reproducible and ordered by split then seed") {
    const auto bank = make_bank(kT, 9);
    const ExperimentData data{&bank, nullptr};
    ExperimentSpec spec;
    spec.protocol = Protocol::UnseenObjects;
    spec.variant = Variant::LstmDrs;
    spec.repeats = 2;
    spec.split_seed_base = 40;
    spec.seeds = {0, 1};
    spec.options = quick_options();
    spec.params.n_test_objects = 2;

    std::size_t manifests = 0, callbacks = 0;
    RunHooks hooks;
    hooks.on_manifest = [&](const SplitManifest& m, std::size_t) {
        ++manifests;
        CHECK(audit_manifest(m, data.keys()).empty());
    };
    hooks.on_result = [&](const RunResult&) { ++callbacks; };
    const auto a = run_experiment(data, spec, Exec::Parallel, &hooks);
    const auto b = run_experiment(data, spec, Exec::Serial);
    CHECK(manifests == 2);
    CHECK(callbacks == 4);
    REQUIRE(a.size() == 4);
    REQUIRE(b.size() == 4);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].split_seed == 40 + k / 2);
        CHECK(a[k].seed == k % 2);
        CHECK(a[k].metrics.accuracy == b[k].metrics.accuracy);
        CHECK(a[k].best_iteration == b[k].best_iteration);
        CHECK(a[k].to_json() == b[k].to_json());
    }

    spec.repeats = 0;
    CHECK_THROWS_AS(run_experiment(data, spec), ConfigError);
    spec.repeats = 1;
    spec.seeds.clear();
    CHECK_THROWS_AS(run_experiment(data, spec), ConfigError);
}

TEST_CASE("the majority baseline ignores the modality choice") {
    const auto bank = make_bank(kT, 10);
    const ExperimentData data{&bank, nullptr};
    const auto m = split_random_poses(data.keys(), 5, 3);
    const auto base = run_single(data, Variant::Majority, parse_modalities("v"), m, quick_options());
    for (const char* mod : {"t", "vt"}) {
        const auto r = run_single(data, Variant::Majority, parse_modalities(mod), m, quick_options());
        CHECK(r.metrics.accuracy == base.metrics.accuracy);
        CHECK(r.metrics.confusion == base.metrics.confusion);
    }
    CHECK(base.best_iteration == -1);
}

TEST_CASE("a written results file reads back") {
    const auto bank = make_bank(kT, 11);
    const ExperimentData data{&bank, nullptr};
    const auto m = split_uniform(data.keys(), kDefaultTrainFraction, 1);
    const auto r = run_single(data, Variant::Linear, parse_modalities("vt"), m, quick_options(), Exec::Serial);
    std::stringstream ss;
    write_results_csv(ss, std::vector<RunResult>{r});
    const auto back = read_results_csv(ss);
    REQUIRE(back.size() == 1);
    CHECK(back[0].metrics.accuracy == r.metrics.accuracy);
    CHECK(back[0].variant == Variant::Linear);
}
