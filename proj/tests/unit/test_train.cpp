#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "holdstab/core/error.hpp"
#include "holdstab/model/network.hpp"
#include "holdstab/train/sampler.hpp"
#include "holdstab/train/trainer.hpp"
#include "support/fixtures.hpp"

using namespace holdstab;

namespace {

std::vector<char> flags(std::size_t n_eq, std::size_t n_neq) {
    std::vector<char> f(n_eq + n_neq, 0);
    std::fill(f.begin() + static_cast<std::ptrdiff_t>(n_eq), f.end(), 1);
    return f;
}

std::vector<LabeledSequence> labeled(const std::vector<FeatureSequence>& seqs) {
    std::vector<LabeledSequence> out;
    for (const auto& s : seqs) out.push_back({&s.matrix, class_of(s.label_shake), s.label_changes()});
    return out;
}

TrainConfig small_config() {
    TrainConfig c;
    c.hidden = 6;
    c.iterations = 20;
    c.anneal_at = 10;
    c.batch_size = 16;
    c.eval_every = 5;
    c.seed = 3;
    return c;
}

}  // namespace

TEST_CASE("partition sizes and ratio") {
    const auto p = partition(std::span<const char>(flags(800, 200)));
    CHECK(p.s_eq.size() == 800);
    CHECK(p.s_neq.size() == 200);
    CHECK(p.r == 0.25);
    CHECK(p.size() == 1000);

    const auto all = partition(std::span<const char>(flags(50, 0)));
    CHECK(all.s_neq.empty());
    CHECK(all.r == 0.0);

    CHECK(partition(std::span<const char>(flags(30, 30))).r == 1.0);
    CHECK_THROWS_AS(partition(std::span<const char>(flags(0, 5))), DataError);

    const std::vector<bool> mixed{true, false, false, true, false};
    const auto q = partition(mixed);
    CHECK(q.s_neq == std::vector<std::size_t>{0, 3});
    CHECK(q.s_eq == std::vector<std::size_t>{1, 2, 4});
}

TEST_CASE("uniform batches are distinct indices") {
    Rng rng(1);
    const auto b = uniform_batch(50, 20, rng);
    CHECK(b.size() == 20);
    std::vector<char> seen(50, 0);
    for (auto i : b) {
        REQUIRE(i < 50);
        CHECK_FALSE(seen[i]);
        seen[i] = 1;
    }
    CHECK(uniform_batch(7, 20, rng).size() == 7);
}

TEST_CASE("DRS keeps every label-changing example and thins the rest at r / sigma") {
    const auto part = partition(std::span<const char>(flags(800, 200)));
    DrsConfig cfg;
    cfg.sigma = 0.5;
    Rng rng(4);
    double kept_eq = 0, drawn_eq = 0;
    const int draws = 4000;
    for (int k = 0; k < draws; ++k) {
        const auto b = drs_batch(part, cfg, rng);
        std::size_t neq = 0;
        for (auto i : b) neq += part.changes[i];
        kept_eq += static_cast<double>(b.size() - neq);
        // A uniform pre-batch of 200 from 1000 holds 160 label-consistent members on average.
        drawn_eq += 160.0;
    }
    const double keep = kept_eq / drawn_eq;
    CHECK(keep == doctest::Approx(0.25 / 0.5).epsilon(0.02));

    cfg.sigma = 0.25;
    CHECK_THROWS_AS(drs_batch(part, cfg, rng), ConfigError);
    cfg.sigma = 0.2;
    CHECK_THROWS_AS(drs_batch(part, cfg, rng), ConfigError);

    // sigma just above r keeps nearly everything.
    cfg.sigma = 0.25 + 1e-9;
    std::size_t total = 0;
    for (int k = 0; k < 200; ++k) total += drs_batch(part, cfg, rng).size();
    CHECK(static_cast<double>(total) / 200.0 == doctest::Approx(200.0).epsilon(0.01));
}

TEST_CASE("batch schedule is uniform before the anneal and thinned after") {
    auto cfg = small_config();
    cfg.batch_size = 200;
    cfg.iterations = 600;
    cfg.anneal_at = 300;
    const auto f = flags(800, 200);
    DrsConfig drs;
    drs.sigma = 1.0;
    BatchSchedule s(f, cfg, drs);
    CHECK(s.r() == 0.25);
    CHECK_FALSE(s.uses_drs(299));
    CHECK(s.uses_drs(300));
    CHECK(s.next(0).size() == 200);
    const auto late = s.next(300);
    CHECK(late.size() < 200);

    BatchSchedule plain(f, cfg, std::nullopt);
    CHECK_FALSE(plain.uses_drs(500));
    CHECK(plain.next(500).size() == 200);

    drs.defer_until = 5;
    BatchSchedule early(f, cfg, drs);
    CHECK(early.uses_drs(5));
    CHECK_FALSE(early.uses_drs(4));

    drs.sigma = 0.25;
    CHECK_THROWS_AS(BatchSchedule(f, cfg, drs), ConfigError);
}

TEST_CASE("train config validation and JSON") {
    auto c = small_config();
    CHECK_NOTHROW(c.validate());
    c.anneal_at = c.iterations;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.anneal_at = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    const auto p = TrainConfig::unseen_pose_preset();
    CHECK(p.iterations == 600);
    CHECK(p.anneal_at == 300);
    CHECK(p.learning_rate == 0.01);
    CHECK(p.weight_decay == 0.01);
    CHECK(p.dropout == 0.1);
    const auto o = TrainConfig::unseen_object_preset();
    CHECK(o.iterations == 500);
    CHECK(o.anneal_at == 30);

    const auto back = TrainConfig::from_json(small_config().to_json());
    CHECK(back.to_json() == small_config().to_json());
    const auto patched = TrainConfig::from_json({{"hidden", 64}}, p);
    CHECK(patched.hidden == 64);
    CHECK(patched.iterations == 600);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
    const auto seqs = holdstab::testing::random_sequences(40, 4, 5, 1);
    const auto data = labeled(seqs);
    auto cfg = small_config();
    cfg.learning_rate = 0.0;
    const auto init = Model<float>::init(lstm_config(cfg, 5), 2);
    const auto r = train(init, data, cfg, std::nullopt, data);
    CHECK(r.last.data == init.data);
    CHECK(r.best.data == init.data);
    CHECK(r.history.size() == 20);
}

TEST_CASE("seeded training is reproducible byte for byte") {
    const auto seqs = holdstab::testing::random_sequences(60, 4, 5, 2);
    const auto data = labeled(seqs);
    const std::span<const LabeledSequence> tr(data.data(), 45), val(data.data() + 45, 15);
    const auto cfg = small_config();
    DrsConfig drs;
    drs.sigma = 1.0;
    const auto init = Model<float>::init(lstm_config(cfg, 5), 2);
    std::ostringstream a, b;
    const auto ra = train(init, tr, cfg, drs, val, &a, Exec::Parallel);
    const auto rb = train(init, tr, cfg, drs, val, &b, Exec::Serial);
    CHECK(a.str() == b.str());
    CHECK(ra.best.data == rb.best.data);
    CHECK(ra.best_iteration == rb.best_iteration);
    CHECK(a.str().find("\"sampler\":\"drs\"") != std::string::npos);
    CHECK(a.str().find("\"sampler\":\"uniform\"") != std::string::npos);
}

TEST_CASE("learning rate anneals once and validation is checked on schedule") {
    const auto seqs = holdstab::testing::random_sequences(40, 4, 5, 3);
    const auto data = labeled(seqs);
    const auto cfg = small_config();
    const auto r = train(Model<float>::init(lstm_config(cfg, 5), 1), data, cfg, std::nullopt, data);
    for (const auto& rec : r.history) {
        CHECK(rec.learning_rate == doctest::Approx(rec.iteration < 10 ? 0.01 : 0.001));
        CHECK(rec.val_accuracy.has_value() == ((rec.iteration + 1) % 5 == 0));
        CHECK(rec.sampler == "uniform");
    }
    // The best checkpoint is the earliest with the top validation score.
    double top = -1;
    int first = -1;
    for (const auto& rec : r.history)
        if (rec.val_accuracy && *rec.val_accuracy > top) {
            top = *rec.val_accuracy;
            first = rec.iteration;
        }
    CHECK(r.best_iteration == first);
    CHECK(r.best_val_accuracy == top);
    CHECK(accuracy(r.best, data) == doctest::Approx(top));
}

TEST_CASE("weight decay alone shrinks the parameters by (1 - lr * wd) per step") {
    // Zero inputs, zero biases and a zero head make every data gradient vanish
    // exactly for a class-balanced full batch; only decay moves the weights.
    const int T = 3, D = 4;
    std::vector<Eigen::MatrixXd> xs(8, Eigen::MatrixXd::Zero(T, D));
    std::vector<LabeledSequence> data;
    for (std::size_t i = 0; i < xs.size(); ++i) data.push_back({&xs[i], static_cast<int>(i % 2), false});

    auto cfg = small_config();
    cfg.batch_size = static_cast<int>(data.size());
    cfg.iterations = 6;
    cfg.anneal_at = 4;
    cfg.weight_decay = 0.5;
    cfg.learning_rate = 0.1;
    auto init = Model<float>::init(lstm_config(cfg, D), 5);
    for (const auto& t : init.layout.tensors())
        if (t.name.ends_with(".b") || t.name.starts_with("head")) init.tensor(t).setZero();

    const auto r = train(init, data, cfg, std::nullopt, {});
    const double factor = std::pow(1.0 - 0.1 * 0.5, 4) * std::pow(1.0 - 0.01 * 0.5, 2);
    for (std::size_t i = 0; i < init.data.size(); ++i)
        CHECK(r.last.data[i] == doctest::Approx(init.data[i] * factor).epsilon(1e-5));
    for (const auto& rec : r.history) CHECK(rec.loss == doctest::Approx(std::log(2.0)));
}

TEST_CASE("divergence names the iteration") {
    const auto seqs = holdstab::testing::random_sequences(20, 3, 4, 4);
    const auto data = labeled(seqs);
    auto cfg = small_config();
    cfg.learning_rate = 1e30;
    try {
        (void)train(Model<float>::init(lstm_config(cfg, 4), 1), data, cfg, std::nullopt, {});
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
}
