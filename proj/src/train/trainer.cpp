#include "holdstab/train/trainer.hpp"

#include <cmath>

#include "holdstab/core/error.hpp"
#include "holdstab/core/rng.hpp"
#include "holdstab/model/network.hpp"

namespace holdstab {

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (hidden <= 0 || layers <= 0) throw ConfigError("hidden size and layer count must be positive");
    if (iterations <= 0) throw ConfigError("iterations must be positive");
    if (!(anneal_at > 0 && anneal_at < iterations))
        throw ConfigError("anneal_at must lie strictly between 0 and iterations (" + std::to_string(anneal_at) +
                          " vs " + std::to_string(iterations) + ")");
    if (!(anneal_factor > 0.0)) throw ConfigError("anneal factor must be positive");
    if (batch_size <= 0) throw ConfigError("batch size must be positive");
    if (eval_every <= 0) throw ConfigError("eval_every must be positive");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"learning_rate", learning_rate}, {"weight_decay", weight_decay},
            {"dropout", dropout},             {"hidden", hidden},
            {"layers", layers},               {"head", std::string(to_string(head))},
            {"iterations", iterations},       {"anneal_at", anneal_at},
            {"anneal_factor", anneal_factor}, {"batch_size", batch_size},
            {"eval_every", eval_every},       {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const TrainConfig& d) {
    TrainConfig c = d;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.dropout = j.value("dropout", c.dropout);
    c.hidden = j.value("hidden", c.hidden);
    c.layers = j.value("layers", c.layers);
    if (j.contains("head")) c.head = parse_head_readout(j.at("head").get<std::string>());
    c.iterations = j.value("iterations", c.iterations);
    c.anneal_at = j.value("anneal_at", c.anneal_at);
    c.anneal_factor = j.value("anneal_factor", c.anneal_factor);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

TrainConfig TrainConfig::unseen_pose_preset() { return {}; }

TrainConfig TrainConfig::unseen_object_preset() {
    TrainConfig c;
    c.iterations = 500;
    c.anneal_at = 30;
    return c;
}

nlohmann::json TrainLogRecord::to_json() const {
    nlohmann::json j = {{"iteration", iteration},
                        {"lr", learning_rate},
                        {"loss", loss},
                        {"batch", batch_size},
                        {"batch_sneq", batch_sneq},
                        {"sampler", sampler}};
    j["val_acc"] = val_accuracy ? nlohmann::json(*val_accuracy) : nlohmann::json(nullptr);
    return j;
}

ModelConfig lstm_config(const TrainConfig& cfg, int input_dim) {
    ModelConfig m;
    m.kind = ModelKind::Lstm;
    m.input_dim = input_dim;
    m.hidden = cfg.hidden;
    m.layers = cfg.layers;
    m.head = cfg.head;
    return m;
}

ModelConfig linear_config(int timesteps, int input_dim) {
    ModelConfig m;
    m.kind = ModelKind::Linear;
    m.input_dim = input_dim;
    m.timesteps = timesteps;
    return m;
}

double accuracy(const Model<float>& model, std::span<const LabeledSequence> data, Exec exec) {
    if (data.empty()) throw DataError("accuracy on an empty set");
    std::vector<const Eigen::MatrixXd*> xs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) xs[i] = data[i].x;
    const auto pred = predict(model, std::span<const Eigen::MatrixXd* const>(xs), exec);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) hits += class_of(pred[i]) == data[i].target;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

BatchSchedule::BatchSchedule(std::span<const char> label_changes, const TrainConfig& cfg,
                             const std::optional<DrsConfig>& drs)
    : n_(label_changes.size()),
      batch_size_(static_cast<std::size_t>(cfg.batch_size)),
      drs_(drs),
      drs_from_(cfg.iterations),
      rng_(derive_seed(cfg.seed, 1)) {
    if (!drs) return;
    drs->validate();
    part_ = partition(label_changes);
    if (!(drs->sigma > part_->r))
        throw ConfigError("DRS needs sigma > r (sigma = " + std::to_string(drs->sigma) + ", r = " +
                          std::to_string(part_->r) + ")");
    drs_from_ = drs->defer_until >= 0 ? drs->defer_until : cfg.anneal_at;
}

std::vector<std::size_t> BatchSchedule::next(int iteration) {
    std::vector<std::size_t> idx;
    // A thinned batch can come out empty when the pre-batch is tiny; draw again.
    do {
        idx = uses_drs(iteration) ? drs_batch(*part_, *drs_, rng_) : uniform_batch(n_, batch_size_, rng_);
    } while (idx.empty());
    return idx;
}

TrainResult train(const Model<float>& init, std::span<const LabeledSequence> train_set, const TrainConfig& cfg,
                  const std::optional<DrsConfig>& drs, std::span<const LabeledSequence> val, std::ostream* log,
                  Exec exec) {
    cfg.validate();
    if (train_set.empty()) throw DataError("empty training set");
    if (!init.all_finite()) throw NumericError("initial parameters are not finite");

    std::vector<char> flags(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i) flags[i] = train_set[i].label_changes;
    BatchSchedule schedule(flags, cfg, drs);

    TrainResult result;
    result.last = init;
    auto& model = result.last;
    result.best = model;
    bool have_best = false;

    std::vector<float> grad;
    std::vector<Example> batch;
    double lr = cfg.learning_rate;

    for (int it = 0; it < cfg.iterations; ++it) {
        if (it == cfg.anneal_at) lr *= cfg.anneal_factor;
        const auto idx = schedule.next(it);
        std::size_t sneq = 0;
        batch.clear();
        for (const auto i : idx) {
            batch.push_back({train_set[i].x, train_set[i].target});
            sneq += train_set[i].label_changes;
        }

        double loss = 0.0;
        try {
            loss = loss_and_grad(model, batch, cfg.dropout, derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(it)),
                                 &grad, exec);
        } catch (const NumericError& e) {
            throw NumericError("training diverged at iteration " + std::to_string(it) + ": " + e.what());
        }

        const auto step = static_cast<float>(lr);
        const auto decay = static_cast<float>(cfg.weight_decay);
        for (std::size_t p = 0; p < model.data.size(); ++p) model.data[p] -= step * (grad[p] + decay * model.data[p]);
        if (!model.all_finite())
            throw NumericError("training diverged at iteration " + std::to_string(it) + ": non-finite parameters");

        TrainLogRecord rec{it, lr, loss, batch.size(), sneq, schedule.uses_drs(it) ? "drs" : "uniform", std::nullopt};
        const bool eval_now = (it + 1) % cfg.eval_every == 0 || it + 1 == cfg.iterations;
        if (eval_now && !val.empty()) {
            const double acc = accuracy(model, val, exec);
            rec.val_accuracy = acc;
            if (!have_best || acc > result.best_val_accuracy) {
                result.best = model;
                result.best_val_accuracy = acc;
                result.best_iteration = it;
                have_best = true;
            }
        }
        if (log) *log << rec.to_json().dump() << '\n';
        result.history.push_back(std::move(rec));
    }

    if (!have_best) {
        result.best = model;
        result.best_iteration = cfg.iterations - 1;
    }
    return result;
}

}  // namespace holdstab
