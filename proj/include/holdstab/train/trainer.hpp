#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "holdstab/core/parallel.hpp"
#include "holdstab/model/params.hpp"
#include "holdstab/train/sampler.hpp"

namespace holdstab {

struct TrainConfig {
    double learning_rate = 0.01;
    double weight_decay = 0.01;
    double dropout = 0.1;
    int hidden = 500;
    int layers = 2;
    HeadReadout head = HeadReadout::BothTerminal;
    int iterations = 600;
    int anneal_at = 300;
    double anneal_factor = 0.1;
    /// Uniform batch size, and the pre-batch size when DRS is active.
    int batch_size = 200;
    int eval_every = 10;
    std::uint64_t seed = 0;

    /// ConfigError unless 0 < anneal_at < iterations and sizes are positive.
    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& defaults);
    static TrainConfig from_json(const nlohmann::json& j);

    /// 600 iterations, anneal at 300.
    static TrainConfig unseen_pose_preset();
    /// 500 iterations, anneal at 30.
    static TrainConfig unseen_object_preset();
};

/// A borrowed T x D sequence with its training target and S-neq membership.
struct LabeledSequence {
    const Eigen::MatrixXd* x = nullptr;
    int target = 0;
    bool label_changes = false;
};

/// The batches train() draws, one call per iteration in order. Uniform until
/// DRS starts (the anneal unless defer_until says otherwise), thinned after.
class BatchSchedule {
public:
    /// ConfigError when DRS is requested with sigma <= r.
    BatchSchedule(std::span<const char> label_changes, const TrainConfig& cfg, const std::optional<DrsConfig>& drs);

    /// Never empty: a thinned batch that comes out empty is drawn again.
    std::vector<std::size_t> next(int iteration);
    bool uses_drs(int iteration) const noexcept { return part_ && iteration >= drs_from_; }
    /// |S-neq| / |S-eq|, or 0 without DRS.
    double r() const noexcept { return part_ ? part_->r : 0.0; }

private:
    std::size_t n_;
    std::size_t batch_size_;
    std::optional<Partition> part_;
    std::optional<DrsConfig> drs_;
    int drs_from_;
    Rng rng_;
};

struct TrainLogRecord {
    int iteration = 0;
    double learning_rate = 0.0;
    double loss = 0.0;
    std::size_t batch_size = 0;
    /// Batch members whose pose and shake labels differ.
    std::size_t batch_sneq = 0;
    std::string sampler;  // "uniform" or "drs"
    std::optional<double> val_accuracy;

    nlohmann::json to_json() const;
};

struct TrainResult {
    Model<float> best;
    Model<float> last;
    int best_iteration = -1;
    double best_val_accuracy = 0.0;
    std::vector<TrainLogRecord> history;
};

/// Fraction of sequences whose predicted class equals the target.
double accuracy(const Model<float>& model, std::span<const LabeledSequence> data, Exec exec = Exec::Parallel);

/// SGD with weight decay, a single learning-rate anneal and optional deferred
/// resampling. Validation accuracy is checked every cfg.eval_every iterations
/// and after the last; the returned `best` is the earliest checkpoint with the
/// highest validation accuracy (the last model when `val` is empty). Each
/// record is also written to `log` as one JSON line when given. NumericError
/// on divergence names the iteration.
TrainResult train(const Model<float>& init, std::span<const LabeledSequence> train_set, const TrainConfig& cfg,
                  const std::optional<DrsConfig>& drs, std::span<const LabeledSequence> val, std::ostream* log = nullptr,
                  Exec exec = Exec::Parallel);

/// Model config for an LSTM under cfg, or a linear model over timesteps x input_dim.
ModelConfig lstm_config(const TrainConfig& cfg, int input_dim);
ModelConfig linear_config(int timesteps, int input_dim);

}  // namespace holdstab
