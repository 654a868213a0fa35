#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace holdstab {

enum class ModelKind { Lstm, Linear };

std::string_view to_string(ModelKind k) noexcept;
ModelKind parse_model_kind(std::string_view s);

/// Which top-layer states feed the head.
///   BothTerminal: forward state at the last step, backward state at the first
///                 step (each direction's own final state).
///   LastIndex:    both directions' states at the last timestep.
enum class HeadReadout { BothTerminal, LastIndex };

std::string_view to_string(HeadReadout h) noexcept;
HeadReadout parse_head_readout(std::string_view s);

struct ModelConfig {
    ModelKind kind = ModelKind::Lstm;
    int input_dim = 0;
    /// Lstm only.
    int hidden = 500;
    int layers = 2;
    HeadReadout head = HeadReadout::BothTerminal;
    /// Linear only: the flattened input is timesteps * input_dim long.
    int timesteps = 0;

    /// ConfigError on non-positive sizes.
    void validate() const;
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
    bool operator==(const ModelConfig&) const = default;
};

/// A named dense tensor inside the flat parameter vector, column-major.
struct TensorInfo {
    std::string name;
    int rows = 0;
    int cols = 1;
    std::size_t offset = 0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

/// Tensor order and shapes for a config. Lstm cells stack their gates in the
/// order input, forget, cell, output; each block is `hidden` rows.
///   lstm.l<k>.<fwd|bwd>.w_x   4H x D_k    (D_0 = input_dim, D_k = 2H after)
///   lstm.l<k>.<fwd|bwd>.w_h   4H x H
///   lstm.l<k>.<fwd|bwd>.b     4H
///   head.w 2 x 2H, head.b 2
/// Linear: linear.w 2 x (T*D) over the row-major flattened sequence, linear.b 2.
class ParamLayout {
public:
    ParamLayout() = default;
    explicit ParamLayout(const ModelConfig& cfg);

    const std::vector<TensorInfo>& tensors() const noexcept { return tensors_; }
    std::size_t total() const noexcept { return total_; }
    /// std::out_of_range for an unknown name.
    const TensorInfo& at(std::string_view name) const;

    std::size_t lstm_index(int layer, int dir) const noexcept {
        return static_cast<std::size_t>(3 * (2 * layer + dir));
    }

private:
    std::vector<TensorInfo> tensors_;
    std::size_t total_ = 0;
};

template <class S>
struct Model {
    using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

    ModelConfig config;
    ParamLayout layout;
    std::vector<S> data;

    static Model zeros(const ModelConfig& cfg);
    /// Uniform(-1/sqrt(H), 1/sqrt(H)) for every Lstm tensor and the head, forget
    /// bias +1. Linear models use 1/sqrt(T*D).
    static Model init(const ModelConfig& cfg, std::uint64_t seed);

    Eigen::Map<const Matrix> tensor(const TensorInfo& t) const {
        return {data.data() + t.offset, t.rows, t.cols};
    }
    Eigen::Map<Matrix> tensor(const TensorInfo& t) { return {data.data() + t.offset, t.rows, t.cols}; }
    Eigen::Map<const Matrix> tensor(std::string_view name) const { return tensor(layout.at(name)); }
    Eigen::Map<Matrix> tensor(std::string_view name) { return tensor(layout.at(name)); }

    bool all_finite() const noexcept;

    template <class T>
    Model<T> cast() const {
        Model<T> out;
        out.config = config;
        out.layout = layout;
        out.data.assign(data.begin(), data.end());
        return out;
    }
};

extern template struct Model<float>;
extern template struct Model<double>;

}  // namespace holdstab
