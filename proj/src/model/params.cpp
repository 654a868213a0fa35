#include "holdstab/model/params.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

#include "holdstab/core/error.hpp"
#include "holdstab/core/rng.hpp"

namespace holdstab {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

}  // namespace

std::string_view to_string(ModelKind k) noexcept { return k == ModelKind::Lstm ? "lstm" : "linear"; }

ModelKind parse_model_kind(std::string_view s) {
    const auto k = lower(s);
    if (k == "lstm") return ModelKind::Lstm;
    if (k == "linear") return ModelKind::Linear;
    throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

std::string_view to_string(HeadReadout h) noexcept {
    return h == HeadReadout::BothTerminal ? "both_terminal" : "last_index";
}

HeadReadout parse_head_readout(std::string_view s) {
    const auto k = lower(s);
    if (k == "both_terminal" || k == "both-terminal") return HeadReadout::BothTerminal;
    if (k == "last_index" || k == "last-index") return HeadReadout::LastIndex;
    throw ConfigError("unknown head readout '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
    if (input_dim <= 0) throw ConfigError("model input_dim must be positive");
    if (kind == ModelKind::Lstm) {
        if (hidden <= 0) throw ConfigError("hidden size must be positive");
        if (layers <= 0) throw ConfigError("layer count must be positive");
    } else if (timesteps <= 0) {
        throw ConfigError("linear model needs a positive timestep count");
    }
}

nlohmann::json ModelConfig::to_json() const {
    nlohmann::json j = {{"kind", std::string(to_string(kind))}, {"input_dim", input_dim}};
    if (kind == ModelKind::Lstm) {
        j["hidden"] = hidden;
        j["layers"] = layers;
        j["head"] = std::string(to_string(head));
    } else {
        j["timesteps"] = timesteps;
    }
    return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.kind = parse_model_kind(j.at("kind").get<std::string>());
    c.input_dim = j.at("input_dim").get<int>();
    if (c.kind == ModelKind::Lstm) {
        c.hidden = j.value("hidden", c.hidden);
        c.layers = j.value("layers", c.layers);
        c.head = parse_head_readout(j.value("head", std::string(to_string(c.head))));
    } else {
        c.timesteps = j.at("timesteps").get<int>();
    }
    c.validate();
    return c;
}

ParamLayout::ParamLayout(const ModelConfig& cfg) {
    cfg.validate();
    const auto add = [&](std::string name, int rows, int cols) {
        tensors_.push_back({std::move(name), rows, cols, total_});
        total_ += tensors_.back().size();
    };
    if (cfg.kind == ModelKind::Linear) {
        add("linear.w", 2, cfg.timesteps * cfg.input_dim);
        add("linear.b", 2, 1);
        return;
    }
    const int H = cfg.hidden;
    for (int l = 0; l < cfg.layers; ++l) {
        const int in = l == 0 ? cfg.input_dim : 2 * H;
        for (const char* dir : {"fwd", "bwd"}) {
            const auto prefix = "lstm.l" + std::to_string(l) + "." + dir + ".";
            add(prefix + "w_x", 4 * H, in);
            add(prefix + "w_h", 4 * H, H);
            add(prefix + "b", 4 * H, 1);
        }
    }
    add("head.w", 2, 2 * H);
    add("head.b", 2, 1);
}

const TensorInfo& ParamLayout::at(std::string_view name) const {
    for (const auto& t : tensors_)
        if (t.name == name) return t;
    throw std::out_of_range("no parameter tensor named '" + std::string(name) + "'");
}

template <class S>
Model<S> Model<S>::zeros(const ModelConfig& cfg) {
    Model m;
    m.config = cfg;
    m.layout = ParamLayout(cfg);
    m.data.assign(m.layout.total(), S(0));
    return m;
}

template <class S>
Model<S> Model<S>::init(const ModelConfig& cfg, std::uint64_t seed) {
    auto m = zeros(cfg);
    Rng rng(seed);
    const double bound = cfg.kind == ModelKind::Lstm ? 1.0 / std::sqrt(static_cast<double>(cfg.hidden))
                                                     : 1.0 / std::sqrt(static_cast<double>(cfg.timesteps) * cfg.input_dim);
    for (auto& v : m.data) v = static_cast<S>((2.0 * uniform01(rng) - 1.0) * bound);
    if (cfg.kind == ModelKind::Lstm) {
        const int H = cfg.hidden;
        for (int l = 0; l < cfg.layers; ++l)
            for (int d = 0; d < 2; ++d) {
                const auto& b = m.layout.tensors()[m.layout.lstm_index(l, d) + 2];
                for (int r = H; r < 2 * H; ++r) m.data[b.offset + static_cast<std::size_t>(r)] = S(1);
            }
    }
    return m;
}

template <class S>
bool Model<S>::all_finite() const noexcept {
    for (S v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

template struct Model<float>;
template struct Model<double>;

}  // namespace holdstab
