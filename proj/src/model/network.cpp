#include "holdstab/model/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "holdstab/core/error.hpp"
#include "holdstab/core/rng.hpp"

namespace holdstab {

Eigen::MatrixXd dropout_mask(std::uint64_t seed, std::size_t slot, int boundary, int rows, int timesteps, double p) {
    Eigen::MatrixXd mask(rows, timesteps);
    if (p <= 0.0) {
        mask.setOnes();
        return mask;
    }
    Rng rng(derive_seed(seed, slot, static_cast<std::uint64_t>(boundary)));
    const double keep = 1.0 / (1.0 - p);
    for (int t = 0; t < timesteps; ++t)
        for (int r = 0; r < rows; ++r) mask(r, t) = uniform01(rng) >= p ? keep : 0.0;
    return mask;
}

BinaryLabel predict_label(const Eigen::Ref<const Eigen::Vector2d>& logit) noexcept {
    return logit[kNotStableClass] > logit[kStableClass] ? BinaryLabel::NotStable : BinaryLabel::Stable;
}

namespace {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
auto sigmoid(const auto& x) {
    return (S(1) + (-x.array()).exp()).inverse();
}

template <class S>
struct DirectionState {
    Mat<S> act;  // 4H x TB gate activations (i, f, g, o)
    Mat<S> c;    // H x TB
    Mat<S> h;    // H x TB
};

template <class S>
struct LayerState {
    Mat<S> input;  // D_l x TB, after dropout
    Mat<S> mask;   // empty when no dropout on this layer's input
    DirectionState<S> dir[2];
};

/// One chunk of examples through the network. Columns of every TB-wide matrix
/// are ordered timestep-major: column t*B + b holds example b at timestep t.
template <class S>
class ChunkPass {
public:
    ChunkPass(const Model<S>& m, std::span<const Eigen::MatrixXd* const> xs, std::size_t slot0, double dropout,
              std::uint64_t seed)
        : m_(m), xs_(xs), slot0_(slot0), dropout_(dropout), seed_(seed) {
        B_ = static_cast<int>(xs.size());
        T_ = static_cast<int>(xs.front()->rows());
    }

    /// 2 x B logits.
    Mat<S> forward() {
        return m_.config.kind == ModelKind::Lstm ? forward_lstm() : forward_linear();
    }

    /// dlogits is 2 x B, already scaled. Adds into grad.
    void backward(const Mat<S>& dlogits, S* grad) {
        if (m_.config.kind == ModelKind::Lstm)
            backward_lstm(dlogits, grad);
        else
            backward_linear(dlogits, grad);
    }

private:
    Eigen::Map<Mat<S>> grad_of(S* grad, const TensorInfo& t) const { return {grad + t.offset, t.rows, t.cols}; }

    Mat<S> forward_linear() {
        const int D = m_.config.input_dim;
        flat_.resize(static_cast<Eigen::Index>(T_) * D, B_);
        for (int b = 0; b < B_; ++b) {
            const auto& x = *xs_[static_cast<std::size_t>(b)];
            for (int t = 0; t < T_; ++t)
                for (int j = 0; j < D; ++j) flat_(t * D + j, b) = static_cast<S>(x(t, j));
        }
        Mat<S> z = m_.tensor("linear.w") * flat_;
        z.colwise() += m_.tensor("linear.b").col(0);
        return z;
    }

    void backward_linear(const Mat<S>& dz, S* grad) {
        grad_of(grad, m_.layout.at("linear.w")).noalias() += dz * flat_.transpose();
        grad_of(grad, m_.layout.at("linear.b")).col(0) += dz.rowwise().sum();
    }

    Mat<S> forward_lstm() {
        const int H = m_.config.hidden, L = m_.config.layers, D = m_.config.input_dim;
        const Eigen::Index TB = static_cast<Eigen::Index>(T_) * B_;
        layers_.assign(static_cast<std::size_t>(L), {});

        auto& in0 = layers_[0].input;
        in0.resize(D, TB);
        for (int b = 0; b < B_; ++b) {
            const auto& x = *xs_[static_cast<std::size_t>(b)];
            for (int t = 0; t < T_; ++t) in0.col(t * B_ + b) = x.row(t).transpose().template cast<S>();
        }

        for (int l = 0; l < L; ++l) {
            auto& layer = layers_[static_cast<std::size_t>(l)];
            if (l > 0) {
                const auto& prev = layers_[static_cast<std::size_t>(l - 1)];
                layer.input.resize(2 * H, TB);
                layer.input.topRows(H) = prev.dir[0].h;
                layer.input.bottomRows(H) = prev.dir[1].h;
                if (dropout_ > 0.0) {
                    layer.mask.resize(2 * H, TB);
                    for (int b = 0; b < B_; ++b) {
                        const auto mk = dropout_mask(seed_, slot0_ + static_cast<std::size_t>(b), l - 1, 2 * H, T_,
                                                     dropout_);
                        for (int t = 0; t < T_; ++t) layer.mask.col(t * B_ + b) = mk.col(t).template cast<S>();
                    }
                    layer.input.array() *= layer.mask.array();
                }
            }
            for (int d = 0; d < 2; ++d) forward_direction(l, d);
        }

        const auto& top = layers_.back();
        const int bwd_t = m_.config.head == HeadReadout::BothTerminal ? 0 : T_ - 1;
        head_in_.resize(2 * H, B_);
        head_in_.topRows(H) = top.dir[0].h.middleCols((T_ - 1) * B_, B_);
        head_in_.bottomRows(H) = top.dir[1].h.middleCols(bwd_t * B_, B_);
        Mat<S> z = m_.tensor("head.w") * head_in_;
        z.colwise() += m_.tensor("head.b").col(0);
        return z;
    }

    void forward_direction(int l, int d) {
        const int H = m_.config.hidden;
        const auto base = m_.layout.lstm_index(l, d);
        const auto& tensors = m_.layout.tensors();
        const auto wx = m_.tensor(tensors[base]);
        const auto wh = m_.tensor(tensors[base + 1]);
        const auto bias = m_.tensor(tensors[base + 2]);

        auto& layer = layers_[static_cast<std::size_t>(l)];
        auto& st = layer.dir[d];
        const Eigen::Index TB = static_cast<Eigen::Index>(T_) * B_;
        Mat<S> pre = wx * layer.input;
        pre.colwise() += bias.col(0);
        st.act.resize(4 * H, TB);
        st.c.resize(H, TB);
        st.h.resize(H, TB);

        Mat<S> h_prev = Mat<S>::Zero(H, B_), c_prev = Mat<S>::Zero(H, B_);
        Mat<S> z(4 * H, B_);
        for (int s = 0; s < T_; ++s) {
            const int t = d == 0 ? s : T_ - 1 - s;
            z.noalias() = wh * h_prev;
            z += pre.middleCols(t * B_, B_);
            auto a = st.act.middleCols(t * B_, B_);
            a.topRows(H) = sigmoid<S>(z.topRows(H));
            a.middleRows(H, H) = sigmoid<S>(z.middleRows(H, H));
            a.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh();
            a.bottomRows(H) = sigmoid<S>(z.bottomRows(H));
            auto c = st.c.middleCols(t * B_, B_);
            c = a.middleRows(H, H).cwiseProduct(c_prev) + a.topRows(H).cwiseProduct(a.middleRows(2 * H, H));
            st.h.middleCols(t * B_, B_) = a.bottomRows(H).cwiseProduct(Mat<S>(c.array().tanh()));
            h_prev = st.h.middleCols(t * B_, B_);
            c_prev = c;
        }
    }

    void backward_lstm(const Mat<S>& dz, S* grad) {
        const int H = m_.config.hidden, L = m_.config.layers;
        const Eigen::Index TB = static_cast<Eigen::Index>(T_) * B_;

        grad_of(grad, m_.layout.at("head.w")).noalias() += dz * head_in_.transpose();
        grad_of(grad, m_.layout.at("head.b")).col(0) += dz.rowwise().sum();
        const Mat<S> dhead = m_.tensor("head.w").transpose() * dz;

        Mat<S> dh[2] = {Mat<S>::Zero(H, TB), Mat<S>::Zero(H, TB)};
        const int bwd_t = m_.config.head == HeadReadout::BothTerminal ? 0 : T_ - 1;
        dh[0].middleCols((T_ - 1) * B_, B_) = dhead.topRows(H);
        dh[1].middleCols(bwd_t * B_, B_) = dhead.bottomRows(H);

        for (int l = L - 1; l >= 0; --l) {
            auto& layer = layers_[static_cast<std::size_t>(l)];
            Mat<S> din = Mat<S>::Zero(layer.input.rows(), TB);
            for (int d = 0; d < 2; ++d) backward_direction(l, d, dh[d], din, grad);
            if (l == 0) break;
            if (layer.mask.size() > 0) din.array() *= layer.mask.array();
            dh[0] = din.topRows(H);
            dh[1] = din.bottomRows(H);
        }
    }

    void backward_direction(int l, int d, const Mat<S>& dh_out, Mat<S>& din, S* grad) {
        const int H = m_.config.hidden;
        const auto base = m_.layout.lstm_index(l, d);
        const auto& tensors = m_.layout.tensors();
        const auto wx = m_.tensor(tensors[base]);
        const auto wh = m_.tensor(tensors[base + 1]);
        const auto& layer = layers_[static_cast<std::size_t>(l)];
        const auto& st = layer.dir[d];
        const Eigen::Index TB = static_cast<Eigen::Index>(T_) * B_;

        Mat<S> dpre(4 * H, TB);
        Mat<S> h_prev_all = Mat<S>::Zero(H, TB);
        Mat<S> dh_next = Mat<S>::Zero(H, B_), dc_next = Mat<S>::Zero(H, B_);
        const Mat<S> zero = Mat<S>::Zero(H, B_);
        for (int s = T_ - 1; s >= 0; --s) {
            const int t = d == 0 ? s : T_ - 1 - s;
            const int tp = d == 0 ? t - 1 : t + 1;
            const auto a = st.act.middleCols(t * B_, B_);
            const auto i = a.topRows(H).array();
            const auto f = a.middleRows(H, H).array();
            const auto g = a.middleRows(2 * H, H).array();
            const auto o = a.bottomRows(H).array();
            const Mat<S> c_prev = s > 0 ? Mat<S>(st.c.middleCols(tp * B_, B_)) : zero;
            if (s > 0) h_prev_all.middleCols(t * B_, B_) = st.h.middleCols(tp * B_, B_);

            const Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic> tc = st.c.middleCols(t * B_, B_).array().tanh();
            const Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic> dhv =
                dh_out.middleCols(t * B_, B_).array() + dh_next.array();
            const Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic> dc =
                dhv * o * (S(1) - tc.square()) + dc_next.array();

            auto dz = dpre.middleCols(t * B_, B_);
            dz.topRows(H) = (dc * g * i * (S(1) - i)).matrix();
            dz.middleRows(H, H) = (dc * c_prev.array() * f * (S(1) - f)).matrix();
            dz.middleRows(2 * H, H) = (dc * i * (S(1) - g.square())).matrix();
            dz.bottomRows(H) = (dhv * tc * o * (S(1) - o)).matrix();

            dc_next = (dc * f).matrix();
            dh_next.noalias() = wh.transpose() * dz;
        }

        grad_of(grad, tensors[base]).noalias() += dpre * layer.input.transpose();
        grad_of(grad, tensors[base + 1]).noalias() += dpre * h_prev_all.transpose();
        grad_of(grad, tensors[base + 2]).col(0) += dpre.rowwise().sum();
        din.noalias() += wx.transpose() * dpre;
    }

    const Model<S>& m_;
    std::span<const Eigen::MatrixXd* const> xs_;
    std::size_t slot0_;
    double dropout_;
    std::uint64_t seed_;
    int B_ = 0, T_ = 0;

    std::vector<LayerState<S>> layers_;
    Mat<S> head_in_;
    Mat<S> flat_;
};

template <class S>
void check_inputs(const Model<S>& m, std::span<const Eigen::MatrixXd* const> xs) {
    if (xs.empty()) throw ConfigError("empty batch");
    const auto T = xs.front()->rows();
    if (T < 1) throw ConfigError("sequences need at least one timestep");
    for (const auto* x : xs) {
        if (x->rows() != T) throw ConfigError("sequences in a batch must share a length");
        if (x->cols() != m.config.input_dim)
            throw ConfigError("model expects " + std::to_string(m.config.input_dim) + " features, got " +
                              std::to_string(x->cols()));
    }
    if (m.config.kind == ModelKind::Linear && T != m.config.timesteps)
        throw ConfigError("linear model expects " + std::to_string(m.config.timesteps) + " timesteps, got " +
                          std::to_string(T));
    if (m.data.size() != m.layout.total()) throw ConfigError("parameter vector does not match its layout");
}

/// Sum over the chunk of -log softmax(z)[target], and the unscaled dlogits.
template <class S>
double cross_entropy(const Mat<S>& z, std::span<const Example> ex, Mat<S>* dz) {
    double total = 0.0;
    if (dz) dz->resize(2, z.cols());
    for (Eigen::Index b = 0; b < z.cols(); ++b) {
        const double z0 = static_cast<double>(z(0, b)), z1 = static_cast<double>(z(1, b));
        const double mx = std::max(z0, z1);
        const double lse = mx + std::log(std::exp(z0 - mx) + std::exp(z1 - mx));
        const int y = ex[static_cast<std::size_t>(b)].target;
        total += lse - (y == 0 ? z0 : z1);
        if (dz) {
            (*dz)(0, b) = static_cast<S>(std::exp(z0 - lse) - (y == 0 ? 1.0 : 0.0));
            (*dz)(1, b) = static_cast<S>(std::exp(z1 - lse) - (y == 1 ? 1.0 : 0.0));
        }
    }
    return total;
}

}  // namespace

template <class S>
double loss_and_grad(const Model<S>& model, std::span<const Example> batch, double dropout, std::uint64_t dropout_seed,
                     std::type_identity_t<std::vector<S>>* grad, Exec exec) {
    if (batch.empty()) throw ConfigError("loss_and_grad on an empty batch");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    std::vector<const Eigen::MatrixXd*> xs(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!batch[i].x) throw ConfigError("example without features");
        if (batch[i].target != kStableClass && batch[i].target != kNotStableClass)
            throw ConfigError("target class must be 0 or 1");
        xs[i] = batch[i].x;
    }
    check_inputs(model, xs);

    const std::size_t n = batch.size();
    const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
    const S scale = static_cast<S>(1.0 / static_cast<double>(n));
    const std::size_t P = model.layout.total();
    const std::size_t slots =
        exec == Exec::Parallel ? std::min<std::size_t>(chunks, static_cast<std::size_t>(std::max(1, max_threads()))) : 1;

    std::vector<double> chunk_loss(chunks, 0.0);
    // Eigen-allocated so every buffer has the same alignment: small products
    // pick packet or scalar paths by destination alignment, which would
    // otherwise make the rounding depend on where the allocator put us.
    std::vector<Eigen::Matrix<S, Eigen::Dynamic, 1>> buffers(grad ? slots : 0);
    if (grad) grad->assign(P, S(0));

    for (std::size_t wave = 0; wave < chunks; wave += slots) {
        const std::size_t width = std::min(slots, chunks - wave);
        for_each_index(exec, width, [&](std::size_t k) {
            const std::size_t c = wave + k;
            const std::size_t lo = c * kChunkSize, hi = std::min(n, lo + kChunkSize);
            const std::span<const Eigen::MatrixXd* const> cx(xs.data() + lo, hi - lo);
            ChunkPass<S> pass(model, cx, lo, model.config.kind == ModelKind::Lstm ? dropout : 0.0, dropout_seed);
            const Mat<S> z = pass.forward();
            Mat<S> dz;
            chunk_loss[c] = cross_entropy<S>(z, batch.subspan(lo, hi - lo), grad ? &dz : nullptr);
            if (!std::isfinite(chunk_loss[c]))
                throw NumericError("non-finite loss in examples " + std::to_string(lo) + ".." + std::to_string(hi - 1));
            if (grad) {
                buffers[k].setZero(static_cast<Eigen::Index>(P));
                dz *= scale;
                pass.backward(dz, buffers[k].data());
            }
        });
        if (grad)
            for (std::size_t k = 0; k < width; ++k)
                for (std::size_t p = 0; p < P; ++p) (*grad)[p] += buffers[k][static_cast<Eigen::Index>(p)];
    }

    double total = 0.0;
    for (double v : chunk_loss) total += v;
    const double loss = total / static_cast<double>(n);
    if (grad)
        for (S g : *grad)
            if (!std::isfinite(g)) throw NumericError("non-finite gradient");
    return loss;
}

template <class S>
Eigen::MatrixXd logits(const Model<S>& model, std::span<const Eigen::MatrixXd* const> xs, Exec exec) {
    check_inputs(model, xs);
    const std::size_t n = xs.size();
    const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
    Eigen::MatrixXd out(2, static_cast<Eigen::Index>(n));
    for_each_index(exec, chunks, [&](std::size_t c) {
        const std::size_t lo = c * kChunkSize, hi = std::min(n, lo + kChunkSize);
        ChunkPass<S> pass(model, xs.subspan(lo, hi - lo), lo, 0.0, 0);
        out.middleCols(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo)) =
            pass.forward().template cast<double>();
    });
    return out;
}

template <class S>
Eigen::Vector2d forward(const Model<S>& model, const Eigen::MatrixXd& x, double dropout, std::uint64_t dropout_seed) {
    const Eigen::MatrixXd* ptr = &x;
    const std::span<const Eigen::MatrixXd* const> xs(&ptr, 1);
    check_inputs(model, xs);
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    ChunkPass<S> pass(model, xs, 0, model.config.kind == ModelKind::Lstm ? dropout : 0.0, dropout_seed);
    return pass.forward().template cast<double>().col(0);
}

template <class S>
std::vector<BinaryLabel> predict(const Model<S>& model, std::span<const Eigen::MatrixXd* const> xs, Exec exec) {
    const auto z = logits(model, xs, exec);
    std::vector<BinaryLabel> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = predict_label(z.col(static_cast<Eigen::Index>(i)));
    return out;
}

template <class S>
BinaryLabel predict(const Model<S>& model, const Eigen::MatrixXd& x) {
    return predict_label(forward(model, x));
}

#define HOLDSTAB_INSTANTIATE(S)                                                                                 \
    template double loss_and_grad<S>(const Model<S>&, std::span<const Example>, double, std::uint64_t,         \
                                     std::vector<S>*, Exec);                                                    \
    template Eigen::MatrixXd logits<S>(const Model<S>&, std::span<const Eigen::MatrixXd* const>, Exec);        \
    template Eigen::Vector2d forward<S>(const Model<S>&, const Eigen::MatrixXd&, double, std::uint64_t);       \
    template std::vector<BinaryLabel> predict<S>(const Model<S>&, std::span<const Eigen::MatrixXd* const>, Exec); \
    template BinaryLabel predict<S>(const Model<S>&, const Eigen::MatrixXd&);

HOLDSTAB_INSTANTIATE(float)
HOLDSTAB_INSTANTIATE(double)

#undef HOLDSTAB_INSTANTIATE

}  // namespace holdstab
