#include "holdstab/model/reference.hpp"

#include <array>
#include <cmath>
#include <string>

#include "holdstab/core/error.hpp"

namespace holdstab::reference {

namespace {

struct View {
    const double* p;
    int rows;
    double operator()(int r, int c) const { return p[static_cast<std::size_t>(c) * rows + r]; }
};

struct GradView {
    double* p;
    int rows;
    double& operator()(int r, int c) const { return p[static_cast<std::size_t>(c) * rows + r]; }
};

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Per-direction activations, index t*H + k.
struct DirTrace {
    std::vector<double> i, f, g, o, c, h;
};

struct LayerTrace {
    int in_dim = 0;
    std::vector<double> input;  // T*in_dim after dropout
    Eigen::MatrixXd mask;       // empty when no dropout
    std::array<DirTrace, 2> dir;
};

struct Trace {
    std::vector<LayerTrace> layers;
    std::vector<double> head_in;
    double z[2] = {0.0, 0.0};
};

Trace run(const Model<double>& m, const Eigen::MatrixXd& x, double p, std::uint64_t seed, std::size_t slot) {
    const auto& cfg = m.config;
    const int T = static_cast<int>(x.rows());
    Trace tr;
    if (cfg.kind == ModelKind::Linear) {
        const auto& w = m.layout.at("linear.w");
        const auto& b = m.layout.at("linear.b");
        const View W{m.data.data() + w.offset, w.rows};
        const int D = cfg.input_dim;
        for (int c = 0; c < 2; ++c) {
            double z = m.data[b.offset + static_cast<std::size_t>(c)];
            for (int t = 0; t < T; ++t)
                for (int j = 0; j < D; ++j) z += W(c, t * D + j) * x(t, j);
            tr.z[c] = z;
        }
        return tr;
    }

    const int H = cfg.hidden;
    tr.layers.resize(static_cast<std::size_t>(cfg.layers));
    for (int l = 0; l < cfg.layers; ++l) {
        auto& L = tr.layers[static_cast<std::size_t>(l)];
        L.in_dim = l == 0 ? cfg.input_dim : 2 * H;
        L.input.assign(static_cast<std::size_t>(T * L.in_dim), 0.0);
        if (l == 0) {
            for (int t = 0; t < T; ++t)
                for (int j = 0; j < L.in_dim; ++j) L.input[static_cast<std::size_t>(t * L.in_dim + j)] = x(t, j);
        } else {
            const auto& prev = tr.layers[static_cast<std::size_t>(l - 1)];
            if (p > 0.0) L.mask = dropout_mask(seed, slot, l - 1, 2 * H, T, p);
            for (int t = 0; t < T; ++t)
                for (int k = 0; k < 2 * H; ++k) {
                    const double h = k < H ? prev.dir[0].h[static_cast<std::size_t>(t * H + k)]
                                           : prev.dir[1].h[static_cast<std::size_t>(t * H + k - H)];
                    L.input[static_cast<std::size_t>(t * 2 * H + k)] = L.mask.size() ? h * L.mask(k, t) : h;
                }
        }
        for (int d = 0; d < 2; ++d) {
            const auto base = m.layout.lstm_index(l, d);
            const auto& tw = m.layout.tensors()[base];
            const auto& th = m.layout.tensors()[base + 1];
            const auto& tb = m.layout.tensors()[base + 2];
            const View Wx{m.data.data() + tw.offset, tw.rows};
            const View Wh{m.data.data() + th.offset, th.rows};
            const double* bias = m.data.data() + tb.offset;
            auto& D = L.dir[static_cast<std::size_t>(d)];
            for (auto* v : {&D.i, &D.f, &D.g, &D.o, &D.c, &D.h}) v->assign(static_cast<std::size_t>(T * H), 0.0);
            for (int s = 0; s < T; ++s) {
                const int t = d == 0 ? s : T - 1 - s;
                const int tp = d == 0 ? t - 1 : t + 1;
                for (int k = 0; k < H; ++k) {
                    double z[4];
                    for (int gate = 0; gate < 4; ++gate) {
                        const int r = gate * H + k;
                        double acc = bias[r];
                        for (int j = 0; j < L.in_dim; ++j)
                            acc += Wx(r, j) * L.input[static_cast<std::size_t>(t * L.in_dim + j)];
                        if (s > 0)
                            for (int q = 0; q < H; ++q) acc += Wh(r, q) * D.h[static_cast<std::size_t>(tp * H + q)];
                        z[gate] = acc;
                    }
                    const auto at = static_cast<std::size_t>(t * H + k);
                    D.i[at] = sig(z[0]);
                    D.f[at] = sig(z[1]);
                    D.g[at] = std::tanh(z[2]);
                    D.o[at] = sig(z[3]);
                    const double cp = s > 0 ? D.c[static_cast<std::size_t>(tp * H + k)] : 0.0;
                    D.c[at] = D.f[at] * cp + D.i[at] * D.g[at];
                }
                // h of this step is written only after every unit has read h of the previous step.
                for (int k = 0; k < H; ++k) {
                    const auto at = static_cast<std::size_t>(t * H + k);
                    D.h[at] = D.o[at] * std::tanh(D.c[at]);
                }
            }
        }
    }

    const auto& top = tr.layers.back();
    const int bwd_t = cfg.head == HeadReadout::BothTerminal ? 0 : T - 1;
    tr.head_in.assign(static_cast<std::size_t>(2 * H), 0.0);
    for (int k = 0; k < H; ++k) {
        tr.head_in[static_cast<std::size_t>(k)] = top.dir[0].h[static_cast<std::size_t>((T - 1) * H + k)];
        tr.head_in[static_cast<std::size_t>(H + k)] = top.dir[1].h[static_cast<std::size_t>(bwd_t * H + k)];
    }
    const auto& hw = m.layout.at("head.w");
    const auto& hb = m.layout.at("head.b");
    const View W{m.data.data() + hw.offset, hw.rows};
    for (int c = 0; c < 2; ++c) {
        double z = m.data[hb.offset + static_cast<std::size_t>(c)];
        for (int k = 0; k < 2 * H; ++k) z += W(c, k) * tr.head_in[static_cast<std::size_t>(k)];
        tr.z[c] = z;
    }
    return tr;
}

void backprop(const Model<double>& m, const Eigen::MatrixXd& x, const Trace& tr, const double dz[2],
              std::vector<double>& grad) {
    const auto& cfg = m.config;
    const int T = static_cast<int>(x.rows());
    if (cfg.kind == ModelKind::Linear) {
        const auto& w = m.layout.at("linear.w");
        const auto& b = m.layout.at("linear.b");
        const GradView gW{grad.data() + w.offset, w.rows};
        const int D = cfg.input_dim;
        for (int c = 0; c < 2; ++c) {
            grad[b.offset + static_cast<std::size_t>(c)] += dz[c];
            for (int t = 0; t < T; ++t)
                for (int j = 0; j < D; ++j) gW(c, t * D + j) += dz[c] * x(t, j);
        }
        return;
    }

    const int H = cfg.hidden;
    const auto& hw = m.layout.at("head.w");
    const auto& hb = m.layout.at("head.b");
    const View W{m.data.data() + hw.offset, hw.rows};
    const GradView gW{grad.data() + hw.offset, hw.rows};
    std::vector<double> dhin(static_cast<std::size_t>(2 * H), 0.0);
    for (int c = 0; c < 2; ++c) {
        grad[hb.offset + static_cast<std::size_t>(c)] += dz[c];
        for (int k = 0; k < 2 * H; ++k) {
            gW(c, k) += dz[c] * tr.head_in[static_cast<std::size_t>(k)];
            dhin[static_cast<std::size_t>(k)] += W(c, k) * dz[c];
        }
    }

    std::array<std::vector<double>, 2> dh;
    for (auto& v : dh) v.assign(static_cast<std::size_t>(T * H), 0.0);
    const int bwd_t = cfg.head == HeadReadout::BothTerminal ? 0 : T - 1;
    for (int k = 0; k < H; ++k) {
        dh[0][static_cast<std::size_t>((T - 1) * H + k)] = dhin[static_cast<std::size_t>(k)];
        dh[1][static_cast<std::size_t>(bwd_t * H + k)] = dhin[static_cast<std::size_t>(H + k)];
    }

    for (int l = cfg.layers - 1; l >= 0; --l) {
        const auto& L = tr.layers[static_cast<std::size_t>(l)];
        std::vector<double> din(static_cast<std::size_t>(T * L.in_dim), 0.0);
        for (int d = 0; d < 2; ++d) {
            const auto base = m.layout.lstm_index(l, d);
            const auto& tw = m.layout.tensors()[base];
            const auto& th = m.layout.tensors()[base + 1];
            const auto& tb = m.layout.tensors()[base + 2];
            const View Wx{m.data.data() + tw.offset, tw.rows};
            const View Wh{m.data.data() + th.offset, th.rows};
            const GradView gWx{grad.data() + tw.offset, tw.rows};
            const GradView gWh{grad.data() + th.offset, th.rows};
            double* gb = grad.data() + tb.offset;
            const auto& D = L.dir[static_cast<std::size_t>(d)];

            std::vector<double> dh_next(static_cast<std::size_t>(H), 0.0), dc_next(static_cast<std::size_t>(H), 0.0);
            std::vector<double> z(static_cast<std::size_t>(4 * H));
            for (int s = T - 1; s >= 0; --s) {
                const int t = d == 0 ? s : T - 1 - s;
                const int tp = d == 0 ? t - 1 : t + 1;
                for (int k = 0; k < H; ++k) {
                    const auto at = static_cast<std::size_t>(t * H + k);
                    const double i = D.i[at], f = D.f[at], g = D.g[at], o = D.o[at];
                    const double tc = std::tanh(D.c[at]);
                    const double dhv = dh[static_cast<std::size_t>(d)][at] + dh_next[static_cast<std::size_t>(k)];
                    const double dc = dhv * o * (1.0 - tc * tc) + dc_next[static_cast<std::size_t>(k)];
                    const double cp = s > 0 ? D.c[static_cast<std::size_t>(tp * H + k)] : 0.0;
                    z[static_cast<std::size_t>(k)] = dc * g * i * (1.0 - i);
                    z[static_cast<std::size_t>(H + k)] = dc * cp * f * (1.0 - f);
                    z[static_cast<std::size_t>(2 * H + k)] = dc * i * (1.0 - g * g);
                    z[static_cast<std::size_t>(3 * H + k)] = dhv * tc * o * (1.0 - o);
                    dc_next[static_cast<std::size_t>(k)] = dc * f;
                }
                for (int r = 0; r < 4 * H; ++r) {
                    const double zr = z[static_cast<std::size_t>(r)];
                    gb[r] += zr;
                    for (int j = 0; j < L.in_dim; ++j) {
                        gWx(r, j) += zr * L.input[static_cast<std::size_t>(t * L.in_dim + j)];
                        din[static_cast<std::size_t>(t * L.in_dim + j)] += Wx(r, j) * zr;
                    }
                    if (s > 0)
                        for (int q = 0; q < H; ++q) gWh(r, q) += zr * D.h[static_cast<std::size_t>(tp * H + q)];
                }
                for (int q = 0; q < H; ++q) {
                    double acc = 0.0;
                    for (int r = 0; r < 4 * H; ++r) acc += Wh(r, q) * z[static_cast<std::size_t>(r)];
                    dh_next[static_cast<std::size_t>(q)] = acc;
                }
            }
        }
        if (l == 0) break;
        for (int t = 0; t < T; ++t)
            for (int k = 0; k < 2 * H; ++k) {
                double v = din[static_cast<std::size_t>(t * 2 * H + k)];
                if (L.mask.size()) v *= L.mask(k, t);
                if (k < H)
                    dh[0][static_cast<std::size_t>(t * H + k)] = v;
                else
                    dh[1][static_cast<std::size_t>(t * H + k - H)] = v;
            }
    }
}

void check(const Model<double>& m, const Eigen::MatrixXd& x) {
    if (x.cols() != m.config.input_dim || x.rows() < 1) throw ConfigError("reference: input shape mismatch");
    if (m.config.kind == ModelKind::Linear && x.rows() != m.config.timesteps)
        throw ConfigError("reference: timestep mismatch");
}

}  // namespace

Eigen::Vector2d forward(const Model<double>& model, const Eigen::MatrixXd& x, double dropout,
                        std::uint64_t dropout_seed, std::size_t slot) {
    check(model, x);
    const double p = model.config.kind == ModelKind::Lstm ? dropout : 0.0;
    const auto tr = run(model, x, p, dropout_seed, slot);
    return {tr.z[0], tr.z[1]};
}

double loss_and_grad(const Model<double>& model, std::span<const Example> batch, double dropout,
                     std::uint64_t dropout_seed, std::vector<double>* grad) {
    if (batch.empty()) throw ConfigError("reference: empty batch");
    if (grad) grad->assign(model.layout.total(), 0.0);
    const double p = model.config.kind == ModelKind::Lstm ? dropout : 0.0;
    const double n = static_cast<double>(batch.size());
    double total = 0.0;
    for (std::size_t e = 0; e < batch.size(); ++e) {
        const auto& x = *batch[e].x;
        check(model, x);
        const auto tr = run(model, x, p, dropout_seed, e);
        const double mx = std::max(tr.z[0], tr.z[1]);
        const double lse = mx + std::log(std::exp(tr.z[0] - mx) + std::exp(tr.z[1] - mx));
        const int y = batch[e].target;
        total += lse - tr.z[y];
        if (grad) {
            const double dz[2] = {(std::exp(tr.z[0] - lse) - (y == 0 ? 1.0 : 0.0)) / n,
                                  (std::exp(tr.z[1] - lse) - (y == 1 ? 1.0 : 0.0)) / n};
            backprop(model, x, tr, dz, *grad);
        }
    }
    const double loss = total / n;
    if (!std::isfinite(loss)) throw NumericError("reference: non-finite loss");
    return loss;
}

}  // namespace holdstab::reference
