#pragma once

// Plain scalar re-implementation of the model forward pass and a central
// finite-difference gradient check, used as oracles for the library engine.

#include <algorithm>
#include <cmath>
#include <vector>

#include "emotionbox/nn/model.hpp"

namespace oracle {

using ebox::nn::ModelParams;
using ebox::nn::SequenceBatch;

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Logits for every (b, t), sequence-major. masks[l] (optional) is the
// time-major N × hidden dropout multiplier applied to layer l's output.
template <typename T>
std::vector<std::vector<double>> forward(const ModelParams<T>& p, const SequenceBatch& batch,
                                         const std::vector<std::vector<double>>& masks = {}) {
    const auto& c = p.config;
    const int B = batch.batch_size, S = batch.steps, V = c.vocab, C = c.conditioning_dim, F = c.fc_dim, H = c.hidden;
    std::vector<std::vector<double>> out(static_cast<std::size_t>(B * S));
    for (int b = 0; b < B; ++b) {
        std::vector<std::vector<double>> h(static_cast<std::size_t>(c.layers), std::vector<double>(static_cast<std::size_t>(H), 0.0));
        for (int t = 0; t < S; ++t) {
            const int src = b * S + t;
            const int tm = t * B + b;
            std::vector<double> x0(static_cast<std::size_t>(V + C));
            for (int i = 0; i < V; ++i) x0[static_cast<std::size_t>(i)] = p.embedding(batch.inputs[static_cast<std::size_t>(src)], i);
            for (int i = 0; i < C; ++i) x0[static_cast<std::size_t>(V + i)] = batch.conditioning[static_cast<std::size_t>(src * C + i)];
            std::vector<double> x(static_cast<std::size_t>(F));
            for (int j = 0; j < F; ++j) {
                double s = p.fc_in_b(0, j);
                for (int i = 0; i < V + C; ++i) s += x0[static_cast<std::size_t>(i)] * p.fc_in_w(i, j);
                x[static_cast<std::size_t>(j)] = std::max(0.0, s);
            }
            for (int l = 0; l < c.layers; ++l) {
                const auto& g = p.gru[static_cast<std::size_t>(l)];
                const int in = static_cast<int>(x.size());
                auto& hp = h[static_cast<std::size_t>(l)];
                std::vector<double> r(static_cast<std::size_t>(H)), z(static_cast<std::size_t>(H)), hn(static_cast<std::size_t>(H));
                for (int j = 0; j < H; ++j) {
                    double sr = g.b_r(0, j), sz = g.b_z(0, j);
                    for (int i = 0; i < in; ++i) {
                        sr += x[static_cast<std::size_t>(i)] * g.w_r(i, j);
                        sz += x[static_cast<std::size_t>(i)] * g.w_z(i, j);
                    }
                    for (int i = 0; i < H; ++i) {
                        sr += hp[static_cast<std::size_t>(i)] * g.u_r(i, j);
                        sz += hp[static_cast<std::size_t>(i)] * g.u_z(i, j);
                    }
                    r[static_cast<std::size_t>(j)] = sig(sr);
                    z[static_cast<std::size_t>(j)] = sig(sz);
                }
                for (int j = 0; j < H; ++j) {
                    double sh = g.b_h(0, j);
                    for (int i = 0; i < in; ++i) sh += x[static_cast<std::size_t>(i)] * g.w_h(i, j);
                    for (int i = 0; i < H; ++i) sh += r[static_cast<std::size_t>(i)] * hp[static_cast<std::size_t>(i)] * g.u_h(i, j);
                    const double zj = z[static_cast<std::size_t>(j)];
                    hn[static_cast<std::size_t>(j)] = (1.0 - zj) * hp[static_cast<std::size_t>(j)] + zj * std::tanh(sh);
                }
                hp = hn;
                x = hn;
                if (static_cast<std::size_t>(l) < masks.size() && !masks[static_cast<std::size_t>(l)].empty()) {
                    for (int j = 0; j < H; ++j) x[static_cast<std::size_t>(j)] *= masks[static_cast<std::size_t>(l)][static_cast<std::size_t>(tm * H + j)];
                }
            }
            auto& logits = out[static_cast<std::size_t>(src)];
            logits.resize(static_cast<std::size_t>(V));
            for (int v = 0; v < V; ++v) {
                double s = p.fc_out_b(0, v);
                for (int i = 0; i < H; ++i) s += x[static_cast<std::size_t>(i)] * p.fc_out_w(i, v);
                logits[static_cast<std::size_t>(v)] = s;
            }
        }
    }
    return out;
}

inline double cross_entropy(const std::vector<std::vector<double>>& logits, const std::vector<int>& targets) {
    double total = 0.0;
    for (std::size_t r = 0; r < logits.size(); ++r) {
        double z = 0.0;
        for (double v : logits[r]) z += std::exp(v);
        total += std::log(z) - logits[r][static_cast<std::size_t>(targets[r])];
    }
    return total / static_cast<double>(logits.size());
}

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

// Compares analytic gradients against central differences for every scalar
// parameter. The loss is evaluated by the library with a fixed dropout seed,
// so the mask is the same at every probe.
inline GradCheckResult grad_check(ModelParams<double> params, const SequenceBatch& batch, bool dropout,
                                  std::uint64_t seed, double step, double floor) {
    auto grads = ModelParams<double>::zeros(params.config);
    ebox::nn::loss_and_gradients(params, batch, dropout, seed, grads);
    auto loss_at = [&]() {
        ebox::nn::Tape<double> tape;
        ebox::nn::forward(params, batch, dropout, seed, tape);
        std::vector<int> tm(batch.targets.size());
        for (int t = 0; t < batch.steps; ++t) {
            for (int b = 0; b < batch.batch_size; ++b) tm[static_cast<std::size_t>(t * batch.batch_size + b)] = batch.targets[static_cast<std::size_t>(b * batch.steps + t)];
        }
        return ebox::nn::cross_entropy(tape.logits, tm);
    };
    GradCheckResult res;
    auto ps = params.tensors();
    auto gs = grads.tensors();
    for (std::size_t k = 0; k < ps.size(); ++k) {
        for (std::size_t i = 0; i < ps[k]->size(); ++i) {
            const double orig = ps[k]->data[i];
            ps[k]->data[i] = orig + step;
            const double up = loss_at();
            ps[k]->data[i] = orig - step;
            const double down = loss_at();
            ps[k]->data[i] = orig;
            const double numeric = (up - down) / (2 * step);
            const double analytic = gs[k]->data[i];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), floor});
            res.max_rel_error = std::max(res.max_rel_error, std::abs(numeric - analytic) / denom);
            ++res.checked;
        }
    }
    return res;
}

}  // namespace oracle
