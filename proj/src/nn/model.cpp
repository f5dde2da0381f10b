#include "emotionbox/nn/model.hpp"

#include <cmath>
#include <string>

#include "emotionbox/errors.hpp"
#include "emotionbox/nn/kernels.hpp"
#include "emotionbox/rng.hpp"

namespace ebox::nn {

void validate(const ModelConfig& cfg) {
    if (cfg.vocab <= 0 || cfg.conditioning_dim < 0 || cfg.fc_dim <= 0 || cfg.hidden <= 0 || cfg.layers <= 0) {
        throw ShapeMismatch("model dimensions must be positive");
    }
    if (!(cfg.dropout >= 0.0f && cfg.dropout < 1.0f)) {
        throw ShapeMismatch("dropout must lie in [0, 1)");
    }
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelConfig& cfg) {
    validate(cfg);
    ModelParams p;
    p.config = cfg;
    p.embedding.resize(cfg.vocab, cfg.vocab);
    p.fc_in_w.resize(cfg.vocab + cfg.conditioning_dim, cfg.fc_dim);
    p.fc_in_b.resize(1, cfg.fc_dim);
    p.gru.resize(static_cast<std::size_t>(cfg.layers));
    for (int l = 0; l < cfg.layers; ++l) {
        auto& g = p.gru[static_cast<std::size_t>(l)];
        const int in = cfg.layer_input_dim(l);
        for (auto* w : {&g.w_r, &g.w_z, &g.w_h}) w->resize(in, cfg.hidden);
        for (auto* u : {&g.u_r, &g.u_z, &g.u_h}) u->resize(cfg.hidden, cfg.hidden);
        for (auto* b : {&g.b_r, &g.b_z, &g.b_h}) b->resize(1, cfg.hidden);
    }
    p.fc_out_w.resize(cfg.hidden, cfg.vocab);
    p.fc_out_b.resize(1, cfg.vocab);
    return p;
}

template <typename T>
std::vector<Matrix<T>*> ModelParams<T>::tensors() {
    std::vector<Matrix<T>*> out{&embedding, &fc_in_w, &fc_in_b};
    for (auto& g : gru) {
        out.insert(out.end(), {&g.w_r, &g.w_z, &g.w_h, &g.u_r, &g.u_z, &g.u_h, &g.b_r, &g.b_z, &g.b_h});
    }
    out.insert(out.end(), {&fc_out_w, &fc_out_b});
    return out;
}

template <typename T>
std::vector<const Matrix<T>*> ModelParams<T>::tensors() const {
    auto mut = const_cast<ModelParams*>(this)->tensors();
    return {mut.begin(), mut.end()};
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto* t : tensors()) n += t->size();
    return n;
}

template <typename T>
void ModelParams<T>::set_zero() {
    for (auto* t : tensors()) t->fill(T{});
}

std::size_t parameter_count(const ModelConfig& cfg) {
    validate(cfg);
    const auto v = static_cast<std::size_t>(cfg.vocab);
    const auto c = static_cast<std::size_t>(cfg.conditioning_dim);
    const auto f = static_cast<std::size_t>(cfg.fc_dim);
    const auto h = static_cast<std::size_t>(cfg.hidden);
    std::size_t n = v * v + (v + c) * f + f;
    for (int l = 0; l < cfg.layers; ++l) {
        const auto in = static_cast<std::size_t>(cfg.layer_input_dim(l));
        n += 3 * (in * h + h * h + h);
    }
    return n + h * v + v;
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
    auto p = ModelParams<T>::zeros(cfg);
    Rng rng(seed);
    auto fill = [&](Matrix<T>& m, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& x : m.data) x = static_cast<T>(rng.uniform(-bound, bound));
    };
    fill(p.embedding, cfg.vocab);
    fill(p.fc_in_w, cfg.vocab + cfg.conditioning_dim);
    fill(p.fc_in_b, cfg.vocab + cfg.conditioning_dim);
    for (int l = 0; l < cfg.layers; ++l) {
        auto& g = p.gru[static_cast<std::size_t>(l)];
        const int in = cfg.layer_input_dim(l);
        for (auto* w : {&g.w_r, &g.w_z, &g.w_h}) fill(*w, in);
        for (auto* u : {&g.u_r, &g.u_z, &g.u_h}) fill(*u, cfg.hidden);
        for (auto* b : {&g.b_r, &g.b_z, &g.b_h}) fill(*b, cfg.hidden);
    }
    fill(p.fc_out_w, cfg.hidden);
    fill(p.fc_out_b, cfg.hidden);
    return p;
}

template <typename U, typename T>
ModelParams<U> convert_params(const ModelParams<T>& p) {
    auto out = ModelParams<U>::zeros(p.config);
    auto src = p.tensors();
    auto dst = out.tensors();
    for (std::size_t i = 0; i < src.size(); ++i) {
        for (std::size_t j = 0; j < src[i]->size(); ++j) dst[i]->data[j] = static_cast<U>(src[i]->data[j]);
    }
    return out;
}

namespace {

template <typename T>
inline T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
std::span<const T> cspan(const std::vector<T>& v) {
    return std::span<const T>(v);
}

template <typename T>
std::span<const T> cspan(const Matrix<T>& m) {
    return std::span<const T>(m.data);
}

template <typename T>
std::span<T> mspan(Matrix<T>& m) {
    return std::span<T>(m.data);
}

void check_batch(const ModelConfig& cfg, const SequenceBatch& batch, bool need_targets) {
    if (batch.batch_size <= 0 || batch.steps <= 0) throw ShapeMismatch("batch must hold at least one step");
    const auto n = static_cast<std::size_t>(batch.batch_size) * static_cast<std::size_t>(batch.steps);
    if (batch.inputs.size() != n) throw ShapeMismatch("input index count does not match batch shape");
    if (batch.conditioning.size() != n * static_cast<std::size_t>(cfg.conditioning_dim)) {
        throw ShapeMismatch("conditioning size does not match batch shape");
    }
    for (int i : batch.inputs) {
        if (i < 0 || i >= cfg.vocab) throw IndexOutOfRange("event index " + std::to_string(i) + " out of range");
    }
    if (need_targets) {
        if (batch.targets.size() != n) throw ShapeMismatch("target count does not match batch shape");
        for (int i : batch.targets) {
            if (i < 0 || i >= cfg.vocab) throw IndexOutOfRange("target index " + std::to_string(i) + " out of range");
        }
    }
}

}  // namespace

template <typename T>
void gru_cell(std::span<const T> x, std::span<const T> h_prev, const GruLayerParams<T>& p, std::span<T> h_out) {
    const int in = p.w_r.rows;
    const int hidden = p.w_r.cols;
    if (static_cast<int>(x.size()) != in || static_cast<int>(h_prev.size()) != hidden ||
        static_cast<int>(h_out.size()) != hidden) {
        throw ShapeMismatch("gru_cell shape mismatch");
    }
    const auto hs = static_cast<std::size_t>(hidden);
    std::vector<T> r(hs, T{}), z(hs, T{}), c(hs, T{}), rh(hs);
    // Same accumulation order as the batched forward pass.
    kernels::gemm_nn<T>(1, hidden, in, x, cspan(p.w_r), r);
    kernels::gemm_nn<T>(1, hidden, in, x, cspan(p.w_z), z);
    kernels::gemm_nn<T>(1, hidden, in, x, cspan(p.w_h), c);
    kernels::add_row_bias<T>(1, hidden, r, cspan(p.b_r));
    kernels::add_row_bias<T>(1, hidden, z, cspan(p.b_z));
    kernels::add_row_bias<T>(1, hidden, c, cspan(p.b_h));
    kernels::gemm_nn<T>(1, hidden, hidden, h_prev, cspan(p.u_r), r);
    kernels::gemm_nn<T>(1, hidden, hidden, h_prev, cspan(p.u_z), z);
    for (std::size_t j = 0; j < hs; ++j) {
        r[j] = sigmoid(r[j]);
        z[j] = sigmoid(z[j]);
        rh[j] = r[j] * h_prev[j];
    }
    kernels::gemm_nn<T>(1, hidden, hidden, cspan(rh), cspan(p.u_h), c);
    for (std::size_t j = 0; j < hs; ++j) {
        const T cand = std::tanh(c[j]);
        h_out[j] = (T(1) - z[j]) * h_prev[j] + z[j] * cand;
    }
}

template <typename T>
void forward(const ModelParams<T>& params, const SequenceBatch& batch, bool dropout_active, std::uint64_t seed,
             Tape<T>& tape) {
    const ModelConfig& cfg = params.config;
    check_batch(cfg, batch, false);
    const int B = batch.batch_size;
    const int S = batch.steps;
    const int N = B * S;
    const int V = cfg.vocab;
    const int C = cfg.conditioning_dim;
    const int F = cfg.fc_dim;
    const int H = cfg.hidden;

    tape.batch = B;
    tape.steps = S;
    tape.input_index.assign(static_cast<std::size_t>(N), 0);
    tape.x0.resize(N, V + C);
    for (int t = 0; t < S; ++t) {
        for (int b = 0; b < B; ++b) {
            const int row = t * B + b;
            const auto src = static_cast<std::size_t>(b) * static_cast<std::size_t>(S) + static_cast<std::size_t>(t);
            const int idx = batch.inputs[src];
            tape.input_index[static_cast<std::size_t>(row)] = idx;
            auto dst = tape.x0.row(row);
            auto emb = params.embedding.row(idx);
            std::copy(emb.begin(), emb.end(), dst.begin());
            for (int c = 0; c < C; ++c) {
                dst[static_cast<std::size_t>(V + c)] =
                    static_cast<T>(batch.conditioning[src * static_cast<std::size_t>(C) + static_cast<std::size_t>(c)]);
            }
        }
    }

    tape.fc_pre.resize(N, F);
    kernels::gemm_nn<T>(N, F, V + C, cspan(tape.x0), cspan(params.fc_in_w), mspan(tape.fc_pre));
    kernels::add_row_bias<T>(N, F, mspan(tape.fc_pre), cspan(params.fc_in_b));
    tape.fc_act = tape.fc_pre;
    for (auto& v : tape.fc_act.data) v = v > T{} ? v : T{};

    tape.layers.resize(static_cast<std::size_t>(cfg.layers));
    const T keep_scale = T(1) / (T(1) - static_cast<T>(cfg.dropout));
    for (int l = 0; l < cfg.layers; ++l) {
        auto& L = tape.layers[static_cast<std::size_t>(l)];
        const auto& g = params.gru[static_cast<std::size_t>(l)];
        const int in = cfg.layer_input_dim(l);
        if (l == 0) {
            L.input = tape.fc_act;
        } else {
            const auto& prev = tape.layers[static_cast<std::size_t>(l - 1)];
            L.input = prev.h;
            if (!prev.mask.data.empty()) {
                for (std::size_t i = 0; i < L.input.size(); ++i) L.input.data[i] *= prev.mask.data[i];
            }
        }
        for (auto* m : {&L.r, &L.z, &L.cand, &L.rh, &L.h}) m->resize(N, H);

        kernels::gemm_nn<T>(N, H, in, cspan(L.input), cspan(g.w_r), mspan(L.r));
        kernels::gemm_nn<T>(N, H, in, cspan(L.input), cspan(g.w_z), mspan(L.z));
        kernels::gemm_nn<T>(N, H, in, cspan(L.input), cspan(g.w_h), mspan(L.cand));
        kernels::add_row_bias<T>(N, H, mspan(L.r), cspan(g.b_r));
        kernels::add_row_bias<T>(N, H, mspan(L.z), cspan(g.b_z));
        kernels::add_row_bias<T>(N, H, mspan(L.cand), cspan(g.b_h));

        for (int t = 0; t < S; ++t) {
            auto r = L.r.rows_span(t * B, B);
            auto z = L.z.rows_span(t * B, B);
            auto cand = L.cand.rows_span(t * B, B);
            auto rh = L.rh.rows_span(t * B, B);
            auto h = L.h.rows_span(t * B, B);
            std::span<const T> hp;
            if (t > 0) {
                hp = std::as_const(L.h).rows_span((t - 1) * B, B);
                kernels::gemm_nn<T>(B, H, H, hp, cspan(g.u_r), r);
                kernels::gemm_nn<T>(B, H, H, hp, cspan(g.u_z), z);
            }
            for (std::size_t i = 0; i < r.size(); ++i) {
                r[i] = sigmoid(r[i]);
                z[i] = sigmoid(z[i]);
                rh[i] = t > 0 ? r[i] * hp[i] : T{};
            }
            if (t > 0) kernels::gemm_nn<T>(B, H, H, std::span<const T>(rh), cspan(g.u_h), cand);
            for (std::size_t i = 0; i < cand.size(); ++i) {
                cand[i] = std::tanh(cand[i]);
                const T prev = t > 0 ? hp[i] : T{};
                h[i] = (T(1) - z[i]) * prev + z[i] * cand[i];
            }
        }

        L.mask = Matrix<T>();
        if (dropout_active && cfg.dropout > 0.0f && l + 1 < cfg.layers) {
            L.mask.resize(N, H);
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(l)));
            const double p = cfg.dropout;
            for (auto& m : L.mask.data) m = rng.uniform() >= p ? keep_scale : T{};
        }
    }

    const auto& top = tape.layers.back().h;
    tape.logits.resize(N, V);
    kernels::gemm_nn<T>(N, V, H, cspan(top), cspan(params.fc_out_w), mspan(tape.logits));
    kernels::add_row_bias<T>(N, V, mspan(tape.logits), cspan(params.fc_out_b));
}

template <typename T>
Matrix<T> forward(const ModelParams<T>& params, std::span<const int> event_indices,
                  std::span<const float> conditioning, bool dropout_active, std::uint64_t seed) {
    SequenceBatch batch;
    batch.batch_size = 1;
    batch.steps = static_cast<int>(event_indices.size());
    batch.inputs.assign(event_indices.begin(), event_indices.end());
    batch.conditioning.assign(conditioning.begin(), conditioning.end());
    Tape<T> tape;
    forward(params, batch, dropout_active, seed, tape);
    return std::move(tape.logits);
}

template <typename T>
double cross_entropy(const Matrix<T>& logits, std::span<const int> targets) {
    if (static_cast<int>(targets.size()) != logits.rows || logits.rows == 0) {
        throw ShapeMismatch("cross_entropy: target count does not match logits rows");
    }
    double total = 0.0;
    for (int r = 0; r < logits.rows; ++r) {
        const int target = targets[static_cast<std::size_t>(r)];
        if (target < 0 || target >= logits.cols) throw IndexOutOfRange("target index out of range");
        auto row = logits.row(r);
        double mx = row[0];
        for (T v : row) mx = std::max(mx, static_cast<double>(v));
        double sum = 0.0;
        for (T v : row) sum += std::exp(static_cast<double>(v) - mx);
        total += mx + std::log(sum) - static_cast<double>(row[static_cast<std::size_t>(target)]);
    }
    return total / logits.rows;
}

template <typename T>
double backward(const ModelParams<T>& params, const SequenceBatch& batch, const Tape<T>& tape, ModelParams<T>& grads) {
    const ModelConfig& cfg = params.config;
    check_batch(cfg, batch, true);
    const int B = tape.batch;
    const int S = tape.steps;
    if (B != batch.batch_size || S != batch.steps) throw ShapeMismatch("tape does not belong to this batch");
    const int N = B * S;
    const int V = cfg.vocab;
    const int C = cfg.conditioning_dim;
    const int F = cfg.fc_dim;
    const int H = cfg.hidden;

    if (!(grads.config == cfg) || grads.gru.size() != params.gru.size()) grads = ModelParams<T>::zeros(cfg);
    else grads.set_zero();

    // Softmax minus one-hot, scaled for the mean.
    std::vector<int> targets(static_cast<std::size_t>(N));
    for (int t = 0; t < S; ++t) {
        for (int b = 0; b < B; ++b) {
            targets[static_cast<std::size_t>(t * B + b)] =
                batch.targets[static_cast<std::size_t>(b) * static_cast<std::size_t>(S) + static_cast<std::size_t>(t)];
        }
    }
    Matrix<T> dlogits(N, V);
    double loss = 0.0;
    const double inv_n = 1.0 / N;
    for (int r = 0; r < N; ++r) {
        auto row = tape.logits.row(r);
        auto out = dlogits.row(r);
        double mx = row[0];
        for (T v : row) mx = std::max(mx, static_cast<double>(v));
        double sum = 0.0;
        for (T v : row) sum += std::exp(static_cast<double>(v) - mx);
        const double log_sum = std::log(sum);
        const int target = targets[static_cast<std::size_t>(r)];
        loss += mx + log_sum - static_cast<double>(row[static_cast<std::size_t>(target)]);
        for (int j = 0; j < V; ++j) {
            double p = std::exp(static_cast<double>(row[static_cast<std::size_t>(j)]) - mx - log_sum);
            if (j == target) p -= 1.0;
            out[static_cast<std::size_t>(j)] = static_cast<T>(p * inv_n);
        }
    }
    loss *= inv_n;

    const auto& top = tape.layers.back().h;
    kernels::gemm_tn<T>(N, V, H, cspan(top), cspan(dlogits), mspan(grads.fc_out_w));
    kernels::add_column_sums<T>(N, V, cspan(dlogits), mspan(grads.fc_out_b));
    Matrix<T> dh_above(N, H);
    kernels::gemm_nt<T>(N, V, H, cspan(dlogits), cspan(params.fc_out_w), mspan(dh_above));

    Matrix<T> dinput;
    const auto hs = static_cast<std::size_t>(B) * static_cast<std::size_t>(H);
    std::vector<T> carry(hs), dhp(hs), drh(hs), zeros(hs, T{});
    for (int l = cfg.layers - 1; l >= 0; --l) {
        const auto& L = tape.layers[static_cast<std::size_t>(l)];
        const auto& g = params.gru[static_cast<std::size_t>(l)];
        auto& gg = grads.gru[static_cast<std::size_t>(l)];
        const int in = cfg.layer_input_dim(l);

        Matrix<T> da_r(N, H), da_z(N, H), da_h(N, H);
        std::fill(carry.begin(), carry.end(), T{});
        for (int t = S - 1; t >= 0; --t) {
            auto r = L.r.rows_span(t * B, B);
            auto z = L.z.rows_span(t * B, B);
            auto cand = L.cand.rows_span(t * B, B);
            auto up = dh_above.rows_span(t * B, B);
            std::span<const T> hp = t > 0 ? L.h.rows_span((t - 1) * B, B) : std::span<const T>(zeros);
            auto dar = da_r.rows_span(t * B, B);
            auto daz = da_z.rows_span(t * B, B);
            auto dah = da_h.rows_span(t * B, B);

            for (std::size_t i = 0; i < hs; ++i) {
                const T dh = up[i] + carry[i];
                const T dcand = dh * z[i];
                const T dz = dh * (cand[i] - hp[i]);
                dhp[i] = dh * (T(1) - z[i]);
                dah[i] = dcand * (T(1) - cand[i] * cand[i]);
                daz[i] = dz * z[i] * (T(1) - z[i]);
            }
            if (t > 0) {
                std::fill(drh.begin(), drh.end(), T{});
                kernels::gemm_nt<T>(B, H, H, std::span<const T>(dah), cspan(g.u_h), drh);
                for (std::size_t i = 0; i < hs; ++i) {
                    const T dr = drh[i] * hp[i];
                    dhp[i] += drh[i] * r[i];
                    dar[i] = dr * r[i] * (T(1) - r[i]);
                }
                kernels::gemm_tn<T>(B, H, H, L.rh.rows_span(t * B, B), std::span<const T>(dah), mspan(gg.u_h));
                kernels::gemm_tn<T>(B, H, H, hp, std::span<const T>(daz), mspan(gg.u_z));
                kernels::gemm_tn<T>(B, H, H, hp, std::span<const T>(dar), mspan(gg.u_r));
                kernels::gemm_nt<T>(B, H, H, std::span<const T>(daz), cspan(g.u_z), dhp);
                kernels::gemm_nt<T>(B, H, H, std::span<const T>(dar), cspan(g.u_r), dhp);
            }
            carry.swap(dhp);
        }

        kernels::gemm_tn<T>(N, H, in, cspan(L.input), cspan(da_r), mspan(gg.w_r));
        kernels::gemm_tn<T>(N, H, in, cspan(L.input), cspan(da_z), mspan(gg.w_z));
        kernels::gemm_tn<T>(N, H, in, cspan(L.input), cspan(da_h), mspan(gg.w_h));
        kernels::add_column_sums<T>(N, H, cspan(da_r), mspan(gg.b_r));
        kernels::add_column_sums<T>(N, H, cspan(da_z), mspan(gg.b_z));
        kernels::add_column_sums<T>(N, H, cspan(da_h), mspan(gg.b_h));

        dinput.resize(N, in);
        kernels::gemm_nt<T>(N, H, in, cspan(da_r), cspan(g.w_r), mspan(dinput));
        kernels::gemm_nt<T>(N, H, in, cspan(da_z), cspan(g.w_z), mspan(dinput));
        kernels::gemm_nt<T>(N, H, in, cspan(da_h), cspan(g.w_h), mspan(dinput));

        if (l > 0) {
            const auto& mask = tape.layers[static_cast<std::size_t>(l - 1)].mask;
            if (!mask.data.empty()) {
                for (std::size_t i = 0; i < dinput.size(); ++i) dinput.data[i] *= mask.data[i];
            }
            std::swap(dh_above, dinput);
        }
    }

    // dinput now holds the gradient w.r.t. the ReLU output.
    for (std::size_t i = 0; i < dinput.size(); ++i) {
        if (!(tape.fc_pre.data[i] > T{})) dinput.data[i] = T{};
    }
    kernels::gemm_tn<T>(N, F, V + C, cspan(tape.x0), cspan(dinput), mspan(grads.fc_in_w));
    kernels::add_column_sums<T>(N, F, cspan(dinput), mspan(grads.fc_in_b));
    Matrix<T> dx0(N, V + C);
    kernels::gemm_nt<T>(N, F, V + C, cspan(dinput), cspan(params.fc_in_w), mspan(dx0));
    for (int r = 0; r < N; ++r) {
        auto src = dx0.row(r);
        auto dst = grads.embedding.row(tape.input_index[static_cast<std::size_t>(r)]);
        for (int j = 0; j < V; ++j) dst[static_cast<std::size_t>(j)] += src[static_cast<std::size_t>(j)];
    }
    return loss;
}

template <typename T>
double loss_and_gradients(const ModelParams<T>& params, const SequenceBatch& batch, bool dropout_active,
                          std::uint64_t seed, ModelParams<T>& grads) {
    Tape<T> tape;
    forward(params, batch, dropout_active, seed, tape);
    return backward(params, batch, tape, grads);
}

template <typename T>
Stepper<T>::Stepper(const ModelParams<T>& params) : params_(&params) {
    reset();
}

template <typename T>
void Stepper<T>::reset() {
    const auto& cfg = params_->config;
    hidden_.assign(static_cast<std::size_t>(cfg.layers), std::vector<T>(static_cast<std::size_t>(cfg.hidden), T{}));
    x0_.assign(static_cast<std::size_t>(cfg.vocab + cfg.conditioning_dim), T{});
    fc_.assign(static_cast<std::size_t>(cfg.fc_dim), T{});
    next_.assign(static_cast<std::size_t>(cfg.hidden), T{});
    logits_.assign(static_cast<std::size_t>(cfg.vocab), T{});
}

template <typename T>
std::span<const T> Stepper<T>::step(int event_index, std::span<const float> conditioning) {
    const auto& p = *params_;
    const auto& cfg = p.config;
    if (event_index < 0 || event_index >= cfg.vocab) throw IndexOutOfRange("event index out of range");
    if (static_cast<int>(conditioning.size()) != cfg.conditioning_dim) throw ShapeMismatch("conditioning width");

    auto emb = p.embedding.row(event_index);
    std::copy(emb.begin(), emb.end(), x0_.begin());
    for (std::size_t c = 0; c < conditioning.size(); ++c) x0_[static_cast<std::size_t>(cfg.vocab) + c] = static_cast<T>(conditioning[c]);

    std::fill(fc_.begin(), fc_.end(), T{});
    kernels::gemm_nn<T>(1, cfg.fc_dim, cfg.vocab + cfg.conditioning_dim, cspan(x0_), cspan(p.fc_in_w), fc_);
    kernels::add_row_bias<T>(1, cfg.fc_dim, fc_, cspan(p.fc_in_b));
    for (auto& v : fc_) v = v > T{} ? v : T{};

    std::span<const T> input = fc_;
    for (int l = 0; l < cfg.layers; ++l) {
        auto& h = hidden_[static_cast<std::size_t>(l)];
        gru_cell<T>(input, h, p.gru[static_cast<std::size_t>(l)], next_);
        h.swap(next_);
        input = h;
    }

    std::fill(logits_.begin(), logits_.end(), T{});
    kernels::gemm_nn<T>(1, cfg.vocab, cfg.hidden, input, cspan(p.fc_out_w), logits_);
    kernels::add_row_bias<T>(1, cfg.vocab, logits_, cspan(p.fc_out_b));
    return logits_;
}

#define EBOX_INSTANTIATE_MODEL(T)                                                                                 \
    template struct ModelParams<T>;                                                                               \
    template ModelParams<T> init_params<T>(const ModelConfig&, std::uint64_t);                                   \
    template void gru_cell<T>(std::span<const T>, std::span<const T>, const GruLayerParams<T>&, std::span<T>);    \
    template void forward<T>(const ModelParams<T>&, const SequenceBatch&, bool, std::uint64_t, Tape<T>&);         \
    template Matrix<T> forward<T>(const ModelParams<T>&, std::span<const int>, std::span<const float>, bool,      \
                                  std::uint64_t);                                                                 \
    template double cross_entropy<T>(const Matrix<T>&, std::span<const int>);                                     \
    template double backward<T>(const ModelParams<T>&, const SequenceBatch&, const Tape<T>&, ModelParams<T>&);    \
    template double loss_and_gradients<T>(const ModelParams<T>&, const SequenceBatch&, bool, std::uint64_t,      \
                                          ModelParams<T>&);                                                       \
    template class Stepper<T>;

EBOX_INSTANTIATE_MODEL(float)
EBOX_INSTANTIATE_MODEL(double)

#undef EBOX_INSTANTIATE_MODEL

template ModelParams<double> convert_params<double, float>(const ModelParams<float>&);
template ModelParams<float> convert_params<float, double>(const ModelParams<double>&);
template ModelParams<float> convert_params<float, float>(const ModelParams<float>&);
template ModelParams<double> convert_params<double, double>(const ModelParams<double>&);

}  // namespace ebox::nn
