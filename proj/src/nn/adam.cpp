#include "emotionbox/nn/adam.hpp"

#include <cmath>

#include "emotionbox/errors.hpp"

namespace ebox::nn {

template <typename T>
AdamState<T> make_adam_state(const ModelConfig& cfg, AdamHyper hyper) {
    return {hyper, 0, ModelParams<T>::zeros(cfg), ModelParams<T>::zeros(cfg)};
}

template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state) {
    auto p = params.tensors();
    auto g = grads.tensors();
    auto m = state.m.tensors();
    auto v = state.v.tensors();
    if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
        throw ShapeMismatch("adam: tensor lists do not mirror the parameters");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p[i]->same_shape(*g[i]) || !p[i]->same_shape(*m[i]) || !p[i]->same_shape(*v[i])) {
            throw ShapeMismatch("adam: tensor " + std::to_string(i) + " shape mismatch");
        }
    }

    ++state.step;
    const auto& hp = state.hyper;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(hp.beta1, t);
    const double bc2 = 1.0 - std::pow(hp.beta2, t);
    const T b1 = static_cast<T>(hp.beta1);
    const T b2 = static_cast<T>(hp.beta2);

    for (std::size_t i = 0; i < p.size(); ++i) {
        T* pd = p[i]->data.data();
        const T* gd = g[i]->data.data();
        T* md = m[i]->data.data();
        T* vd = v[i]->data.data();
        const auto n = static_cast<long long>(p[i]->size());
#pragma omp parallel for schedule(static) if (n > (1 << 16))
        for (long long j = 0; j < n; ++j) {
            const T grad = gd[j];
            md[j] = b1 * md[j] + (T(1) - b1) * grad;
            vd[j] = b2 * vd[j] + (T(1) - b2) * grad * grad;
            const double mhat = static_cast<double>(md[j]) / bc1;
            const double vhat = static_cast<double>(vd[j]) / bc2;
            pd[j] -= static_cast<T>(hp.lr * mhat / (std::sqrt(vhat) + hp.epsilon));
        }
    }
}

template AdamState<float> make_adam_state<float>(const ModelConfig&, AdamHyper);
template AdamState<double> make_adam_state<double>(const ModelConfig&, AdamHyper);
template void adam_step<float>(ModelParams<float>&, const ModelParams<float>&, AdamState<float>&);
template void adam_step<double>(ModelParams<double>&, const ModelParams<double>&, AdamState<double>&);

}  // namespace ebox::nn
