#pragma once

#include <cstdint>

#include "emotionbox/nn/model.hpp"

namespace ebox::nn {

struct AdamHyper {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
    AdamHyper hyper;
    std::uint64_t step = 0;
    ModelParams<T> m;  // first moment, mirrors the parameters
    ModelParams<T> v;  // second moment
};

template <typename T>
AdamState<T> make_adam_state(const ModelConfig& cfg, AdamHyper hyper = {});

// Bias-corrected Adam. Throws ShapeMismatch when shapes do not mirror.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state);

}  // namespace ebox::nn
