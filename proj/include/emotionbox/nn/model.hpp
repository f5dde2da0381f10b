#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "emotionbox/nn/tensor.hpp"

namespace ebox::nn {

// Embedding (vocab×vocab) → concat conditioning → affine + ReLU (fc_dim) →
// stacked GRU (hidden) with dropout between layers → affine to vocab logits.
struct ModelConfig {
    int vocab = 240;
    int conditioning_dim = 25;
    int fc_dim = 512;
    int hidden = 512;
    int layers = 3;
    float dropout = 0.3f;

    bool operator==(const ModelConfig&) const = default;

    int layer_input_dim(int layer) const { return layer == 0 ? fc_dim : hidden; }
};

void validate(const ModelConfig& cfg);

template <typename T>
struct GruLayerParams {
    Matrix<T> w_r, w_z, w_h;  // input_dim × hidden
    Matrix<T> u_r, u_z, u_h;  // hidden × hidden
    Matrix<T> b_r, b_z, b_h;  // 1 × hidden
};

template <typename T>
struct ModelParams {
    ModelConfig config;
    Matrix<T> embedding;  // vocab × vocab
    Matrix<T> fc_in_w;    // (vocab + conditioning_dim) × fc_dim
    Matrix<T> fc_in_b;    // 1 × fc_dim
    std::vector<GruLayerParams<T>> gru;
    Matrix<T> fc_out_w;   // hidden × vocab
    Matrix<T> fc_out_b;   // 1 × vocab

    // All-zero parameters with the shapes implied by cfg.
    static ModelParams zeros(const ModelConfig& cfg);

    // Every tensor in the fixed serialization order: embedding, fc_in_w,
    // fc_in_b, then per GRU layer w_r w_z w_h u_r u_z u_h b_r b_z b_h, then
    // fc_out_w, fc_out_b.
    std::vector<Matrix<T>*> tensors();
    std::vector<const Matrix<T>*> tensors() const;

    std::size_t parameter_count() const;
    void set_zero();
};

std::size_t parameter_count(const ModelConfig& cfg);

// Uniform in ±1/sqrt(fan_in) per tensor, where fan_in is the input width of
// the layer the tensor belongs to (vocab for the embedding table).
template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, std::uint64_t seed);

template <typename U, typename T>
ModelParams<U> convert_params(const ModelParams<T>& p);

// A batch of equal-length sequences, stored sequence-major: element (b, t)
// lives at b * steps + t, conditioning row (b, t) at (b * steps + t) * cdim.
struct SequenceBatch {
    int batch_size = 0;
    int steps = 0;
    std::vector<int> inputs;
    std::vector<int> targets;
    std::vector<float> conditioning;
};

// Everything forward() records for backward(). Rows are time-major:
// row t * batch + b.
template <typename T>
struct Tape {
    int batch = 0;
    int steps = 0;
    std::vector<int> input_index;  // time-major
    Matrix<T> x0;                  // N × (vocab + cdim)
    Matrix<T> fc_pre;              // N × fc_dim
    Matrix<T> fc_act;              // N × fc_dim
    struct Layer {
        Matrix<T> input;  // N × in (after dropout of the previous layer)
        Matrix<T> r, z, cand, rh, h;
        Matrix<T> mask;   // N × hidden, empty when dropout is off or last layer
    };
    std::vector<Layer> layers;
    Matrix<T> logits;  // N × vocab
};

// Standard gated recurrent unit:
//   r = σ(W_r x + U_r h + b_r), z = σ(W_z x + U_z h + b_z),
//   h̃ = tanh(W_h x + U_h (r ⊙ h) + b_h), h' = (1 − z) ⊙ h + z ⊙ h̃
template <typename T>
void gru_cell(std::span<const T> x, std::span<const T> h_prev, const GruLayerParams<T>& p, std::span<T> h_out);

// Dropout masks are drawn from `seed`; identical seeds give identical masks.
// Throws IndexOutOfRange or ShapeMismatch.
template <typename T>
void forward(const ModelParams<T>& params, const SequenceBatch& batch, bool dropout_active, std::uint64_t seed,
             Tape<T>& tape);

// Single-sequence convenience: returns steps × vocab logits.
template <typename T>
Matrix<T> forward(const ModelParams<T>& params, std::span<const int> event_indices,
                  std::span<const float> conditioning, bool dropout_active, std::uint64_t seed);

// Mean over rows of −log softmax(logits)[target], accumulated in double.
template <typename T>
double cross_entropy(const Matrix<T>& logits, std::span<const int> targets);

// Reverse-mode gradients of the mean cross-entropy over the whole batch.
// `grads` is resized and overwritten. Returns the loss.
template <typename T>
double backward(const ModelParams<T>& params, const SequenceBatch& batch, const Tape<T>& tape, ModelParams<T>& grads);

// Forward with dropout (when active) followed by backward.
template <typename T>
double loss_and_gradients(const ModelParams<T>& params, const SequenceBatch& batch, bool dropout_active,
                          std::uint64_t seed, ModelParams<T>& grads);

// Incremental inference for one sequence: carries hidden state across calls,
// dropout off.
template <typename T>
class Stepper {
public:
    explicit Stepper(const ModelParams<T>& params);

    void reset();
    // Logits for the event that follows `event_index`.
    std::span<const T> step(int event_index, std::span<const float> conditioning);

private:
    const ModelParams<T>* params_;
    std::vector<std::vector<T>> hidden_;
    std::vector<T> x0_, fc_, next_, logits_;
};

}  // namespace ebox::nn
