#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "emotionbox/event_codec.hpp"
#include "emotionbox/features.hpp"
#include "emotionbox/nn/checkpoint.hpp"
#include "emotionbox/rng.hpp"

namespace ebox::generation {

struct SamplerConfig {
    double threshold = 0.9;
    double temperature = 1.0;
    int max_events = 600;
    std::uint64_t seed = 0;
};

void validate(const SamplerConfig& cfg);

// Index of the largest logit; ties go to the lowest index.
template <typename T>
int argmax(std::span<const T> logits);

// Draws u in [0, 1). If u > threshold (or threshold is 0) the argmax is
// returned; otherwise an index is drawn from softmax(logits / temperature).
template <typename T>
int sample_next(std::span<const T> logits, const SamplerConfig& cfg, Rng& rng);

// The fixed conditioning row used for a whole generated piece: the emotion
// preset row for FEATURES checkpoints, the label one-hot for LABELS.
std::vector<float> conditioning_for(nn::ConditioningMode mode, features::Emotion emotion, int tonic = 0);

// Observes the conditioning fed at every model step.
using StepHook = std::function<void(int step, std::span<const float> conditioning)>;

// First event uniform over the 88 NOTE_ON events, then autoregressive
// sampling with the hidden state carried across the whole piece.
codec::EventSequence generate(const nn::Checkpoint& ckpt, features::Emotion emotion, const SamplerConfig& cfg,
                              int tonic = 0, const StepHook& hook = {});

std::vector<std::uint8_t> generate_midi(const nn::Checkpoint& ckpt, features::Emotion emotion,
                                        const SamplerConfig& cfg, int tonic = 0);

void generate_to_midi(const nn::Checkpoint& ckpt, features::Emotion emotion, const SamplerConfig& cfg,
                      const std::filesystem::path& out_path, int tonic = 0);

}  // namespace ebox::generation
