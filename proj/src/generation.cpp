#include "emotionbox/generation.hpp"

#include <cmath>

#include "emotionbox/errors.hpp"
#include "emotionbox/file_util.hpp"
#include "emotionbox/nn/model.hpp"
#include "emotionbox/training.hpp"

namespace ebox::generation {

void validate(const SamplerConfig& cfg) {
    if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0)) throw Error("threshold must lie in [0, 1]");
    if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature)) throw Error("temperature must be positive");
    if (cfg.max_events < 1) throw Error("length must be at least 1 event");
}

template <typename T>
int argmax(std::span<const T> logits) {
    int best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

template <typename T>
int sample_next(std::span<const T> logits, const SamplerConfig& cfg, Rng& rng) {
    const double u = rng.uniform();
    if (cfg.threshold <= 0.0 || u > cfg.threshold) return argmax(logits);

    double mx = -INFINITY;
    for (T v : logits) mx = std::max(mx, static_cast<double>(v) / cfg.temperature);
    std::vector<double> w(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        w[i] = std::exp(static_cast<double>(logits[i]) / cfg.temperature - mx);
        sum += w[i];
    }
    const double target = rng.uniform() * sum;
    double acc = 0.0;
    int last_positive = argmax(logits);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) continue;
        acc += w[i];
        last_positive = static_cast<int>(i);
        if (target < acc) return static_cast<int>(i);
    }
    return last_positive;
}

std::vector<float> conditioning_for(nn::ConditioningMode mode, features::Emotion emotion, int tonic) {
    if (mode == nn::ConditioningMode::Labels) {
        const auto row = training::label_row(emotion);
        return {row.begin(), row.end()};
    }
    const auto preset = features::emotion_preset(emotion, tonic);
    const auto row = features::conditioning_row(preset.histogram, preset.density);
    return {row.begin(), row.end()};
}

codec::EventSequence generate(const nn::Checkpoint& ckpt, features::Emotion emotion, const SamplerConfig& cfg,
                              int tonic, const StepHook& hook) {
    validate(cfg);
    const auto cond = conditioning_for(ckpt.mode, emotion, tonic);
    if (static_cast<int>(cond.size()) != ckpt.params.config.conditioning_dim) {
        throw ShapeMismatch("checkpoint conditioning width does not match its mode");
    }

    Rng rng(cfg.seed);
    std::vector<int> seq;
    seq.reserve(static_cast<std::size_t>(cfg.max_events));
    seq.push_back(codec::kNoteOnBase + static_cast<int>(rng.below(codec::kNumPitches)));

    nn::Stepper<float> stepper(ckpt.params);
    while (static_cast<int>(seq.size()) < cfg.max_events) {
        if (hook) hook(static_cast<int>(seq.size()) - 1, cond);
        const auto logits = stepper.step(seq.back(), cond);
        seq.push_back(sample_next(logits, cfg, rng));
    }
    return codec::from_indices(seq);
}

std::vector<std::uint8_t> generate_midi(const nn::Checkpoint& ckpt, features::Emotion emotion,
                                        const SamplerConfig& cfg, int tonic) {
    return midi::write_midi(codec::decode(generate(ckpt, emotion, cfg, tonic)));
}

void generate_to_midi(const nn::Checkpoint& ckpt, features::Emotion emotion, const SamplerConfig& cfg,
                      const std::filesystem::path& out_path, int tonic) {
    write_file_atomic(out_path, generate_midi(ckpt, emotion, cfg, tonic));
}

template int argmax<float>(std::span<const float>);
template int argmax<double>(std::span<const double>);
template int sample_next<float>(std::span<const float>, const SamplerConfig&, Rng&);
template int sample_next<double>(std::span<const double>, const SamplerConfig&, Rng&);

}  // namespace ebox::generation
