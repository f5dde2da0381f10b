#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emotionbox/event_codec.hpp"
#include "emotionbox/features.hpp"
#include "emotionbox/generation.hpp"
#include "emotionbox/nn/checkpoint.hpp"

namespace ebox::eval {

// Pitch fields are empty when there are no notes.
struct AdherenceReport {
    std::optional<double> out_of_scale_fraction;
    double mean_density = 0.0;
    double density_abs_error = 0.0;
    std::optional<double> histogram_l1;
    int n_notes = 0;
};

inline constexpr double kDensityStepSeconds = 0.5;

// Mean onset count over 2 s windows [s, s + 2) with s = 0, 0.5, 1, ...
// while s + 2 does not pass the last note offset (at least one window).
double mean_density(const midi::NoteList& notes);

AdherenceReport adherence(const midi::NoteList& notes, const features::EmotionPreset& preset);
AdherenceReport adherence(const codec::EventSequence& seq, const features::EmotionPreset& preset);

struct ComparisonRow {
    features::Emotion emotion;
    std::string model;  // "features" or "labels"
    std::optional<double> out_of_scale_fraction;
    double mean_density = 0.0;
    double density_abs_error = 0.0;
    std::optional<double> histogram_l1;
    double n_notes = 0.0;
};

struct ComparisonTable {
    int n_samples = 0;
    std::vector<ComparisonRow> rows;  // features row then labels row, per emotion

    // Header: emotion,model,out_of_scale_fraction,mean_density,density_abs_error,histogram_l1,n_notes
    // After each emotion's two model rows comes a row with model "winner"
    // naming the better model per metric (lower error wins; n_notes has none).
    std::string to_csv() const;
};

inline constexpr const char* kComparisonHeader =
    "emotion,model,out_of_scale_fraction,mean_density,density_abs_error,histogram_l1,n_notes";

// Generates n_samples pieces per emotion and model. Sample i of an emotion
// uses the same seed for both models. Generation runs in parallel; the
// aggregation order is fixed.
ComparisonTable compare(const nn::Checkpoint& features_ckpt, const nn::Checkpoint& labels_ckpt, int n_samples,
                        const generation::SamplerConfig& cfg, int tonic = 0);

}  // namespace ebox::eval
