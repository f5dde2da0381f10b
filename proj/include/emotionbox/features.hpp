#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "emotionbox/event_codec.hpp"
#include "emotionbox/midi_io.hpp"

namespace ebox::features {

inline constexpr int kPitchClasses = 12;
inline constexpr int kDensityBins = 12;
inline constexpr int kConditioningDim = kPitchClasses + kDensityBins + 1;  // 25
inline constexpr double kWindowSeconds = 2.0;

// Weights indexed C=0 .. B=11.
using PitchHistogram = std::array<double, kPitchClasses>;

// histogram (12) | density one-hot (12) | trailing zero (1)
using ConditioningRow = std::array<float, kConditioningDim>;

// Russell quadrants. The order is also the label one-hot order.
enum class Emotion { Happy = 0, Tensional = 1, Sad = 2, Peaceful = 3 };
inline constexpr std::array<Emotion, 4> kAllEmotions{Emotion::Happy, Emotion::Tensional, Emotion::Sad,
                                                     Emotion::Peaceful};

std::string_view emotion_name(Emotion e);
std::optional<Emotion> parse_emotion(std::string_view name);

inline constexpr PitchHistogram kMajorTemplate{2, 0, 1, 0, 1, 2, 0, 2, 0, 1, 0, 1};
inline constexpr PitchHistogram kMinorTemplate{2, 0, 1, 1, 0, 2, 0, 2, 1, 0, 1, 0};
inline constexpr int kFastDensity = 5;
inline constexpr int kSlowDensity = 1;

// Raw onset counts per pitch class over [t, t + window).
PitchHistogram pitch_histogram(const midi::NoteList& notes, double t, double window = kWindowSeconds);

// Divides by the sum. All-zero input is returned unchanged.
PitchHistogram normalize(const PitchHistogram& h);

// Number of onsets in [t, t + window).
int note_density(const midi::NoteList& notes, double t, double window = kWindowSeconds);

// Rotates the template right by k: out[(i + k) % 12] = in[i].
PitchHistogram rotate(const PitchHistogram& h, int k);

struct EmotionPreset {
    PitchHistogram histogram;
    int density;
};

EmotionPreset emotion_preset(Emotion e, int tonic_pitch_class = 0);

// Normalizes the histogram and one-hot encodes density clamped to [0, 11].
ConditioningRow conditioning_row(const PitchHistogram& h, int density);

// One row per event, evaluated at the event's clock time.
std::vector<ConditioningRow> conditioning_track(const midi::NoteList& notes, const codec::EventSequence& events);

}  // namespace ebox::features
