#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "emotionbox/features.hpp"
#include "emotionbox/midi_io.hpp"

namespace ebox::toy {

// Synthetic piece that follows an emotion preset strictly: every pitch class
// is drawn from the preset histogram (so only in-scale pitches occur) and
// onsets are evenly spaced so each 2 s window holds `density` onsets.
struct ToyPieceSpec {
    features::Emotion emotion = features::Emotion::Happy;
    int tonic = 0;
    double duration_seconds = 30.0;
    int low_pitch = 55;
    int high_pitch = 84;
};

midi::NoteList make_piece(const ToyPieceSpec& spec, std::uint64_t seed);

struct ToyCorpusSpec {
    int pieces_per_emotion = 10;
    std::vector<features::Emotion> emotions{features::Emotion::Happy, features::Emotion::Sad};
    // Slow pieces need longer durations to reach a 200-event window.
    double fast_duration_seconds = 30.0;
    double slow_duration_seconds = 92.0;
};

// Writes "<emotion>_<nn>.mid" files into `dir` (created if missing).
// Returns the written paths in order.
std::vector<std::filesystem::path> write_corpus(const std::filesystem::path& dir, const ToyCorpusSpec& spec,
                                                std::uint64_t seed);

}  // namespace ebox::toy
