#include "emotionbox/toy_corpus.hpp"

#include <cstdio>

#include "emotionbox/rng.hpp"

namespace ebox::toy {

midi::NoteList make_piece(const ToyPieceSpec& spec, std::uint64_t seed) {
    const auto preset = features::emotion_preset(spec.emotion, spec.tonic);
    std::vector<int> pool;  // pitches repeated by histogram weight
    for (int p = spec.low_pitch; p <= spec.high_pitch; ++p) {
        const int w = static_cast<int>(preset.histogram[static_cast<std::size_t>(p % 12)]);
        for (int i = 0; i < w; ++i) pool.push_back(p);
    }

    Rng rng(seed);
    const double ioi = features::kWindowSeconds / preset.density;
    const bool fast = preset.density >= features::kFastDensity;
    const int velocity = fast ? 84 : 48;

    midi::NoteList list;
    list.source_name = std::string(features::emotion_name(spec.emotion));
    for (double t = 0.0; t + ioi <= spec.duration_seconds + 1e-9; t += ioi) {
        const int pitch = pool[rng.below(pool.size())];
        const double hold = ioi * (fast ? rng.uniform(0.55, 0.85) : rng.uniform(0.5, 0.8));
        list.notes.push_back({pitch, t, t + hold, velocity});
    }
    midi::sort_notes(list.notes);
    return list;
}

std::vector<std::filesystem::path> write_corpus(const std::filesystem::path& dir, const ToyCorpusSpec& spec,
                                                std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> out;
    for (auto e : spec.emotions) {
        const bool fast = features::emotion_preset(e).density >= features::kFastDensity;
        for (int i = 0; i < spec.pieces_per_emotion; ++i) {
            ToyPieceSpec ps;
            ps.emotion = e;
            ps.duration_seconds = fast ? spec.fast_duration_seconds : spec.slow_duration_seconds;
            const auto notes = make_piece(ps, derive_seed(seed, static_cast<std::uint64_t>(e), static_cast<std::uint64_t>(i)));
            char name[64];
            std::snprintf(name, sizeof(name), "%s_%02d.mid", std::string(features::emotion_name(e)).c_str(), i);
            const auto path = dir / name;
            midi::write_midi_file(path, notes);
            out.push_back(path);
        }
    }
    return out;
}

}  // namespace ebox::toy
