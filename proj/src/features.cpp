#include "emotionbox/features.hpp"

#include <algorithm>

namespace ebox::features {

std::string_view emotion_name(Emotion e) {
    switch (e) {
        case Emotion::Happy: return "happy";
        case Emotion::Tensional: return "tensional";
        case Emotion::Sad: return "sad";
        case Emotion::Peaceful: return "peaceful";
    }
    return "?";
}

std::optional<Emotion> parse_emotion(std::string_view name) {
    for (Emotion e : kAllEmotions) {
        if (emotion_name(e) == name) return e;
    }
    return std::nullopt;
}

namespace {

// Notes are sorted by onset, so the window is a contiguous range.
template <typename Fn>
void for_each_onset_in(const midi::NoteList& list, double t, double window, Fn&& fn) {
    const auto& notes = list.notes;
    auto first = std::lower_bound(notes.begin(), notes.end(), t,
                                  [](const midi::Note& n, double v) { return n.onset < v; });
    const double end = t + window;
    for (auto it = first; it != notes.end() && it->onset < end; ++it) fn(*it);
}

}  // namespace

PitchHistogram pitch_histogram(const midi::NoteList& notes, double t, double window) {
    PitchHistogram h{};
    for_each_onset_in(notes, t, window, [&](const midi::Note& n) { h[static_cast<std::size_t>(n.pitch % 12)] += 1.0; });
    return h;
}

PitchHistogram normalize(const PitchHistogram& h) {
    double sum = 0.0;
    for (double w : h) sum += w;
    if (sum <= 0.0) return h;
    PitchHistogram out{};
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] / sum;
    return out;
}

int note_density(const midi::NoteList& notes, double t, double window) {
    int count = 0;
    for_each_onset_in(notes, t, window, [&](const midi::Note&) { ++count; });
    return count;
}

PitchHistogram rotate(const PitchHistogram& h, int k) {
    k = ((k % 12) + 12) % 12;
    PitchHistogram out{};
    for (int i = 0; i < 12; ++i) out[static_cast<std::size_t>((i + k) % 12)] = h[static_cast<std::size_t>(i)];
    return out;
}

EmotionPreset emotion_preset(Emotion e, int tonic_pitch_class) {
    const bool major = e == Emotion::Happy || e == Emotion::Peaceful;
    const bool fast = e == Emotion::Happy || e == Emotion::Tensional;
    return {rotate(major ? kMajorTemplate : kMinorTemplate, tonic_pitch_class), fast ? kFastDensity : kSlowDensity};
}

ConditioningRow conditioning_row(const PitchHistogram& h, int density) {
    ConditioningRow row{};
    const auto norm = normalize(h);
    for (int i = 0; i < kPitchClasses; ++i) row[static_cast<std::size_t>(i)] = static_cast<float>(norm[static_cast<std::size_t>(i)]);
    const int bin = std::clamp(density, 0, kDensityBins - 1);
    row[static_cast<std::size_t>(kPitchClasses + bin)] = 1.0f;
    return row;
}

std::vector<ConditioningRow> conditioning_track(const midi::NoteList& notes, const codec::EventSequence& events) {
    const auto times = codec::event_times(events);
    std::vector<ConditioningRow> rows;
    rows.reserve(times.size());
    for (double t : times) {
        rows.push_back(conditioning_row(pitch_histogram(notes, t, kWindowSeconds), note_density(notes, t, kWindowSeconds)));
    }
    return rows;
}

}  // namespace ebox::features
