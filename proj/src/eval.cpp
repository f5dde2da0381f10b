#include "emotionbox/eval.hpp"

#include <cmath>
#include <cstdio>

#include "emotionbox/errors.hpp"

namespace ebox::eval {

double mean_density(const midi::NoteList& notes) {
    double end = 0.0;
    for (const auto& n : notes.notes) end = std::max(end, n.offset);
    double total = 0.0;
    int windows = 0;
    for (int k = 0;; ++k) {
        const double s = k * kDensityStepSeconds;
        if (k > 0 && s + features::kWindowSeconds > end) break;
        total += features::note_density(notes, s, features::kWindowSeconds);
        ++windows;
    }
    return total / windows;
}

namespace {

void fill_pitch_metrics(const std::vector<int>& pitches, const features::EmotionPreset& preset, AdherenceReport& rep) {
    rep.n_notes = static_cast<int>(pitches.size());
    if (pitches.empty()) return;
    features::PitchHistogram counts{};
    int outside = 0;
    for (int p : pitches) {
        const auto pc = static_cast<std::size_t>(p % 12);
        counts[pc] += 1.0;
        if (preset.histogram[pc] == 0.0) ++outside;
    }
    rep.out_of_scale_fraction = static_cast<double>(outside) / rep.n_notes;
    const auto got = features::normalize(counts);
    const auto want = features::normalize(preset.histogram);
    double l1 = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) l1 += std::abs(got[i] - want[i]);
    rep.histogram_l1 = l1;
}

}  // namespace

AdherenceReport adherence(const midi::NoteList& notes, const features::EmotionPreset& preset) {
    AdherenceReport rep;
    rep.mean_density = mean_density(notes);
    rep.density_abs_error = std::abs(rep.mean_density - preset.density);
    std::vector<int> pitches;
    for (const auto& n : notes.notes) pitches.push_back(n.pitch);
    fill_pitch_metrics(pitches, preset, rep);
    return rep;
}

// Pitch metrics count NOTE_ON events, so a note that decodes to zero length
// still counts; density comes from the decoded notes.
AdherenceReport adherence(const codec::EventSequence& seq, const features::EmotionPreset& preset) {
    AdherenceReport rep;
    rep.mean_density = mean_density(codec::decode(seq));
    rep.density_abs_error = std::abs(rep.mean_density - preset.density);
    std::vector<int> pitches;
    for (const auto& e : seq) {
        if (e.kind == codec::EventKind::NoteOn && codec::is_valid(e)) pitches.push_back(e.value);
    }
    fill_pitch_metrics(pitches, preset, rep);
    return rep;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "na"; }

std::string lower_wins(const std::optional<double>& a, const std::optional<double>& b, const std::string& na,
                       const std::string& nb) {
    if (!a || !b) return "na";
    if (*a < *b) return na;
    if (*b < *a) return nb;
    return "tie";
}

}  // namespace

std::string ComparisonTable::to_csv() const {
    std::string out = std::string(kComparisonHeader) + "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out += std::string(features::emotion_name(r.emotion)) + "," + r.model + "," + fmt(r.out_of_scale_fraction) +
               "," + fmt(r.mean_density) + "," + fmt(r.density_abs_error) + "," + fmt(r.histogram_l1) + "," +
               fmt(r.n_notes) + "\n";
        if (i % 2 == 1) {
            const auto& a = rows[i - 1];
            const auto& b = r;
            const auto dens = lower_wins(a.density_abs_error, b.density_abs_error, a.model, b.model);
            out += std::string(features::emotion_name(r.emotion)) + ",winner," +
                   lower_wins(a.out_of_scale_fraction, b.out_of_scale_fraction, a.model, b.model) + "," + dens + "," +
                   dens + "," + lower_wins(a.histogram_l1, b.histogram_l1, a.model, b.model) + ",-\n";
        }
    }
    return out;
}

ComparisonTable compare(const nn::Checkpoint& features_ckpt, const nn::Checkpoint& labels_ckpt, int n_samples,
                        const generation::SamplerConfig& cfg, int tonic) {
    generation::validate(cfg);
    if (n_samples < 0) throw Error("sample count must be non-negative");
    ComparisonTable table;
    table.n_samples = n_samples;
    if (n_samples == 0) return table;

    const nn::Checkpoint* models[2] = {&features_ckpt, &labels_ckpt};
    const char* names[2] = {"features", "labels"};
    const int n_emotions = static_cast<int>(features::kAllEmotions.size());
    const long long jobs = static_cast<long long>(n_emotions) * 2 * n_samples;
    std::vector<AdherenceReport> reports(static_cast<std::size_t>(jobs));
    std::vector<std::string> errors(static_cast<std::size_t>(jobs));

#pragma omp parallel for schedule(dynamic)
    for (long long j = 0; j < jobs; ++j) {
        const int sample = static_cast<int>(j % n_samples);
        const int model = static_cast<int>((j / n_samples) % 2);
        const int emo = static_cast<int>(j / (2LL * n_samples));
        const auto emotion = features::kAllEmotions[static_cast<std::size_t>(emo)];
        auto sc = cfg;
        sc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(emo), static_cast<std::uint64_t>(sample));
        try {
            const auto seq = generation::generate(*models[model], emotion, sc, tonic);
            reports[static_cast<std::size_t>(j)] = adherence(seq, features::emotion_preset(emotion, tonic));
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(j)] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) throw Error(e);
    }

    for (int emo = 0; emo < n_emotions; ++emo) {
        for (int model = 0; model < 2; ++model) {
            ComparisonRow row;
            row.emotion = features::kAllEmotions[static_cast<std::size_t>(emo)];
            row.model = names[model];
            double oos = 0.0, l1 = 0.0;
            int pitched = 0;
            for (int s = 0; s < n_samples; ++s) {
                const auto& r = reports[static_cast<std::size_t>((emo * 2 + model) * n_samples + s)];
                row.mean_density += r.mean_density;
                row.density_abs_error += r.density_abs_error;
                row.n_notes += r.n_notes;
                if (r.out_of_scale_fraction) {
                    oos += *r.out_of_scale_fraction;
                    l1 += *r.histogram_l1;
                    ++pitched;
                }
            }
            row.mean_density /= n_samples;
            row.density_abs_error /= n_samples;
            row.n_notes /= n_samples;
            if (pitched > 0) {
                row.out_of_scale_fraction = oos / pitched;
                row.histogram_l1 = l1 / pitched;
            }
            table.rows.push_back(row);
        }
    }
    return table;
}

}  // namespace ebox::eval
