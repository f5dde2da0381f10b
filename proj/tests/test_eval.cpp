#include <doctest.h>

#include <cmath>
#include <sstream>

#include "emotionbox/eval.hpp"
#include "emotionbox/rng.hpp"

using namespace ebox;
using features::Emotion;

namespace {

midi::NoteList notes_of(std::initializer_list<int> pitches, double ioi = 0.5) {
    midi::NoteList l;
    double t = 0.0;
    for (int p : pitches) {
        l.notes.push_back({p, t, t + ioi * 0.8, 64});
        t += ioi;
    }
    return l;
}

nn::Checkpoint small_checkpoint(nn::ConditioningMode mode, std::uint64_t seed) {
    nn::ModelConfig c;
    c.hidden = 8;
    c.fc_dim = 8;
    c.layers = 1;
    c.conditioning_dim = mode == nn::ConditioningMode::Features ? 25 : 4;
    nn::Checkpoint ck;
    ck.mode = mode;
    ck.params = nn::init_params<float>(c, seed);
    ck.adam = nn::make_adam_state<float>(c);
    return ck;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("scale membership examples") {
    const auto major = features::emotion_preset(Emotion::Happy);
    const auto in_scale = eval::adherence(notes_of({60, 64, 67, 72, 76}), major);
    REQUIRE(in_scale.out_of_scale_fraction.has_value());
    CHECK(*in_scale.out_of_scale_fraction == 0.0);
    const auto sharps = eval::adherence(notes_of({61, 73, 49}), major);
    CHECK(*sharps.out_of_scale_fraction == 1.0);
    const auto empty = eval::adherence(midi::NoteList{}, major);
    CHECK_FALSE(empty.out_of_scale_fraction.has_value());
    CHECK_FALSE(empty.histogram_l1.has_value());
    CHECK(empty.n_notes == 0);
    // Exactly the preset distribution gives zero L1.
    const auto exact = eval::adherence(notes_of({60, 60, 62, 64, 65, 65, 67, 67, 69, 71}), major);
    CHECK(*exact.histogram_l1 == doctest::Approx(0.0));
    const auto one = eval::adherence(notes_of({61}), major);
    CHECK(*one.histogram_l1 == doctest::Approx(2.0));
}

TEST_CASE("mean density") {
    // Onsets every 0.4 s for 10 s: five per 2 s window.
    midi::NoteList l;
    for (int i = 0; i < 25; ++i) l.notes.push_back({60, 0.4 * i + 0.01, 0.4 * i + 0.3, 64});
    CHECK(eval::mean_density(l) == doctest::Approx(5.0));
    CHECK(eval::mean_density({}) == 0.0);
    // A piece shorter than one window still gets one window.
    CHECK(eval::mean_density(notes_of({60, 62}, 0.3)) == 2.0);
}

TEST_CASE("adherence matches a brute-force recomputation") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        midi::NoteList l;
        for (int i = 0; i < 50; ++i) {
            const double t = rng.uniform(0.0, 20.0);
            l.notes.push_back({40 + static_cast<int>(rng.below(40)), t, t + rng.uniform(0.05, 1.0), 64});
        }
        midi::sort_notes(l.notes);
        const auto emotion = features::kAllEmotions[rng.below(4)];
        const int tonic = static_cast<int>(rng.below(12));
        const auto preset = features::emotion_preset(emotion, tonic);
        const auto seq = codec::encode(l);
        const auto rep = eval::adherence(seq, preset);
        const auto dec = codec::decode(seq);

        int outside = 0;
        double counts[12] = {};
        double end = 0.0;
        for (const auto& n : l.notes) {
            outside += preset.histogram[static_cast<std::size_t>(n.pitch % 12)] == 0.0 ? 1 : 0;
            counts[n.pitch % 12] += 1;
        }
        for (const auto& n : dec.notes) end = std::max(end, n.offset);
        double preset_sum = 0.0;
        for (double w : preset.histogram) preset_sum += w;
        double l1 = 0.0;
        for (int k = 0; k < 12; ++k) l1 += std::abs(counts[k] / 50.0 - preset.histogram[static_cast<std::size_t>(k)] / preset_sum);
        double total = 0.0;
        int windows = 0;
        for (double s = 0.0; windows == 0 || s + 2.0 <= end; s += 0.5) {
            for (const auto& n : dec.notes) total += (n.onset >= s && n.onset < s + 2.0) ? 1 : 0;
            ++windows;
        }

        CHECK(rep.n_notes == 50);
        CHECK(*rep.out_of_scale_fraction == doctest::Approx(outside / 50.0));
        CHECK(*rep.histogram_l1 == doctest::Approx(l1));
        CHECK(rep.mean_density == doctest::Approx(total / windows));
        CHECK(rep.density_abs_error == doctest::Approx(std::abs(total / windows - preset.density)));
    }
}

TEST_CASE("trailing silence leaves pitch metrics unchanged") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        midi::NoteList l;
        for (int i = 0; i < 30; ++i) {
            const double t = rng.uniform(0.0, 10.0);
            l.notes.push_back({48 + static_cast<int>(rng.below(30)), t, t + 0.2, 64});
        }
        midi::sort_notes(l.notes);
        auto seq = codec::encode(l);
        const auto preset = features::emotion_preset(Emotion::Sad);
        const auto a = eval::adherence(seq, preset);
        for (int k = 0; k < 10; ++k) seq.push_back(codec::PerformanceEvent::time_shift(32));
        const auto b = eval::adherence(seq, preset);
        CHECK(a.out_of_scale_fraction == b.out_of_scale_fraction);
        CHECK(a.histogram_l1 == b.histogram_l1);
        CHECK(a.n_notes == b.n_notes);
    }
}

TEST_CASE("pitch metrics count note-on events") {
    using codec::PerformanceEvent;
    // The first C# is struck and released at the same instant.
    const codec::EventSequence seq{PerformanceEvent::note_on(61), PerformanceEvent::note_off(61),
                                   PerformanceEvent::note_on(60), PerformanceEvent::time_shift(8),
                                   PerformanceEvent::note_off(60)};
    const auto rep = eval::adherence(seq, features::emotion_preset(Emotion::Happy));
    CHECK(rep.n_notes == 2);
    CHECK(*rep.out_of_scale_fraction == 0.5);
}

TEST_CASE("compare") {
    const auto feat = small_checkpoint(nn::ConditioningMode::Features, 1);
    const auto lab = small_checkpoint(nn::ConditioningMode::Labels, 2);
    generation::SamplerConfig cfg;
    cfg.max_events = 60;
    cfg.seed = 4;

    SUBCASE("zero samples gives the header only") {
        const auto t = eval::compare(feat, lab, 0, cfg);
        CHECK(t.rows.empty());
        CHECK(t.to_csv() == std::string(eval::kComparisonHeader) + "\n");
    }
    SUBCASE("identical checkpoints give identical columns") {
        const auto t = eval::compare(feat, feat, 3, cfg);
        REQUIRE(t.rows.size() == 8);
        for (std::size_t i = 0; i < 8; i += 2) {
            CHECK(t.rows[i].model == "features");
            CHECK(t.rows[i + 1].model == "labels");
            CHECK(t.rows[i].out_of_scale_fraction == t.rows[i + 1].out_of_scale_fraction);
            CHECK(t.rows[i].mean_density == t.rows[i + 1].mean_density);
            CHECK(t.rows[i].histogram_l1 == t.rows[i + 1].histogram_l1);
            CHECK(t.rows[i].n_notes == t.rows[i + 1].n_notes);
        }
        const auto csv = lines(t.to_csv());
        REQUIRE(csv.size() == 13);
        CHECK(csv[0] == eval::kComparisonHeader);
        CHECK(csv[3].rfind("happy,winner,", 0) == 0);
        CHECK(csv[3].find("features") == std::string::npos);
        CHECK(csv[3].find("labels") == std::string::npos);
    }
    SUBCASE("rows agree with direct generation and the table is reproducible") {
        const auto t = eval::compare(feat, lab, 2, cfg);
        double dens = 0.0;
        for (int s = 0; s < 2; ++s) {
            auto sc = cfg;
            sc.seed = derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(s));
            dens += eval::adherence(generation::generate(lab, Emotion::Sad, sc), features::emotion_preset(Emotion::Sad)).mean_density;
        }
        CHECK(t.rows[5].emotion == Emotion::Sad);
        CHECK(t.rows[5].mean_density == doctest::Approx(dens / 2));
        CHECK(eval::compare(feat, lab, 2, cfg).to_csv() == t.to_csv());
    }
}
