// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "emotionbox/cli.hpp"
#include "emotionbox/eval.hpp"
#include "emotionbox/event_codec.hpp"
#include "emotionbox/features.hpp"
#include "emotionbox/file_util.hpp"
#include "emotionbox/generation.hpp"
#include "emotionbox/midi_io.hpp"
#include "emotionbox/nn/model.hpp"
#include "emotionbox/rng.hpp"
#include "emotionbox/toy_corpus.hpp"
#include "emotionbox/training.hpp"
#include "model_oracle.hpp"

using namespace ebox;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string format(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("ebox_accept_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// 1. decode(encode(n)) ~ n on random note lists.
Outcome codec_round_trip() {
    const auto t0 = Clock::now();
    const double q = 1.0 / 32.0;
    Rng rng(101);
    double worst_time = 0.0;
    int worst_vel = 0;
    bool counts_ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
        midi::NoteList in;
        const int count = static_cast<int>(rng.below(201));
        std::vector<double> free_at(128, 0.0);
        for (int i = 0; i < count; ++i) {
            const int pitch = 21 + static_cast<int>(rng.below(88));
            // Durations of at least one quantum: shorter notes are lengthened by design.
            const double onset = free_at[static_cast<std::size_t>(pitch)] + rng.uniform(0.0, 5.0);
            const double offset = onset + q + rng.uniform(0.0, 4.0);
            free_at[static_cast<std::size_t>(pitch)] = offset;
            in.notes.push_back({pitch, onset, offset, 1 + static_cast<int>(rng.below(127))});
        }
        midi::sort_notes(in.notes);
        auto out = codec::decode(codec::encode(in)).notes;
        auto want = in.notes;
        if (out.size() != want.size()) {
            counts_ok = false;
            continue;
        }
        auto key = [](const midi::Note& n) { return std::tie(n.pitch, n.onset); };
        std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
        std::sort(want.begin(), want.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (out[i].pitch != want[i].pitch) counts_ok = false;
            worst_time = std::max({worst_time, std::abs(out[i].onset - want[i].onset), std::abs(out[i].offset - want[i].offset)});
            worst_vel = std::max(worst_vel, std::abs(out[i].velocity - want[i].velocity));
        }
    }
    const double elapsed = seconds_since(t0);
    const bool pass = counts_ok && worst_time <= q / 2 + 1e-12 && worst_vel <= 2 && elapsed < 10.0;
    return {pass, format("max time error %.3f ms, max velocity error %d, %.2f s", worst_time * 1e3, worst_vel, elapsed)};
}

// 2. Major template normalization.
Outcome table_normalization() {
    const auto got = features::normalize({2, 0, 1, 0, 1, 2, 0, 2, 0, 1, 0, 1});
    const features::PitchHistogram want{0.2, 0, 0.1, 0, 0.1, 0.2, 0, 0.2, 0, 0.1, 0, 0.1};
    std::string text;
    for (double v : got) text += format("%g ", v);
    return {got == want, "normalize(major) = [ " + text + "]"};
}

// 3. Analytic gradients against central differences on a downsized model.
Outcome gradient_check() {
    const auto t0 = Clock::now();
    nn::ModelConfig c;
    c.vocab = 6;
    c.conditioning_dim = 3;
    c.fc_dim = 4;
    c.hidden = 4;
    c.layers = 3;
    const auto params = nn::init_params<double>(c, 2024);
    Rng rng(55);
    nn::SequenceBatch batch;
    batch.batch_size = 2;
    batch.steps = 5;
    for (int i = 0; i < 10; ++i) {
        batch.inputs.push_back(static_cast<int>(rng.below(6)));
        batch.targets.push_back(static_cast<int>(rng.below(6)));
        for (int j = 0; j < 3; ++j) batch.conditioning.push_back(static_cast<float>(rng.uniform()));
    }
    const auto plain = oracle::grad_check(params, batch, false, 0, 1e-4, 1e-6);
    const auto dropped = oracle::grad_check(params, batch, true, 9, 1e-4, 1e-6);
    const double worst = std::max(plain.max_rel_error, dropped.max_rel_error);
    const double elapsed = seconds_since(t0);
    return {worst <= 1e-3 && plain.checked == nn::parameter_count(c) && elapsed < 60.0,
            format("%zu parameters, max relative error %.2e (no dropout %.2e, fixed mask %.2e), %.2f s", plain.checked,
                   worst, plain.max_rel_error, dropped.max_rel_error, elapsed)};
}

// 4. Fresh full-size model predicts close to uniform.
Outcome initialization_loss() {
    const nn::ModelConfig c;
    const auto params = nn::init_params<float>(c, 77);
    Rng rng(78);
    nn::SequenceBatch batch;
    batch.batch_size = 2;
    batch.steps = 199;
    std::vector<int> targets_tm(398);
    for (int b = 0; b < 2; ++b) {
        for (int t = 0; t < 199; ++t) {
            batch.inputs.push_back(static_cast<int>(rng.below(240)));
            batch.targets.push_back(static_cast<int>(rng.below(240)));
            targets_tm[static_cast<std::size_t>(t * 2 + b)] = batch.targets.back();
            const auto row = features::conditioning_row(features::kMajorTemplate, static_cast<int>(rng.below(12)));
            batch.conditioning.insert(batch.conditioning.end(), row.begin(), row.end());
        }
    }
    nn::Tape<float> tape;
    nn::forward(params, batch, false, 0, tape);
    const double loss = nn::cross_entropy(tape.logits, targets_tm);
    const double ref = std::log(240.0);
    return {std::abs(loss - ref) <= 0.1 * ref, format("loss %.4f vs ln 240 = %.4f", loss, ref)};
}

// 5. Memorize one 200-event window.
Outcome overfit_window() {
    const auto t0 = Clock::now();
    training::TrainingConfig cfg;
    cfg.model.hidden = 64;
    cfg.model.fc_dim = 64;
    cfg.model.layers = 1;
    cfg.lr = 5e-3;
    cfg.batch_size = 1;
    cfg.epochs = 500;
    cfg.seed = 7;
    const auto piece = toy::make_piece({features::Emotion::Happy, 0, 30.0}, 5);
    auto windows = training::prepare_piece(piece, nn::ConditioningMode::Features, std::nullopt, cfg);
    if (windows.empty()) return {false, "toy piece shorter than one window"};
    windows.resize(1);
    const auto a = training::train_examples(windows, cfg);
    const auto b = training::train_examples(windows, cfg);
    int first = -1;
    for (std::size_t i = 0; i < a.epoch_loss.size(); ++i) {
        if (a.epoch_loss[i] < 0.1) {
            first = static_cast<int>(i) + 1;
            break;
        }
    }
    const bool same = training::loss_log_csv(a.epoch_loss) == training::loss_log_csv(b.epoch_loss);
    const double elapsed = seconds_since(t0);
    return {a.epoch_loss.back() < 0.1 && same && elapsed < 600.0,
            format("final loss %.4f after %zu epochs (first < 0.1 at epoch %d), logs identical: %s, %.1f s for two runs",
                   a.epoch_loss.back(), a.epoch_loss.size(), first, same ? "yes" : "no", elapsed)};
}

// 6. Mode and density follow the conditioning after training on the toy corpus.
Outcome conditioning_adherence() {
    const auto t0 = Clock::now();
    const auto dir = scratch("toy");
    toy::write_corpus(dir, toy::ToyCorpusSpec{}, 1);
    training::TrainingConfig cfg;
    cfg.model.hidden = 64;
    cfg.model.fc_dim = 64;
    cfg.lr = 5e-3;
    cfg.batch_size = 16;
    cfg.epochs = 60;
    cfg.seed = 3;
    training::CorpusStats stats;
    const auto examples = training::load_corpus(dir, cfg, &stats);
    const auto result = training::train_examples(examples, cfg);
    fs::remove_all(dir);

    const auto happy_preset = features::emotion_preset(features::Emotion::Happy);
    const auto sad_preset = features::emotion_preset(features::Emotion::Sad);
    double oos = 0.0, worst_oos = 0.0, dens_happy = 0.0, dens_sad = 0.0;
    const int n = 20;
    for (int s = 0; s < n; ++s) {
        generation::SamplerConfig sc;
        sc.seed = derive_seed(404, static_cast<std::uint64_t>(s));
        const auto h = eval::adherence(generation::generate(result.checkpoint, features::Emotion::Happy, sc), happy_preset);
        const auto d = eval::adherence(generation::generate(result.checkpoint, features::Emotion::Sad, sc), sad_preset);
        const double f = h.out_of_scale_fraction.value_or(1.0);
        oos += f;
        worst_oos = std::max(worst_oos, f);
        dens_happy += h.mean_density;
        dens_sad += d.mean_density;
    }
    oos /= n;
    dens_happy /= n;
    dens_sad /= n;
    const double elapsed = seconds_since(t0);
    return {oos <= 0.15 && dens_happy - dens_sad >= 1.5 && elapsed < 1800.0,
            format("%d pieces, %zu windows, final loss %.3f; happy out-of-scale %.3f (worst sample %.3f); "
                   "density happy %.2f sad %.2f gap %.2f; %.0f s",
                   stats.files_used, examples.size(), result.epoch_loss.back(), oos, worst_oos, dens_happy, dens_sad,
                   dens_happy - dens_sad, elapsed)};
}

// 7. Exact parameter counts from the layer shapes.
Outcome parameter_counts() {
    auto count = [](std::size_t v, std::size_t cdim, std::size_t f, std::size_t h, std::size_t layers) {
        std::size_t n = v * v + (v + cdim) * f + f;
        for (std::size_t l = 0; l < layers; ++l) {
            const std::size_t in = l == 0 ? f : h;
            n += 3 * in * h + 3 * h * h + 3 * h;
        }
        return n + h * v + v;
    };
    nn::ModelConfig features_cfg;
    nn::ModelConfig labels_cfg;
    labels_cfg.conditioning_dim = 4;
    const auto got_f = nn::parameter_count(features_cfg);
    const auto got_l = nn::parameter_count(labels_cfg);
    const auto init_f = nn::init_params<float>(features_cfg, 1).parameter_count();
    const bool pass = got_f == count(240, 25, 512, 512, 3) && got_l == count(240, 4, 512, 512, 3) && got_f == 5040112 &&
                      got_l == 5029360 && init_f == got_f;
    return {pass, format("features %zu, labels %zu", got_f, got_l)};
}

// 8. Sliding-window counts.
Outcome window_counts() {
    const int lengths[] = {150, 200, 230, 1000};
    const int expected[] = {0, 1, 4, 81};
    bool pass = true;
    std::string text;
    for (int i = 0; i < 4; ++i) {
        std::vector<int> events(static_cast<std::size_t>(lengths[i]));
        for (std::size_t k = 0; k < events.size(); ++k) events[k] = static_cast<int>(k % 240);
        const std::vector<float> cond(events.size() * 25, 0.0f);
        const auto got = training::make_windows(events, cond, 25, training::TrainingConfig{});
        pass = pass && static_cast<int>(got.size()) == expected[i];
        text += format("%d->%zu ", lengths[i], got.size());
    }
    return {pass, text};
}

// 9. Sampler statistics.
Outcome sampler_statistics() {
    Rng rng(909);
    generation::SamplerConfig cfg;
    cfg.threshold = 1.0;
    const std::vector<float> flat(240, 0.0f);
    std::vector<int> counts(240, 0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(generation::sample_next<float>(flat, cfg, rng))];
    double chi = 0.0;
    const double e = draws / 240.0;
    for (int c : counts) chi += (c - e) * (c - e) / e;
    // Upper 1% point of chi-square(239), Wilson-Hilferty.
    const double k = 239.0, z = 2.326347874, a = 2.0 / (9.0 * k);
    const double critical = k * std::pow(1.0 - a + z * std::sqrt(a), 3.0);

    cfg.threshold = 0.0;
    int argmax_hits = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<float> logits(240);
        for (auto& v : logits) v = static_cast<float>(rng.uniform(-10.0, 10.0));
        const auto best = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        argmax_hits += generation::sample_next<float>(logits, cfg, rng) == best ? 1 : 0;
    }
    return {chi < critical && argmax_hits == 1000,
            format("chi-square %.1f < %.1f; argmax %d/1000", chi, critical, argmax_hits)};
}

// 10. CLI pipeline: toy corpus, train, generate; twice, byte-identical.
Outcome end_to_end() {
    const auto t0 = Clock::now();
    const auto saved = fs::current_path();
    std::vector<std::vector<std::uint8_t>> midis;
    std::string failure;
    for (int run = 0; run < 2; ++run) {
        const auto dir = scratch("e2e_" + std::to_string(run));
        fs::current_path(dir);
        std::ostringstream out, err;
        const std::vector<std::vector<std::string>> steps{
            {"toy-corpus", "--out", "corpus", "--pieces", "2", "--seed", "1"},
            {"train", "--corpus", "corpus", "--out", "model.ebox", "--epochs", "2", "--hidden", "32", "--batch", "8",
             "--lr", "0.005", "--seed", "11"},
            {"generate", "--ckpt", "model.ebox", "--emotion", "sad", "--seed", "5", "--out", "sad.mid"},
        };
        for (const auto& args : steps) {
            if (cli::run(args, out, err) != 0) failure = args[0] + " failed: " + err.str();
        }
        if (failure.empty()) midis.push_back(read_binary_file("sad.mid"));
        fs::current_path(saved);
        fs::remove_all(dir);
        if (!failure.empty()) return {false, failure};
    }
    const auto notes = midi::parse_midi(midis[0]);
    const bool same = midis[0] == midis[1];
    return {same && !notes.notes.empty() && midi::is_valid(notes),
            format("%zu bytes, %zu notes, identical across runs: %s, %.1f s", midis[0].size(), notes.notes.size(),
                   same ? "yes" : "no", seconds_since(t0))};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"codec round-trip", codec_round_trip},
        {"major template normalization", table_normalization},
        {"gradient check", gradient_check},
        {"initialization loss", initialization_loss},
        {"overfit one window", overfit_window},
        {"conditioning adherence", conditioning_adherence},
        {"parameter counts", parameter_counts},
        {"window slicing", window_counts},
        {"sampler statistics", sampler_statistics},
        {"end-to-end smoke", end_to_end},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
