#include "emotionbox/training.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <exception>
#include <string>

#include "emotionbox/errors.hpp"
#include "emotionbox/file_util.hpp"
#include "emotionbox/nn/adam.hpp"
#include "emotionbox/rng.hpp"

namespace ebox::training {

void validate(const TrainingConfig& cfg) {
    if (cfg.window_len <= 1) throw Error("window length must exceed 1");
    if (cfg.stride < 1) throw Error("stride must be at least 1");
    if (cfg.batch_size < 1) throw Error("batch size must be at least 1");
    if (cfg.epochs < 0) throw Error("epochs must be non-negative");
    if (!(cfg.lr > 0.0)) throw Error("learning rate must be positive");
}

int conditioning_dim(nn::ConditioningMode mode) {
    return mode == nn::ConditioningMode::Features ? features::kConditioningDim : kLabelDim;
}

std::vector<TrainingExample> make_windows(std::span<const int> events, std::span<const float> conditioning,
                                          int cond_dim, const TrainingConfig& cfg) {
    if (conditioning.size() != events.size() * static_cast<std::size_t>(cond_dim)) {
        throw ShapeMismatch("conditioning rows do not match event count");
    }
    std::vector<TrainingExample> out;
    const int length = static_cast<int>(events.size());
    const int steps = cfg.window_len - 1;
    for (int offset = 0; offset + cfg.window_len <= length; offset += cfg.stride) {
        TrainingExample ex;
        const auto o = static_cast<std::size_t>(offset);
        const auto s = static_cast<std::size_t>(steps);
        ex.input.assign(events.begin() + static_cast<std::ptrdiff_t>(o), events.begin() + static_cast<std::ptrdiff_t>(o + s));
        ex.target.assign(events.begin() + static_cast<std::ptrdiff_t>(o + 1), events.begin() + static_cast<std::ptrdiff_t>(o + s + 1));
        const auto cd = static_cast<std::size_t>(cond_dim);
        ex.conditioning.assign(conditioning.begin() + static_cast<std::ptrdiff_t>(o * cd),
                               conditioning.begin() + static_cast<std::ptrdiff_t>((o + s) * cd));
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<TrainingExample> make_windows(const codec::EventSequence& events,
                                          const std::vector<features::ConditioningRow>& conditioning,
                                          const TrainingConfig& cfg) {
    if (conditioning.size() != events.size()) throw ShapeMismatch("conditioning rows do not match event count");
    const auto idx = codec::to_indices(events);
    std::vector<float> flat;
    flat.reserve(conditioning.size() * features::kConditioningDim);
    for (const auto& row : conditioning) flat.insert(flat.end(), row.begin(), row.end());
    return make_windows(idx, flat, features::kConditioningDim, cfg);
}

LabelRow label_row(features::Emotion label) {
    LabelRow row{};
    row[static_cast<std::size_t>(label)] = 1.0f;
    return row;
}

std::vector<LabelRow> label_conditioning(features::Emotion label, int length) {
    return std::vector<LabelRow>(static_cast<std::size_t>(std::max(length, 0)), label_row(label));
}

std::optional<features::Emotion> infer_label(const std::filesystem::path& path) {
    auto lower = [](std::string s) {
        for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    };
    if (auto e = features::parse_emotion(lower(path.parent_path().filename().string()))) return e;
    const auto stem = lower(path.stem().string());
    for (auto e : features::kAllEmotions) {
        const auto name = features::emotion_name(e);
        if (stem.size() > name.size() && stem.compare(0, name.size(), name) == 0 &&
            !std::isalpha(static_cast<unsigned char>(stem[name.size()]))) {
            return e;
        }
        if (stem == name) return e;
    }
    return std::nullopt;
}

std::vector<TrainingExample> prepare_piece(const midi::NoteList& notes, nn::ConditioningMode mode,
                                           std::optional<features::Emotion> label, const TrainingConfig& cfg) {
    const auto events = codec::encode(notes);
    if (static_cast<int>(events.size()) < cfg.window_len) return {};
    if (mode == nn::ConditioningMode::Features) {
        // Rows come from the whole piece, so windows see absolute-time features.
        return make_windows(events, features::conditioning_track(notes, events), cfg);
    }
    if (!label) throw Error("piece '" + notes.source_name + "' has no emotion label");
    const auto rows = label_conditioning(*label, static_cast<int>(events.size()));
    std::vector<float> flat;
    flat.reserve(rows.size() * kLabelDim);
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return make_windows(codec::to_indices(events), flat, kLabelDim, cfg);
}

std::vector<TrainingExample> load_corpus(const std::filesystem::path& dir, const TrainingConfig& cfg,
                                         CorpusStats* stats) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw EmptyCorpus("corpus directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (ext == ".mid" || ext == ".midi") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    const auto n = static_cast<long long>(files.size());
    std::vector<std::vector<TrainingExample>> per_piece(files.size());
    std::vector<int> parsed(files.size(), 0);
    std::vector<std::string> errors(files.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n; ++i) {
        const auto& path = files[static_cast<std::size_t>(i)];
        try {
            const auto notes = midi::read_midi_file(path);
            parsed[static_cast<std::size_t>(i)] = 1;
            per_piece[static_cast<std::size_t>(i)] = prepare_piece(notes, cfg.mode, infer_label(path), cfg);
        } catch (const MalformedFile&) {
        } catch (const UnsupportedFormat&) {
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) throw Error(e);
    }

    CorpusStats st;
    st.files_seen = static_cast<int>(files.size());
    std::vector<TrainingExample> all;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (!parsed[i]) ++st.files_skipped;
        if (!per_piece[i].empty()) ++st.files_used;
        for (auto& ex : per_piece[i]) all.push_back(std::move(ex));
    }
    if (stats) *stats = st;
    if (all.empty()) {
        throw EmptyCorpus("corpus " + dir.string() + " yields no training windows (" + std::to_string(st.files_seen) +
                          " MIDI files found)");
    }
    return all;
}

namespace {

nn::SequenceBatch make_batch(const std::vector<TrainingExample>& examples, std::span<const std::size_t> ids) {
    nn::SequenceBatch b;
    b.batch_size = static_cast<int>(ids.size());
    b.steps = static_cast<int>(examples[ids[0]].input.size());
    for (auto id : ids) {
        const auto& ex = examples[id];
        if (static_cast<int>(ex.input.size()) != b.steps) throw ShapeMismatch("examples differ in length");
        b.inputs.insert(b.inputs.end(), ex.input.begin(), ex.input.end());
        b.targets.insert(b.targets.end(), ex.target.begin(), ex.target.end());
        b.conditioning.insert(b.conditioning.end(), ex.conditioning.begin(), ex.conditioning.end());
    }
    return b;
}

}  // namespace

TrainResult train_examples(const std::vector<TrainingExample>& examples, const TrainingConfig& cfg,
                           const EpochCallback& on_epoch) {
    validate(cfg);
    if (examples.empty()) throw EmptyCorpus("no training examples");

    nn::ModelConfig mcfg = cfg.model;
    mcfg.conditioning_dim = conditioning_dim(cfg.mode);

    TrainResult result;
    auto& ck = result.checkpoint;
    ck.mode = cfg.mode;
    ck.seed = cfg.seed;
    ck.params = nn::init_params<float>(mcfg, derive_seed(cfg.seed, 1));
    nn::AdamHyper hyper;
    hyper.lr = cfg.lr;
    ck.adam = nn::make_adam_state<float>(mcfg, hyper);

    std::vector<std::size_t> order(examples.size());
    nn::ModelParams<float> grads = nn::ModelParams<float>::zeros(mcfg);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        }

        double weighted = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const auto count = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
            const auto batch = make_batch(examples, std::span<const std::size_t>(order).subspan(start, count));
            const auto mask_seed = derive_seed(cfg.seed, 3, (static_cast<std::uint64_t>(epoch) << 32) | batch_index);
            const double loss = nn::loss_and_gradients(ck.params, batch, true, mask_seed, grads);
            nn::adam_step(ck.params, grads, ck.adam);
            weighted += loss * static_cast<double>(count);
            ++batch_index;
        }
        const double mean = weighted / static_cast<double>(examples.size());
        result.epoch_loss.push_back(mean);
        ck.epochs_completed = static_cast<std::uint32_t>(epoch + 1);
        if (on_epoch) on_epoch(epoch + 1, mean, ck);
    }
    return result;
}

std::string loss_log_csv(std::span<const double> epoch_loss) {
    std::string out = "epoch,mean_loss\n";
    char buf[64];
    for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i + 1, epoch_loss[i]);
        out += buf;
    }
    return out;
}

TrainResult train(const std::filesystem::path& corpus_dir, const TrainingConfig& cfg,
                  const std::filesystem::path& checkpoint_out, const std::filesystem::path& loss_log) {
    validate(cfg);
    const auto examples = load_corpus(corpus_dir, cfg);
    std::vector<double> losses;
    auto result = train_examples(examples, cfg, [&](int, double loss, const nn::Checkpoint& ck) {
        losses.push_back(loss);
        nn::save_checkpoint(checkpoint_out, ck);
        if (!loss_log.empty()) write_file_atomic(loss_log, loss_log_csv(losses));
    });
    if (cfg.epochs == 0) {
        nn::save_checkpoint(checkpoint_out, result.checkpoint);
        if (!loss_log.empty()) write_file_atomic(loss_log, loss_log_csv({}));
    }
    return result;
}

}  // namespace ebox::training
