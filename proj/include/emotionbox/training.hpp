#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "emotionbox/event_codec.hpp"
#include "emotionbox/features.hpp"
#include "emotionbox/nn/checkpoint.hpp"
#include "emotionbox/nn/model.hpp"

namespace ebox::training {

inline constexpr int kLabelDim = 4;

struct TrainingConfig {
    int window_len = 200;
    int stride = 10;
    int batch_size = 64;
    int epochs = 100;
    double lr = 2e-4;
    std::uint64_t seed = 0;
    nn::ConditioningMode mode = nn::ConditioningMode::Features;
    // conditioning_dim is overwritten from `mode` when training starts.
    nn::ModelConfig model;
};

void validate(const TrainingConfig& cfg);

int conditioning_dim(nn::ConditioningMode mode);

// One window: input = events[o, o + len - 1), target = events[o + 1, o + len).
// conditioning holds one row per input position, flattened.
struct TrainingExample {
    std::vector<int> input;
    std::vector<int> target;
    std::vector<float> conditioning;
};

// Windows start at 0, stride, 2*stride, ... while offset + window_len <= length.
// `conditioning` is row-major with one row of `cond_dim` per event.
std::vector<TrainingExample> make_windows(std::span<const int> events, std::span<const float> conditioning,
                                          int cond_dim, const TrainingConfig& cfg);
std::vector<TrainingExample> make_windows(const codec::EventSequence& events,
                                          const std::vector<features::ConditioningRow>& conditioning,
                                          const TrainingConfig& cfg);

inline int window_count(int length, int window_len = 200, int stride = 10) {
    return length < window_len ? 0 : (length - window_len) / stride + 1;
}

using LabelRow = std::array<float, kLabelDim>;

// The same one-hot row (order happy, tensional, sad, peaceful) `length` times.
std::vector<LabelRow> label_conditioning(features::Emotion label, int length);
LabelRow label_row(features::Emotion label);

// Label for LABELS mode: the parent directory name or the file name prefix
// (e.g. "sad_03.mid") naming one of the four emotions.
std::optional<features::Emotion> infer_label(const std::filesystem::path& path);

// Parses, encodes and windows one piece.
std::vector<TrainingExample> prepare_piece(const midi::NoteList& notes, nn::ConditioningMode mode,
                                           std::optional<features::Emotion> label, const TrainingConfig& cfg);

struct CorpusStats {
    int files_seen = 0;
    int files_used = 0;
    int files_skipped = 0;
};

// Every *.mid / *.midi file under `dir` (recursive, sorted by path). Files
// that fail to parse are skipped and counted. Pieces are prepared in parallel.
// Throws EmptyCorpus when no window results.
std::vector<TrainingExample> load_corpus(const std::filesystem::path& dir, const TrainingConfig& cfg,
                                         CorpusStats* stats = nullptr);

struct TrainResult {
    nn::Checkpoint checkpoint;
    std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(int epoch, double mean_loss, const nn::Checkpoint&)>;

// Deterministic for a fixed cfg.seed. The callback runs after every epoch.
TrainResult train_examples(const std::vector<TrainingExample>& examples, const TrainingConfig& cfg,
                           const EpochCallback& on_epoch = {});

// Loads the corpus, trains, and after every epoch atomically rewrites
// `checkpoint_out` and the loss log (header "epoch,mean_loss").
TrainResult train(const std::filesystem::path& corpus_dir, const TrainingConfig& cfg,
                  const std::filesystem::path& checkpoint_out, const std::filesystem::path& loss_log);

std::string loss_log_csv(std::span<const double> epoch_loss);

}  // namespace ebox::training
