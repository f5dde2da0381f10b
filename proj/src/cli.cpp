#include "emotionbox/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "emotionbox/errors.hpp"
#include "emotionbox/eval.hpp"
#include "emotionbox/event_codec.hpp"
#include "emotionbox/features.hpp"
#include "emotionbox/file_util.hpp"
#include "emotionbox/generation.hpp"
#include "emotionbox/midi_io.hpp"
#include "emotionbox/nn/checkpoint.hpp"
#include "emotionbox/toy_corpus.hpp"
#include "emotionbox/training.hpp"

namespace ebox::cli {

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys{
        "corpus", "ckpt",  "seed",     "epochs",      "batch",  "lr",      "mode",    "hidden",
        "layers", "dropout", "window", "stride",      "threshold", "temperature", "length", "tonic",
        "emotion", "samples", "features_ckpt", "labels_ckpt",
    };
    return keys;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

AppConfig parse_app_config(std::string_view text) {
    AppConfig cfg;
    const auto& known = known_config_keys();
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(std::string(kConfigFileName) + ":" + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error(std::string(kConfigFileName) + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        cfg.values[key] = value;
    }
    return cfg;
}

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename T>
void apply_default(const AppConfig& cfg, const std::string& key, T& target) {
    auto it = cfg.values.find(key);
    if (it == cfg.values.end()) return;
    if constexpr (std::is_same_v<T, std::string>) {
        target = it->second;
    } else {
        T v{};
        const auto& s = it->second;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw UsageError(std::string(kConfigFileName) + ": bad value for '" + key + "': " + s);
        }
        target = v;
    }
}

features::Emotion emotion_arg(const std::string& s) {
    auto e = features::parse_emotion(s);
    if (!e) throw UsageError("unknown emotion '" + s + "' (happy|tensional|sad|peaceful)");
    return *e;
}

nn::ConditioningMode mode_arg(const std::string& s) {
    if (s == "features") return nn::ConditioningMode::Features;
    if (s == "labels") return nn::ConditioningMode::Labels;
    throw UsageError("unknown mode '" + s + "' (features|labels)");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Options {
    // encode / decode / features
    std::string input;
    std::string output;
    // train
    std::string corpus;
    std::string log;
    int epochs = 100;
    int batch = 64;
    double lr = 2e-4;
    std::uint64_t seed = 0;
    std::string mode = "features";
    int hidden = 512;
    int layers = 3;
    double dropout = 0.3;
    int window = 200;
    int stride = 10;
    // generate / evaluate
    std::string ckpt;
    std::string emotion = "happy";
    double threshold = 0.9;
    double temperature = 1.0;
    int length = 600;
    int tonic = 0;
    std::string features_ckpt;
    std::string labels_ckpt;
    std::string midi_in;
    int samples = 20;
    // toy-corpus
    int pieces = 10;
};

void apply_config(const AppConfig& c, Options& o) {
    apply_default(c, "corpus", o.corpus);
    apply_default(c, "ckpt", o.ckpt);
    apply_default(c, "seed", o.seed);
    apply_default(c, "epochs", o.epochs);
    apply_default(c, "batch", o.batch);
    apply_default(c, "lr", o.lr);
    apply_default(c, "mode", o.mode);
    apply_default(c, "hidden", o.hidden);
    apply_default(c, "layers", o.layers);
    apply_default(c, "dropout", o.dropout);
    apply_default(c, "window", o.window);
    apply_default(c, "stride", o.stride);
    apply_default(c, "threshold", o.threshold);
    apply_default(c, "temperature", o.temperature);
    apply_default(c, "length", o.length);
    apply_default(c, "tonic", o.tonic);
    apply_default(c, "emotion", o.emotion);
    apply_default(c, "samples", o.samples);
    apply_default(c, "features_ckpt", o.features_ckpt);
    apply_default(c, "labels_ckpt", o.labels_ckpt);
}

generation::SamplerConfig sampler(const Options& o) {
    generation::SamplerConfig s;
    s.threshold = o.threshold;
    s.temperature = o.temperature;
    s.max_events = o.length;
    s.seed = o.seed;
    return s;
}

void cmd_encode(const Options& o, std::ostream& out) {
    const auto notes = midi::read_midi_file(o.input);
    const auto text = codec::to_text(codec::encode(notes));
    if (o.output.empty()) out << text;
    else write_file_atomic(o.output, text);
}

void cmd_decode(const Options& o) {
    const auto events = codec::from_text(read_text_file(o.input));
    midi::write_midi_file(o.output, codec::decode(events));
}

void cmd_features(const Options& o, std::ostream& out) {
    const auto notes = midi::read_midi_file(o.input);
    const auto events = codec::encode(notes);
    const auto rows = features::conditioning_track(notes, events);

    std::string csv;
    for (int i = 0; i < 12; ++i) csv += "h" + std::to_string(i) + ",";
    for (int i = 0; i < 12; ++i) csv += "d" + std::to_string(i) + ",";
    csv += "z\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            csv += fmt(row[i]);
            csv += i + 1 < row.size() ? ',' : '\n';
        }
    }
    if (!o.output.empty()) write_file_atomic(o.output, csv);

    double end = 0.0;
    for (const auto& n : notes.notes) end = std::max(end, n.offset);
    const auto whole = features::normalize(features::pitch_histogram(notes, 0.0, end + 1.0));
    out << "notes," << notes.notes.size() << "\n";
    out << "events," << events.size() << "\n";
    out << "histogram";
    for (double w : whole) out << "," << fmt(w);
    out << "\nmean_density," << fmt(eval::mean_density(notes)) << "\n";
}

void cmd_train(const Options& o, std::ostream& out) {
    if (o.corpus.empty()) throw UsageError("train: --corpus is required");
    if (o.ckpt.empty()) throw UsageError("train: --out is required");
    training::TrainingConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch;
    cfg.lr = o.lr;
    cfg.seed = o.seed;
    cfg.mode = mode_arg(o.mode);
    cfg.window_len = o.window;
    cfg.stride = o.stride;
    cfg.model.hidden = o.hidden;
    cfg.model.fc_dim = o.hidden;
    cfg.model.layers = o.layers;
    cfg.model.dropout = static_cast<float>(o.dropout);
    const std::string log = o.log.empty() ? o.ckpt + ".loss.csv" : o.log;
    const auto result = training::train(o.corpus, cfg, o.ckpt, log);
    out << "trained " << result.epoch_loss.size() << " epochs";
    if (!result.epoch_loss.empty()) out << ", final loss " << fmt(result.epoch_loss.back());
    out << "\ncheckpoint " << o.ckpt << "\nloss log " << log << "\n";
}

void cmd_generate(const Options& o, std::ostream& out) {
    if (o.ckpt.empty()) throw UsageError("generate: --ckpt is required");
    if (o.output.empty()) throw UsageError("generate: --out is required");
    const auto emotion = emotion_arg(o.emotion);
    const auto ckpt = nn::load_checkpoint(o.ckpt);
    const auto events = generation::generate(ckpt, emotion, sampler(o), o.tonic);
    const auto notes = codec::decode(events);
    midi::write_midi_file(o.output, notes);
    out << "wrote " << o.output << " (" << events.size() << " events, " << notes.notes.size() << " notes)\n";
}

void cmd_evaluate(const Options& o, std::ostream& out) {
    if (!o.midi_in.empty()) {
        const auto emotion = emotion_arg(o.emotion);
        const auto rep = eval::adherence(midi::read_midi_file(o.midi_in), features::emotion_preset(emotion, o.tonic));
        auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("na"); };
        std::string csv = "emotion,out_of_scale_fraction,mean_density,density_abs_error,histogram_l1,n_notes\n";
        csv += std::string(features::emotion_name(emotion)) + "," + opt(rep.out_of_scale_fraction) + "," +
               fmt(rep.mean_density) + "," + fmt(rep.density_abs_error) + "," + opt(rep.histogram_l1) + "," +
               std::to_string(rep.n_notes) + "\n";
        if (o.output.empty()) out << csv;
        else write_file_atomic(o.output, csv);
        return;
    }
    if (o.features_ckpt.empty() || o.labels_ckpt.empty()) {
        throw UsageError("evaluate: --features-ckpt and --labels-ckpt are required (or --midi)");
    }
    const auto a = nn::load_checkpoint(o.features_ckpt);
    const auto b = nn::load_checkpoint(o.labels_ckpt);
    const auto csv = eval::compare(a, b, o.samples, sampler(o), o.tonic).to_csv();
    if (o.output.empty()) out << csv;
    else write_file_atomic(o.output, csv);
}

void cmd_toy_corpus(const Options& o, std::ostream& out) {
    if (o.output.empty()) throw UsageError("toy-corpus: --out is required");
    toy::ToyCorpusSpec spec;
    spec.pieces_per_emotion = o.pieces;
    const auto files = toy::write_corpus(o.output, spec, o.seed);
    out << "wrote " << files.size() << " files to " << o.output << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    try {
        if (std::filesystem::exists(kConfigFileName)) {
            apply_config(parse_app_config(read_text_file(kConfigFileName)), o);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"Emotion-conditioned piano music generation", "emotionbox"};
    app.require_subcommand(0, 1);

    auto* enc = app.add_subcommand("encode", "Encode a MIDI file into performance events (text)");
    enc->add_option("input", o.input, "Input MIDI file")->required();
    enc->add_option("--out", o.output, "Output event text file (stdout if omitted)");

    auto* dec = app.add_subcommand("decode", "Decode performance events (text) into a MIDI file");
    dec->add_option("input", o.input, "Input event text file")->required();
    dec->add_option("--out", o.output, "Output MIDI file")->required();

    auto* feat = app.add_subcommand("features", "Per-event conditioning rows and a piece summary");
    feat->add_option("input", o.input, "Input MIDI file")->required();
    feat->add_option("--out", o.output, "CSV of per-event rows (25 columns)");

    auto* tr = app.add_subcommand("train", "Train a model on a directory of MIDI files");
    tr->add_option("--corpus", o.corpus, "Corpus directory");
    tr->add_option("--out", o.ckpt, "Checkpoint output path");
    tr->add_option("--log", o.log, "Loss log CSV (default: <out>.loss.csv)");
    tr->add_option("--epochs", o.epochs, "Epochs")->capture_default_str();
    tr->add_option("--batch", o.batch, "Batch size")->capture_default_str();
    tr->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
    tr->add_option("--seed", o.seed, "Seed")->capture_default_str();
    tr->add_option("--mode", o.mode, "features|labels")->capture_default_str();
    tr->add_option("--hidden", o.hidden, "FC and GRU width")->capture_default_str();
    tr->add_option("--layers", o.layers, "GRU layers")->capture_default_str();
    tr->add_option("--dropout", o.dropout, "Dropout between GRU layers")->capture_default_str();
    tr->add_option("--window", o.window, "Window length in events")->capture_default_str();
    tr->add_option("--stride", o.stride, "Window stride in events")->capture_default_str();

    auto* gen = app.add_subcommand("generate", "Generate a MIDI file for an emotion");
    gen->add_option("--ckpt", o.ckpt, "Checkpoint");
    gen->add_option("--emotion", o.emotion, "happy|tensional|sad|peaceful")->capture_default_str();
    gen->add_option("--threshold", o.threshold, "Greedy/stochastic threshold")->capture_default_str();
    gen->add_option("--temperature", o.temperature, "Sampling temperature")->capture_default_str();
    gen->add_option("--length", o.length, "Events to generate")->capture_default_str();
    gen->add_option("--seed", o.seed, "Seed")->capture_default_str();
    gen->add_option("--tonic", o.tonic, "Tonic pitch class 0..11")->capture_default_str()->check(CLI::Range(0, 11));
    gen->add_option("--out", o.output, "Output MIDI file");

    auto* ev = app.add_subcommand("evaluate", "Compare FEATURES and LABELS checkpoints, or score one MIDI file");
    ev->add_option("--features-ckpt", o.features_ckpt, "Checkpoint trained with --mode features");
    ev->add_option("--labels-ckpt", o.labels_ckpt, "Checkpoint trained with --mode labels");
    ev->add_option("--samples", o.samples, "Pieces per emotion and model")->capture_default_str();
    ev->add_option("--midi", o.midi_in, "Score this MIDI file against --emotion instead");
    ev->add_option("--emotion", o.emotion, "Emotion preset for --midi")->capture_default_str();
    ev->add_option("--threshold", o.threshold, "Greedy/stochastic threshold")->capture_default_str();
    ev->add_option("--temperature", o.temperature, "Sampling temperature")->capture_default_str();
    ev->add_option("--length", o.length, "Events per generated piece")->capture_default_str();
    ev->add_option("--seed", o.seed, "Seed")->capture_default_str();
    ev->add_option("--tonic", o.tonic, "Tonic pitch class 0..11")->capture_default_str()->check(CLI::Range(0, 11));
    ev->add_option("--out", o.output, "Output CSV (stdout if omitted)");

    auto* toy_cmd = app.add_subcommand("toy-corpus", "Write a synthetic happy/sad corpus");
    toy_cmd->add_option("--out", o.output, "Output directory");
    toy_cmd->add_option("--pieces", o.pieces, "Pieces per emotion")->capture_default_str();
    toy_cmd->add_option("--seed", o.seed, "Seed")->capture_default_str();

    auto full_help = [&] {
        std::string text = app.help();
        for (auto* sub : app.get_subcommands({})) text += "\n" + sub->help();
        return text;
    };

    if (args.empty()) {
        err << full_help();
        return 2;
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        const auto parsed = app.get_subcommands();
        out << (parsed.empty() ? full_help() : parsed.front()->help());
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (enc->parsed()) cmd_encode(o, out);
        else if (dec->parsed()) cmd_decode(o);
        else if (feat->parsed()) cmd_features(o, out);
        else if (tr->parsed()) cmd_train(o, out);
        else if (gen->parsed()) cmd_generate(o, out);
        else if (ev->parsed()) cmd_evaluate(o, out);
        else if (toy_cmd->parsed()) cmd_toy_corpus(o, out);
        else {
            err << full_help();
            return 2;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace ebox::cli
