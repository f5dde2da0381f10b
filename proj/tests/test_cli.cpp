#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "emotionbox/cli.hpp"
#include "emotionbox/errors.hpp"
#include "emotionbox/file_util.hpp"
#include "emotionbox/midi_io.hpp"
#include "emotionbox/nn/checkpoint.hpp"
#include "smf_builder.hpp"

using namespace ebox;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// Runs every test from its own scratch directory so a stray config file in
// the build tree cannot leak in.
struct ScratchDir {
    fs::path dir;
    fs::path saved;
    explicit ScratchDir(const std::string& name) {
        dir = fs::temp_directory_path() / name;
        fs::remove_all(dir);
        fs::create_directories(dir);
        saved = fs::current_path();
        fs::current_path(dir);
    }
    ~ScratchDir() {
        fs::current_path(saved);
        fs::remove_all(dir);
    }
};

}  // namespace

TEST_CASE("no arguments prints help and exits 2") {
    ScratchDir s("ebox_cli_noargs");
    const auto r = run({});
    CHECK(r.code == 2);
    for (const char* sub : {"encode", "decode", "features", "train", "generate", "evaluate", "toy-corpus"}) {
        CHECK(r.err.find(sub) != std::string::npos);
    }
}

TEST_CASE("help") {
    ScratchDir s("ebox_cli_help");
    const auto r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("--emotion") != std::string::npos);
    CHECK(r.out.find("--corpus") != std::string::npos);
    const auto g = run({"generate", "--help"});
    CHECK(g.code == 0);
    CHECK(g.out.find("--threshold") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
    ScratchDir s("ebox_cli_usage");
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"encode"}).code == 2);
    CHECK(run({"generate", "--tonic", "12"}).code == 2);
    CHECK(run({"generate", "--emotion", "angry", "--ckpt", "x.ebox", "--out", "y.mid"}).code == 2);
}

TEST_CASE("encode then decode") {
    ScratchDir s("ebox_cli_codec");
    midi::NoteList l;
    l.notes = {{60, 0.0, 0.5, 64}, {64, 0.5, 1.0, 80}};
    midi::write_midi_file("in.mid", l);
    const auto enc = run({"encode", "in.mid"});
    REQUIRE(enc.code == 0);
    CHECK(enc.out.rfind("VEL 16\nON 60\nSHIFT 16\nOFF 60\n", 0) == 0);
    REQUIRE(run({"encode", "in.mid", "--out", "ev.txt"}).code == 0);
    CHECK(read_text_file("ev.txt") == enc.out);
    REQUIRE(run({"decode", "ev.txt", "--out", "back.mid"}).code == 0);
    const auto back = midi::read_midi_file("back.mid");
    REQUIRE(back.notes.size() == 2);
    CHECK(back.notes[1].pitch == 64);
    CHECK(back.notes[1].onset == doctest::Approx(0.5));
    CHECK(back.notes[1].velocity == 82);
}

TEST_CASE("domain errors exit 1") {
    ScratchDir s("ebox_cli_domain");
    fs::create_directories("empty");
    const auto r = run({"train", "--corpus", "empty", "--out", "m.ebox", "--epochs", "1"});
    CHECK(r.code == 1);
    CHECK(r.err.find("error:") != std::string::npos);
    CHECK(run({"encode", "missing.mid"}).code == 1);
    write_file_atomic("bad.mid", std::string_view("not midi"));
    CHECK(run({"encode", "bad.mid"}).code == 1);
    write_file_atomic("bad.ebox", std::string_view("EBOX1 nonsense bytes here"));
    CHECK(run({"generate", "--ckpt", "bad.ebox", "--out", "o.mid"}).code == 1);
}

TEST_CASE("features subcommand") {
    ScratchDir s("ebox_cli_features");
    const auto bytes = smf::file(0, 480, {smf::Track{}.on(0, 60, 64).off(480, 60).on(0, 67, 64).off(480, 67).end()});
    write_file_atomic("in.mid", std::span<const std::uint8_t>(bytes));
    const auto r = run({"features", "in.mid", "--out", "rows.csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("notes,2") != std::string::npos);
    const auto csv = read_text_file("rows.csv");
    const auto header = csv.substr(0, csv.find('\n'));
    CHECK(std::count(header.begin(), header.end(), ',') == 24);
    CHECK(header.rfind("h0,", 0) == 0);
}

TEST_CASE("config file") {
    ScratchDir s("ebox_cli_config");
    SUBCASE("unknown key is rejected by name") {
        write_file_atomic(cli::kConfigFileName, std::string_view("epochs = 3\nbogus_key = 1\n"));
        const auto r = run({"encode", "x.mid"});
        CHECK(r.code == 2);
        CHECK(r.err.find("bogus_key") != std::string::npos);
    }
    SUBCASE("values become defaults and flags override them") {
        write_file_atomic(cli::kConfigFileName, std::string_view("# defaults\npieces_unused_comment = no\n"));
        CHECK(run({"toy-corpus", "--out", "c"}).code == 2);
        write_file_atomic(cli::kConfigFileName, std::string_view("seed = 9\n"));
        REQUIRE(run({"toy-corpus", "--out", "a", "--pieces", "1"}).code == 0);
        REQUIRE(run({"toy-corpus", "--out", "b", "--pieces", "1", "--seed", "9"}).code == 0);
        REQUIRE(run({"toy-corpus", "--out", "c", "--pieces", "1", "--seed", "10"}).code == 0);
        CHECK(read_binary_file("a/happy_00.mid") == read_binary_file("b/happy_00.mid"));
        CHECK(read_binary_file("a/happy_00.mid") != read_binary_file("c/happy_00.mid"));
    }
    CHECK_THROWS_AS(cli::parse_app_config("no equals sign"), Error);
    CHECK(cli::parse_app_config("\n# c\n lr = 0.01 \n").values.at("lr") == "0.01");
}

TEST_CASE("train, generate and evaluate") {
    ScratchDir s("ebox_cli_pipeline");
    REQUIRE(run({"toy-corpus", "--out", "corpus", "--pieces", "1", "--seed", "3"}).code == 0);
    const std::vector<std::string> train_args{"train", "--corpus", "corpus", "--out", "f.ebox", "--epochs", "1",
                                              "--hidden", "8", "--layers", "1", "--window", "50", "--stride", "25",
                                              "--batch", "8", "--lr", "0.01", "--seed", "4"};
    const auto tr = run(train_args);
    REQUIRE(tr.code == 0);
    CHECK(tr.out.find("trained 1 epochs") != std::string::npos);
    CHECK(read_text_file("f.ebox.loss.csv").rfind("epoch,mean_loss\n1,", 0) == 0);
    auto lab_args = train_args;
    lab_args[4] = "l.ebox";
    lab_args.push_back("--mode");
    lab_args.push_back("labels");
    REQUIRE(run(lab_args).code == 0);
    CHECK(nn::load_checkpoint("l.ebox").mode == nn::ConditioningMode::Labels);

    const auto gen = run({"generate", "--ckpt", "f.ebox", "--emotion", "sad", "--length", "80", "--seed", "2", "--out", "g.mid"});
    REQUIRE(gen.code == 0);
    CHECK(midi::is_valid(midi::read_midi_file("g.mid")));

    const auto ev = run({"evaluate", "--features-ckpt", "f.ebox", "--labels-ckpt", "l.ebox", "--samples", "2", "--length", "60"});
    REQUIRE(ev.code == 0);
    CHECK(ev.out.rfind("emotion,model,out_of_scale_fraction,mean_density,density_abs_error,histogram_l1,n_notes\n", 0) == 0);
    CHECK(std::count(ev.out.begin(), ev.out.end(), '\n') == 13);

    const auto one = run({"evaluate", "--midi", "g.mid", "--emotion", "sad"});
    REQUIRE(one.code == 0);
    CHECK(one.out.find("out_of_scale_fraction") != std::string::npos);
}
