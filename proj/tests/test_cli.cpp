#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gazekit/cli.hpp"
#include "gazekit/cascade_io.hpp"
#include "gazekit/pgm.hpp"

using namespace gazekit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "gazekit_cli_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("cli: full synth -> split -> train -> eval flow with stable outputs") {
    TempDir tmp;
    const std::string pairs = tmp / "pairs";
    CHECK(run_cli({"synth", "--out", pairs, "--subjects", "4", "--frames-per-label", "3",
                   "--seed", "7"}) == 0);
    CHECK(fs::exists(fs::path(pairs) / "manifest.jsonl"));

    const std::string train_m = tmp / "train.jsonl";
    const std::string test_m = tmp / "test.jsonl";
    CHECK(run_cli({"split", "--manifest", pairs + "/manifest.jsonl", "--fraction", "0.25",
                   "--seed", "7", "--out-train", train_m, "--out-test", test_m}) == 0);
    const std::string split_bytes = slurp(test_m);
    CHECK(run_cli({"split", "--manifest", pairs + "/manifest.jsonl", "--fraction", "0.25",
                   "--seed", "7", "--out-train", train_m, "--out-test", test_m}) == 0);
    CHECK(slurp(test_m) == split_bytes);  // byte-identical rerun

    const std::string model = tmp / "model.gzk";
    const std::string history = tmp / "history.csv";
    CHECK(run_cli({"train", "--manifest", train_m, "--out", model, "--history", history,
                   "--epochs", "2", "--batch", "8", "--c1", "2", "--c2", "1", "--seed", "5"}) == 0);
    CHECK(fs::exists(model));
    CHECK(slurp(history).find("epoch,loss,val_accuracy") == 0);

    const std::string confusion = tmp / "confusion.csv";
    CHECK(run_cli({"eval", "--model", model, "--manifest", test_m, "--confusion-out",
                   confusion}) == 0);
    const std::string conf_bytes = slurp(confusion);
    // 3x3 CSV: three lines, two commas each.
    CHECK(std::count(conf_bytes.begin(), conf_bytes.end(), '\n') == 3);
    CHECK(std::count(conf_bytes.begin(), conf_bytes.end(), ',') == 6);

    CHECK(run_cli({"eval", "--model", model, "--manifest", test_m, "--confusion-out",
                   confusion}) == 0);
    CHECK(slurp(confusion) == conf_bytes);
}

TEST_CASE("cli: augment expands the manifest by the multiplier") {
    TempDir tmp;
    const std::string pairs = tmp / "pairs";
    REQUIRE(run_cli({"synth", "--out", pairs, "--subjects", "2", "--frames-per-label", "2",
                     "--seed", "3"}) == 0);
    const std::string aug = tmp / "aug";
    CHECK(run_cli({"augment", "--manifest", pairs + "/manifest.jsonl", "--out", aug,
                   "--multiplier", "4", "--seed", "9"}) == 0);
    const std::string manifest = slurp(fs::path(aug) / "manifest.jsonl");
    // 12 originals + 12*4 augmented copies.
    CHECK(std::count(manifest.begin(), manifest.end(), '\n') == 12 + 48);
    CHECK(manifest.find("\"augmented\"") != std::string::npos);
}

TEST_CASE("cli: --config JSON mirrors flags, explicit flags win") {
    TempDir tmp;
    const std::string pairs = tmp / "pairs";
    {
        std::ofstream cfg(tmp / "cfg.json");
        cfg << R"({"out": ")" << pairs << R"(", "subjects": 2, "frames-per-label": 2, "seed": 3})";
    }
    CHECK(run_cli({"synth", "--config", tmp / "cfg.json"}) == 0);
    CHECK(fs::exists(fs::path(pairs) / "manifest.jsonl"));
    const std::string first = slurp(fs::path(pairs) / "manifest.jsonl");

    // Explicit --seed overrides the config value; different seed tags prove it.
    CHECK(run_cli({"synth", "--config", tmp / "cfg.json", "--seed", "4"}) == 0);
    CHECK(slurp(fs::path(pairs) / "manifest.jsonl") != first);
}

TEST_CASE("cli: detect on an image reports detections as JSON") {
    TempDir tmp;
    // Single-stage cascade with an unreachable threshold: no detections,
    // but the subcommand must still produce a well-formed report.
    CascadeModel m;
    m.kind = FeatureKind::haar;
    m.base_w = 16;
    m.base_h = 16;
    Stage s;
    s.threshold = 1e30;
    s.weak.push_back(HaarWeak{
        HaarFeature{{{Rect{0, 0, 8, 16}, +1}, {Rect{8, 0, 8, 16}, -1}}, 16, 16}, 0.0, -1.0, 1.0});
    m.stages.push_back(s);
    save_cascade(m, tmp / "face.json");
    write_pgm(tmp / "img.pgm", GrayImage(64, 64, 80));

    CHECK(run_cli({"detect", "--image", tmp / "img.pgm", "--face-model", tmp / "face.json",
                   "--out", tmp / "dets.json"}) == 0);
    const std::string out = slurp(fs::path(tmp.path) / "dets.json");
    CHECK(out.find("\"detections\"") != std::string::npos);
    // Malformed cascade file -> domain error.
    {
        std::ofstream f(fs::path(tmp.path) / "broken.json");
        f << "{ not json";
    }
    CHECK(run_cli({"detect", "--image", tmp / "img.pgm", "--face-model", tmp / "broken.json"}) == 1);
}

TEST_CASE("cli: exit codes") {
    CHECK(run_cli({"definitely-not-a-command"}) == 2);
    CHECK(run_cli({"synth", "--bogus-flag", "x"}) == 2);
    CHECK(run_cli({"synth"}) == 2);  // missing required --out
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"--help"}) == 0);
    // Domain error: nonexistent input file.
    CHECK(run_cli({"eval", "--model", "/nonexistent/x.gzk", "--manifest", "/nonexistent/m.jsonl"}) ==
          1);
    CHECK(run_cli({"train", "--manifest", "/nonexistent/m.jsonl"}) == 1);
    // Bench treats missing models/frames as usage errors.
    CHECK(run_cli({"bench", "--frames", "/nonexistent", "--face-model", "/nonexistent/f.json",
                   "--eye-model", "/nonexistent/e.json", "--model", "/nonexistent/m.gzk"}) == 2);
    // Infer needs a frame source; stdin mode needs dimensions.
    CHECK(run_cli({"infer", "--model", "m", "--face-model", "f", "--eye-model", "e"}) == 2);
}
