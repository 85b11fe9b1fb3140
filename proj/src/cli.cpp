#include "gazekit/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "gazekit/bench.hpp"
#include "gazekit/cascade_io.hpp"
#include "gazekit/cascade_train.hpp"
#include "gazekit/dataset.hpp"
#include "gazekit/kernels.hpp"
#include "gazekit/net.hpp"
#include "gazekit/pgm.hpp"
#include "gazekit/rng.hpp"
#include "gazekit/synth.hpp"
#include "gazekit/train.hpp"

namespace gazekit {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

const char* label_name(int label) {
    switch (label) {
        case gaze_right: return "right";
        case gaze_left: return "left";
        case gaze_vague: return "vague";
    }
    return "unknown";
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), Err::io, "cannot write " + path.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    require(f.good(), Err::io, "short write to " + path.string());
}

std::vector<fs::path> list_pgms(const fs::path& dir) {
    require(fs::is_directory(dir), Err::io, dir.string() + " is not a directory");
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".pgm") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

// --config file.json holds {"flag": value} defaults for the subcommand;
// explicit command-line flags win because they parse later.
std::vector<std::string> apply_config_file(const std::vector<std::string>& args) {
    std::string config_path;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    std::ifstream f(config_path);
    require(f.good(), Err::io, "cannot open config " + config_path);
    ordered_json j;
    try {
        j = ordered_json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        fail(Err::validation, config_path + ": " + e.what());
    }
    require(j.is_object(), Err::validation, config_path + ": config must be a JSON object");

    std::vector<std::string> injected;
    for (const auto& [key, value] : j.items()) {
        if (value.is_boolean()) {
            if (value.get<bool>()) injected.push_back("--" + key);
        } else if (value.is_string()) {
            injected.push_back("--" + key + "=" + value.get<std::string>());
        } else {
            injected.push_back("--" + key + "=" + value.dump());
        }
    }
    // Config tokens go right after the subcommand so user flags override them.
    std::vector<std::string> out;
    size_t insert_at = args.empty() ? 0 : 1;
    out.insert(out.end(), args.begin(), args.begin() + insert_at);
    out.insert(out.end(), injected.begin(), injected.end());
    out.insert(out.end(), args.begin() + insert_at, args.end());
    return out;
}

struct CommonOpts {
    uint64_t seed = 42;
    int threads = 1;
    std::string config;   // consumed by apply_config_file; registered so CLI11 accepts it
    std::string kernels;  // optional backend override
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--seed", o.seed, "Seed for all randomness")->capture_default_str();
    cmd->add_option("--threads", o.threads, "Worker thread cap (1 = sequential)")
        ->capture_default_str();
    cmd->add_option("--config", o.config, "JSON file with {\"flag\": value} defaults");
    cmd->add_option("--kernels", o.kernels, "Force kernel backend: scalar|avx2|neon");
}

void apply_common(const CommonOpts& o) {
    if (o.kernels.empty()) return;
    kernels::Backend b;
    if (o.kernels == "scalar") b = kernels::Backend::scalar;
    else if (o.kernels == "avx2") b = kernels::Backend::avx2;
    else if (o.kernels == "neon") b = kernels::Backend::neon;
    else fail(Err::malformed_input, "unknown kernel backend '" + o.kernels + "'");
    require(kernels::set_backend(b), Err::malformed_input,
            "kernel backend '" + o.kernels + "' is not available on this machine");
}

ScanParams scan_with_threads(int threads) {
    ScanParams p;
    p.threads = threads;
    return p;
}

// ---------------------------------------------------------------------- synth

struct SynthOpts {
    CommonOpts common;
    std::string out_dir;
    std::string mode = "pairs";
    int subjects = 30;
    int frames_per_label = 5;
    int scenes = 100;
    int frame_w = 640, frame_h = 480;
};

int cmd_synth(const SynthOpts& o) {
    apply_common(o.common);
    if (o.mode == "pairs") {
        const Manifest m = gen_dataset(o.subjects, o.frames_per_label, o.common.seed, o.out_dir);
        std::cout << "wrote " << m.entries.size() << " eye-pair composites and manifest.jsonl to "
                  << o.out_dir << "\n";
    } else if (o.mode == "scenes") {
        const auto scenes = gen_scene_set(o.scenes, o.common.seed, o.frame_w, o.frame_h);
        write_scene_set(scenes, o.out_dir);
        std::cout << "wrote " << scenes.size() << " scenes and truth.jsonl to " << o.out_dir << "\n";
    } else {
        fail(Err::malformed_input, "synth --mode must be pairs|scenes");
    }
    return 0;
}

// -------------------------------------------------------------------- augment

struct AugmentOpts {
    CommonOpts common;
    std::string manifest;
    std::string out_dir;
    int multiplier = 159;
    bool no_translate = false, no_rotate = false, no_brightness = false, no_contrast = false,
         no_hflip = false;
    bool keep_originals = true;
};

int cmd_augment(const AugmentOpts& o) {
    apply_common(o.common);
    const fs::path manifest_path(o.manifest);
    const Manifest in = load_manifest(manifest_path);
    const fs::path base = manifest_path.parent_path();
    const fs::path out_dir(o.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    require(fs::is_directory(out_dir), Err::io, "cannot create " + out_dir.string());

    AugmentConfig cfg;
    cfg.multiplier = o.multiplier;
    cfg.seed = o.common.seed;
    cfg.translate = !o.no_translate;
    cfg.rotate = !o.no_rotate;
    cfg.brightness = !o.no_brightness;
    cfg.contrast = !o.no_contrast;
    cfg.hflip = !o.no_hflip;

    Manifest out;
    for (const ManifestEntry& e : in.entries) {
        const GrayImage composite = read_pgm(base / e.path);
        if (o.keep_originals) {
            const std::string name = fs::path(e.path).filename().string();
            write_pgm(out_dir / name, composite);
            ManifestEntry copy = e;
            copy.path = name;
            out.entries.push_back(copy);
        }
        const Sample s = make_sample(composite, e.label, e.subject, e.path);
        const std::vector<Sample> variants = augment(s, cfg);
        for (size_t i = 0; i < variants.size(); ++i) {
            const std::string stem = fs::path(e.path).stem().string();
            char name[256];
            std::snprintf(name, sizeof name, "%s_a%04zu.pgm", stem.c_str(), i);
            write_pgm(out_dir / name, variants[i].composite);
            ManifestEntry ne;
            ne.path = name;
            ne.label = variants[i].label;
            ne.subject = e.subject;
            ne.origin = Origin::augmented;
            char tag[32];
            std::snprintf(tag, sizeof tag, "%016llx",
                          static_cast<unsigned long long>(cfg.seed));
            ne.seed_tag = std::string(tag) + ":" + std::to_string(i);
            out.entries.push_back(std::move(ne));
        }
    }
    save_manifest(out, out_dir / "manifest.jsonl");
    std::cout << "wrote " << out.entries.size() << " entries to " << (out_dir / "manifest.jsonl")
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------- split

struct SplitOpts {
    CommonOpts common;
    std::string manifest;
    double fraction = 0.2;
    bool no_stratify = false;
    std::string out_train, out_test;
};

int cmd_split(const SplitOpts& o) {
    apply_common(o.common);
    const fs::path manifest_path(o.manifest);
    const Manifest m = load_manifest(manifest_path);
    const Split split = split_shuffle(m, o.fraction, o.common.seed, !o.no_stratify);

    auto emit = [&](const std::vector<size_t>& idx, const fs::path& out_path) {
        Manifest part;
        for (size_t i : idx) part.entries.push_back(m.entries[i]);
        // Entry paths are relative to their manifest's directory.
        part = rebase_manifest(part, manifest_path.parent_path(), out_path.parent_path());
        save_manifest(part, out_path);
    };
    emit(split.train, o.out_train);
    emit(split.test, o.out_test);
    std::cout << "train=" << split.train.size() << " test=" << split.test.size() << "\n";
    return 0;
}

// ---------------------------------------------------------------------- train

struct TrainOpts {
    CommonOpts common;
    std::string manifest, val_manifest;
    std::string out_model = "model.gzk";
    std::string history;
    double lr = 0.01, momentum = 0.9;
    int batch = 64, epochs = 15;
    int c1 = 6, c2 = 2;
};

Hyper hyper_from(const TrainOpts& o) {
    Hyper h;
    h.lr = o.lr;
    h.momentum = o.momentum;
    h.batch = o.batch;
    h.epochs = o.epochs;
    h.seed = o.common.seed;
    return h;
}

int cmd_train(const TrainOpts& o) {
    apply_common(o.common);
    const fs::path manifest_path(o.manifest);
    const Manifest m = load_manifest(manifest_path);
    const DataSet train_ds = load_dataset(m, manifest_path.parent_path());

    DataSet val_ds;
    const DataSet* val = nullptr;
    if (!o.val_manifest.empty()) {
        const fs::path vp(o.val_manifest);
        val_ds = load_dataset(load_manifest(vp), vp.parent_path());
        val = &val_ds;
    }

    ArchConfig arch;
    arch.c1 = o.c1;
    arch.c2 = o.c2;
    Network net = init_params(arch, o.common.seed);
    const History hist = train(net, train_ds, hyper_from(o), val);
    save_model(net, o.out_model);
    if (!o.history.empty()) write_text(o.history, history_csv(hist));

    ordered_json j;
    j["params"] = arch.param_count();
    j["epochs"] = o.epochs;
    j["final_loss"] = hist.empty() ? 0.0 : hist.back().loss;
    if (val && !hist.empty() && hist.back().val_accuracy)
        j["final_val_accuracy"] = *hist.back().val_accuracy;
    j["model"] = o.out_model;
    std::cout << j.dump(2) << "\n";
    return 0;
}

// ----------------------------------------------------------------------- eval

struct EvalOpts {
    CommonOpts common;
    std::string model, manifest, confusion_out;
};

int cmd_eval(const EvalOpts& o) {
    apply_common(o.common);
    const Network net = load_model(o.model);
    const fs::path manifest_path(o.manifest);
    const Metrics m = evaluate(net, load_dataset(load_manifest(manifest_path),
                                                 manifest_path.parent_path()));
    if (!o.confusion_out.empty()) write_text(o.confusion_out, confusion_csv(m));
    std::cout << metrics_to_json(m) << "\n";
    return 0;
}

// ------------------------------------------------------------------- crossval

struct CrossvalOpts {
    TrainOpts train;  // reuses hyperparameter flags
    int k = 5;
    bool no_shuffle_compare = false;
    std::string report;
};

int cmd_crossval(const CrossvalOpts& o) {
    apply_common(o.train.common);
    const fs::path manifest_path(o.train.manifest);
    const Manifest m = load_manifest(manifest_path);
    const DataSet all = load_dataset(m, manifest_path.parent_path());
    ArchConfig arch;
    arch.c1 = o.train.c1;
    arch.c2 = o.train.c2;
    const Hyper h = hyper_from(o.train);

    const CvReport cv = cross_validate(all, m, o.k, arch, h);

    ordered_json j;
    j["k"] = o.k;
    j["folds"] = ordered_json::array();
    for (size_t f = 0; f < cv.folds.size(); ++f) {
        ordered_json jf;
        jf["fold"] = f;
        jf["accuracy"] = cv.folds[f].metrics.accuracy;
        jf["n"] = cv.folds[f].metrics.n;
        jf["test_subjects"] = cv.folds[f].test_subjects;
        j["folds"].push_back(jf);
    }
    j["grouped_mean_accuracy"] = cv.mean_accuracy;
    j["grouped_std_accuracy"] = cv.std_accuracy;

    // Side-by-side shuffled-split accuracy with the same hyperparameters.
    if (!o.no_shuffle_compare) {
        const Split split = split_shuffle(m, 0.2, h.seed, true);
        Network net = init_params(arch, h.seed);
        const DataSet train_ds = subset(all, split.train);
        const DataSet test_ds = subset(all, split.test);
        train(net, train_ds, h);
        j["shuffled_accuracy"] = evaluate(net, test_ds).accuracy;
    }

    std::cout << "fold  accuracy   test_subjects\n";
    for (size_t f = 0; f < cv.folds.size(); ++f) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%4zu  %8.4f   %zu\n", f, cv.folds[f].metrics.accuracy,
                      cv.folds[f].test_subjects.size());
        std::cout << buf;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "grouped mean=%.4f sd=%.4f", cv.mean_accuracy, cv.std_accuracy);
    std::cout << buf;
    if (j.contains("shuffled_accuracy")) {
        std::snprintf(buf, sizeof buf, "   shuffled=%.4f", j["shuffled_accuracy"].get<double>());
        std::cout << buf;
    }
    std::cout << "\n";
    if (!o.report.empty()) write_text(o.report, j.dump(2) + "\n");
    return 0;
}

// --------------------------------------------------------------------- detect

struct DetectOpts {
    CommonOpts common;
    std::string image, face_model, eye_model, out;
};

int cmd_detect(const DetectOpts& o) {
    apply_common(o.common);
    const GrayImage img = read_pgm(o.image);
    const CascadeModel face = load_cascade(o.face_model);
    const auto detections = detect(img, face, scan_with_threads(o.common.threads));

    ordered_json j;
    j["image"] = o.image;
    j["detections"] = ordered_json::array();
    for (const Detection& d : detections) {
        ordered_json jd;
        jd["box"] = {d.box.x, d.box.y, d.box.w, d.box.h};
        jd["neighbors"] = d.neighbors;
        jd["score"] = d.score;
        j["detections"].push_back(jd);
    }
    if (!o.eye_model.empty() && !detections.empty()) {
        const CascadeModel eye = load_cascade(o.eye_model);
        try {
            const EyePair eyes = locate_eyes(img, detections.front().box, eye,
                                             scan_with_threads(o.common.threads));
            j["eyes"]["right"] = {eyes.right_box.x, eyes.right_box.y, eyes.right_box.w,
                                  eyes.right_box.h};
            j["eyes"]["left"] = {eyes.left_box.x, eyes.left_box.y, eyes.left_box.w,
                                 eyes.left_box.h};
        } catch (const Error& e) {
            if (e.code() != Err::eyes_not_found) throw;
            j["eyes"] = nullptr;
        }
    }
    const std::string text = j.dump(2) + "\n";
    if (!o.out.empty()) write_text(o.out, text);
    std::cout << text;
    return 0;
}

// ---------------------------------------------------------------------- infer

struct InferOpts {
    CommonOpts common;
    std::string model, face_model, eye_model, frames_dir;
    bool stdin_frames = false;  // raw 8-bit frames on standard input
    int frame_w = 0, frame_h = 0;
};

int cmd_infer(const InferOpts& o) {
    apply_common(o.common);
    require(o.stdin_frames || !o.frames_dir.empty(), Err::usage,
            "infer needs --frames or --stdin-frames");
    require(!o.stdin_frames || (o.frame_w >= 1 && o.frame_h >= 1), Err::usage,
            "--stdin-frames needs --frame-width and --frame-height");
    const Network net = load_model(o.model);
    const CascadeModel face = load_cascade(o.face_model);
    const CascadeModel eye = load_cascade(o.eye_model);
    PipelineParams params;
    params.face_scan.threads = o.common.threads;
    params.eye_scan.threads = o.common.threads;

    using Clock = std::chrono::steady_clock;
    auto classify = [&](const GrayImage& frame, const std::string& frame_id) {
        const auto t0 = Clock::now();
        std::string outcome;
        try {
            const Sample s = frame_to_sample(frame, face, eye, params, -1, {}, frame_id);
            Tensor x = Tensor::zeros({1, 1, kSampleSide, kSampleSide});
            for (size_t i = 0; i < s.input.data.size(); ++i)
                x.data[i] = static_cast<float>(s.input.data[i]);
            outcome = label_name(predict(net, x)[0]);
        } catch (const Error& e) {
            if (e.code() == Err::face_not_found) outcome = "face-not-found";
            else if (e.code() == Err::eyes_not_found) outcome = "eyes-not-found";
            else if (e.code() == Err::preprocess_failed) outcome = "preprocess-failed";
            else throw;
        }
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        char buf[512];
        std::snprintf(buf, sizeof buf, "%s,%s,%.2f\n", frame_id.c_str(), outcome.c_str(), ms);
        std::cout << buf;
    };

    if (o.stdin_frames) {
        // Raw-frame stream: width*height bytes per frame until EOF. This is
        // the adapter surface for live capture; no camera APIs in-tree.
        const size_t frame_bytes = static_cast<size_t>(o.frame_w) * o.frame_h;
        GrayImage frame(o.frame_w, o.frame_h);
        size_t index = 0;
        while (std::cin.read(reinterpret_cast<char*>(frame.data.data()),
                             static_cast<std::streamsize>(frame_bytes))) {
            classify(frame, "stdin-" + std::to_string(index++));
        }
        require(std::cin.gcount() == 0, Err::malformed_input,
                "trailing bytes on stdin do not form a whole frame");
        return 0;
    }

    for (const fs::path& path : list_pgms(o.frames_dir))
        classify(read_pgm(path), path.filename().string());
    return 0;
}

// ---------------------------------------------------------------------- bench

struct BenchOpts {
    CommonOpts common;
    std::string frames_dir, face_model, eye_model, model, report;
    int reps = 1;
};

int cmd_bench(const BenchOpts& o) {
    apply_common(o.common);
    // Missing inputs are usage errors for the benchmark.
    for (const std::string& path : {o.face_model, o.eye_model, o.model})
        require(fs::exists(path), Err::usage, "missing model file " + path);
    require(fs::is_directory(o.frames_dir), Err::usage,
            "missing frames directory " + o.frames_dir);
    std::vector<GrayImage> frames;
    for (const fs::path& p : list_pgms(o.frames_dir)) frames.push_back(read_pgm(p));
    require(!frames.empty(), Err::usage, "no PGM frames in " + o.frames_dir);
    const CascadeModel face = load_cascade(o.face_model);
    const CascadeModel eye = load_cascade(o.eye_model);
    const Network net = load_model(o.model);
    PipelineParams params;
    params.face_scan.threads = o.common.threads;
    params.eye_scan.threads = o.common.threads;

    const LatencyReport report = bench_pipeline(frames, face, eye, net, o.reps, params);
    std::cout << report.table();
    if (!o.report.empty()) write_text(o.report, report.to_json() + "\n");
    return 0;
}

// -------------------------------------------------------------- train-cascade

struct TrainCascadeOpts {
    CommonOpts common;
    std::string scenes_dir, out;
    std::string kind = "face";
    int max_stages = 10;
    double min_tpr = 0.995, max_fpr = 0.4;
    int max_weak = 60;
    int negatives = 2000;
};

int cmd_train_cascade(const TrainCascadeOpts& o) {
    apply_common(o.common);
    const std::vector<Scene> scenes = load_scene_set(o.scenes_dir);
    require(!scenes.empty(), Err::malformed_input, "no scenes in " + o.scenes_dir);

    CascadeTrainConfig cfg;
    cfg.stage = StageTarget{o.min_tpr, o.max_fpr, o.max_weak};
    cfg.max_stages = o.max_stages;
    cfg.negatives_per_stage = static_cast<size_t>(o.negatives);

    CascadeModel model;
    if (o.kind == "face") {
        const int bw = 24, bh = 24;
        const auto pos = face_positives(scenes, bw, bh);
        model = train_cascade(FeatureKind::lbp, bw, bh, pos,
                              make_face_negative_source(scenes, bw, bh, o.common.seed),
                              make_lbp_pool(bw, bh), cfg, &std::cerr);
    } else if (o.kind == "eye") {
        const int bw = 16, bh = 8;
        const auto pos = eye_positives(scenes, bw, bh);
        model = train_cascade(FeatureKind::haar, bw, bh, pos,
                              make_eye_negative_source(scenes, bw, bh, o.common.seed),
                              make_haar_pool(bw, bh), cfg, &std::cerr);
    } else {
        fail(Err::malformed_input, "train-cascade --kind must be face|eye");
    }
    save_cascade(model, o.out);
    std::cout << "wrote " << o.out << " (" << model.stages.size() << " stages)\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args) {
    CLI::App app{"gazekit: webcam gaze-direction pipeline (detection, CNN, training, benchmark)"};
    app.require_subcommand(1);

    SynthOpts synth_o;
    CLI::App* synth_c = app.add_subcommand("synth", "Generate synthetic eye-pair data or scenes");
    add_common(synth_c, synth_o.common);
    synth_c->add_option("--out", synth_o.out_dir, "Output directory")->required();
    synth_c->add_option("--mode", synth_o.mode, "pairs|scenes")->capture_default_str();
    synth_c->add_option("--subjects", synth_o.subjects, "Subject count")->capture_default_str();
    synth_c->add_option("--frames-per-label", synth_o.frames_per_label,
                        "Frames per subject per label")->capture_default_str();
    synth_c->add_option("--scenes", synth_o.scenes, "Scene count (scenes mode)")
        ->capture_default_str();
    synth_c->add_option("--frame-width", synth_o.frame_w, "Scene width")->capture_default_str();
    synth_c->add_option("--frame-height", synth_o.frame_h, "Scene height")->capture_default_str();

    AugmentOpts augment_o;
    CLI::App* augment_c = app.add_subcommand("augment", "Expand a manifest with augmented copies");
    add_common(augment_c, augment_o.common);
    augment_c->add_option("--manifest", augment_o.manifest, "Input manifest")->required();
    augment_c->add_option("--out", augment_o.out_dir, "Output directory")->required();
    augment_c->add_option("--multiplier", augment_o.multiplier, "Augmented copies per original")
        ->capture_default_str();
    augment_c->add_flag("--no-translate", augment_o.no_translate, "Disable translation");
    augment_c->add_flag("--no-rotate", augment_o.no_rotate, "Disable rotation");
    augment_c->add_flag("--no-brightness", augment_o.no_brightness, "Disable brightness shifts");
    augment_c->add_flag("--no-contrast", augment_o.no_contrast, "Disable contrast scaling");
    augment_c->add_flag("--no-hflip", augment_o.no_hflip, "Disable horizontal flips");

    SplitOpts split_o;
    CLI::App* split_c = app.add_subcommand("split", "Shuffle-split a manifest");
    add_common(split_c, split_o.common);
    split_c->add_option("--manifest", split_o.manifest, "Input manifest")->required();
    split_c->add_option("--fraction", split_o.fraction, "Test fraction")->capture_default_str();
    split_c->add_flag("--no-stratify", split_o.no_stratify, "Disable per-label stratification");
    split_c->add_option("--out-train", split_o.out_train, "Train manifest path")->required();
    split_c->add_option("--out-test", split_o.out_test, "Test manifest path")->required();

    TrainOpts train_o;
    CLI::App* train_c = app.add_subcommand("train", "Train the CNN on a manifest");
    add_common(train_c, train_o.common);
    train_c->add_option("--manifest", train_o.manifest, "Training manifest")->required();
    train_c->add_option("--val-manifest", train_o.val_manifest, "Validation manifest");
    train_c->add_option("--out", train_o.out_model, "Model output path")->capture_default_str();
    train_c->add_option("--history", train_o.history, "Per-epoch CSV output");
    train_c->add_option("--lr", train_o.lr, "Initial learning rate")->capture_default_str();
    train_c->add_option("--momentum", train_o.momentum, "SGD momentum")->capture_default_str();
    train_c->add_option("--batch", train_o.batch, "Minibatch size")->capture_default_str();
    train_c->add_option("--epochs", train_o.epochs, "Epochs")->capture_default_str();
    train_c->add_option("--c1", train_o.c1, "conv1 filters")->capture_default_str();
    train_c->add_option("--c2", train_o.c2, "conv2 filters")->capture_default_str();

    EvalOpts eval_o;
    CLI::App* eval_c = app.add_subcommand("eval", "Evaluate a model on a manifest");
    add_common(eval_c, eval_o.common);
    eval_c->add_option("--model", eval_o.model, "Model file")->required();
    eval_c->add_option("--manifest", eval_o.manifest, "Test manifest")->required();
    eval_c->add_option("--confusion-out", eval_o.confusion_out, "3x3 confusion CSV path");

    CrossvalOpts cv_o;
    CLI::App* cv_c = app.add_subcommand("crossval", "Subject-grouped k-fold cross-validation");
    add_common(cv_c, cv_o.train.common);
    cv_c->add_option("--manifest", cv_o.train.manifest, "Manifest")->required();
    cv_c->add_option("--k", cv_o.k, "Fold count")->capture_default_str();
    cv_c->add_option("--lr", cv_o.train.lr, "Initial learning rate")->capture_default_str();
    cv_c->add_option("--momentum", cv_o.train.momentum, "SGD momentum")->capture_default_str();
    cv_c->add_option("--batch", cv_o.train.batch, "Minibatch size")->capture_default_str();
    cv_c->add_option("--epochs", cv_o.train.epochs, "Epochs per fold")->capture_default_str();
    cv_c->add_option("--c1", cv_o.train.c1, "conv1 filters")->capture_default_str();
    cv_c->add_option("--c2", cv_o.train.c2, "conv2 filters")->capture_default_str();
    cv_c->add_flag("--no-shuffle-compare", cv_o.no_shuffle_compare,
                   "Skip the side-by-side shuffled-split run");
    cv_c->add_option("--report", cv_o.report, "JSON report path");

    DetectOpts detect_o;
    CLI::App* detect_c = app.add_subcommand("detect", "Run cascade detection on one image");
    add_common(detect_c, detect_o.common);
    detect_c->add_option("--image", detect_o.image, "PGM image")->required();
    detect_c->add_option("--face-model", detect_o.face_model, "Face cascade JSON")->required();
    detect_c->add_option("--eye-model", detect_o.eye_model, "Eye cascade JSON (optional)");
    detect_c->add_option("--out", detect_o.out, "JSON output path");

    InferOpts infer_o;
    CLI::App* infer_c = app.add_subcommand("infer", "Classify gaze for every frame in a directory");
    add_common(infer_c, infer_o.common);
    infer_c->add_option("--model", infer_o.model, "Model file")->required();
    infer_c->add_option("--face-model", infer_o.face_model, "Face cascade JSON")->required();
    infer_c->add_option("--eye-model", infer_o.eye_model, "Eye cascade JSON")->required();
    infer_c->add_option("--frames", infer_o.frames_dir, "Directory of PGM frames");
    infer_c->add_flag("--stdin-frames", infer_o.stdin_frames,
                      "Read raw 8-bit frames from standard input");
    infer_c->add_option("--frame-width", infer_o.frame_w, "Raw frame width (stdin mode)");
    infer_c->add_option("--frame-height", infer_o.frame_h, "Raw frame height (stdin mode)");

    BenchOpts bench_o;
    CLI::App* bench_c = app.add_subcommand("bench", "Latency benchmark over frames");
    add_common(bench_c, bench_o.common);
    bench_c->add_option("--frames", bench_o.frames_dir, "Directory of PGM frames")->required();
    bench_c->add_option("--face-model", bench_o.face_model, "Face cascade JSON")->required();
    bench_c->add_option("--eye-model", bench_o.eye_model, "Eye cascade JSON")->required();
    bench_c->add_option("--model", bench_o.model, "Model file")->required();
    bench_c->add_option("--reps", bench_o.reps, "Repetitions over the frame set")
        ->capture_default_str();
    bench_c->add_option("--report", bench_o.report, "JSON report path");

    TrainCascadeOpts tc_o;
    CLI::App* tc_c = app.add_subcommand("train-cascade", "Train a detection cascade on scenes");
    add_common(tc_c, tc_o.common);
    tc_c->add_option("--scenes", tc_o.scenes_dir, "Scene directory (with truth.jsonl)")->required();
    tc_c->add_option("--kind", tc_o.kind, "face|eye")->capture_default_str();
    tc_c->add_option("--out", tc_o.out, "Cascade JSON output")->required();
    tc_c->add_option("--max-stages", tc_o.max_stages, "Stage cap")->capture_default_str();
    tc_c->add_option("--min-tpr", tc_o.min_tpr, "Per-stage TPR target")->capture_default_str();
    tc_c->add_option("--max-fpr", tc_o.max_fpr, "Per-stage FPR target")->capture_default_str();
    tc_c->add_option("--max-weak", tc_o.max_weak, "Weak classifiers per stage")
        ->capture_default_str();
    tc_c->add_option("--negatives", tc_o.negatives, "Negatives mined per stage")
        ->capture_default_str();

    // Config-file injection can repeat an option before the user's explicit
    // value; the last occurrence wins everywhere.
    for (CLI::App* sub : app.get_subcommands(nullptr))
        for (CLI::Option* opt : sub->get_options())
            opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    try {
        const std::vector<std::string> args = apply_config_file(raw_args);
        // CLI11 parses argv-style reversed vectors.
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);

        if (*synth_c) return cmd_synth(synth_o);
        if (*augment_c) return cmd_augment(augment_o);
        if (*split_c) return cmd_split(split_o);
        if (*train_c) return cmd_train(train_o);
        if (*eval_c) return cmd_eval(eval_o);
        if (*cv_c) return cmd_crossval(cv_o);
        if (*detect_c) return cmd_detect(detect_o);
        if (*infer_c) return cmd_infer(infer_o);
        if (*bench_c) return cmd_bench(bench_o);
        if (*tc_c) return cmd_train_cascade(tc_o);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help/usage to the right stream
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == Err::usage ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace gazekit
