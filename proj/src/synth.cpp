#include "gazekit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "gazekit/pgm.hpp"
#include "gazekit/rng.hpp"

namespace gazekit {

namespace {

using nlohmann::ordered_json;

void check_label(int label) {
    require(label >= 0 && label <= 2, Err::malformed_input,
            "label must be in {0,1,2}, got " + std::to_string(label));
}

// Signed pupil offset as a fraction of eye width for a label. Camera-mirrored:
// "right" moves pupils toward image-left (negative x).
double pupil_offset_frac(int label, Rng& rng) {
    switch (label) {
        case gaze_right: return -kPupilOffsetFrac;
        case gaze_left: return kPupilOffsetFrac;
        default: return rng.uniform(-1.0, 1.0) * (kPupilOffsetFrac / 3.0) * 0.9;
    }
}

void fill_ellipse(GrayImage& img, double cx, double cy, double rx, double ry, uint8_t value) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + rx)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + ry)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double ex = (x - cx) / rx, ey = (y - cy) / ry;
            if (ex * ex + ey * ey <= 1.0) img.at(x, y) = value;
        }
    }
}

void fill_rect(GrayImage& img, const Rect& r, uint8_t value) {
    for (int y = std::max(0, r.y); y < std::min(img.height, r.y + r.h); ++y)
        for (int x = std::max(0, r.x); x < std::min(img.width, r.x + r.w); ++x) img.at(x, y) = value;
}

// Draws one eye (sclera ellipse, iris disc, darker pupil core) into a box.
void render_eye(GrayImage& img, const Rect& box, const SubjectStyle& style, double offset_frac) {
    const double cx = box.x + box.w / 2.0, cy = box.y + box.h / 2.0;
    const double ry = std::max(2.5, 0.40 * box.h * style.openness);
    const double rx = std::min(0.46 * box.w, ry * style.eye_aspect);
    fill_ellipse(img, cx, cy, rx, ry, style.sclera);
    const double ri = std::max(2.0, 0.80 * ry);
    const double px = cx + offset_frac * 2.0 * rx;
    fill_ellipse(img, px, cy, ri, ri, style.iris);
    fill_ellipse(img, px, cy, ri * 0.5, ri * 0.5,
                 static_cast<uint8_t>(std::max(0, style.iris - 20)));
}

void add_noise(GrayImage& img, int amp, Rng& rng) {
    if (amp <= 0) return;
    for (auto& v : img.data)
        v = static_cast<uint8_t>(std::clamp(static_cast<int>(v) + rng.uniform_int(-amp, amp), 0, 255));
}

}  // namespace

SubjectStyle SubjectStyle::from_seed(uint64_t seed) {
    Rng rng(derive_seed(seed, {fnv1a64("style")}));
    SubjectStyle s;
    s.skin = static_cast<uint8_t>(rng.uniform_int(120, 200));
    s.sclera = static_cast<uint8_t>(rng.uniform_int(185, 250));
    s.iris = static_cast<uint8_t>(rng.uniform_int(15, 80));
    s.eye_aspect = rng.uniform(1.8, 2.6);
    s.openness = rng.uniform(0.55, 1.0);
    s.noise_amp = rng.uniform_int(3, 10);
    return s;
}

GrayImage gen_eye_pair(int label, const SubjectStyle& style, uint64_t seed) {
    check_label(label);
    Rng rng(derive_seed(seed, {fnv1a64("eyepair"), static_cast<uint64_t>(label)}));
    const double offset = pupil_offset_frac(label, rng);

    GrayImage img(kSampleSide, kSampleSide, style.skin);
    const int half = kSampleSide / 2;
    render_eye(img, Rect{0, 0, kSampleSide, half}, style, offset);       // subject's right eye
    render_eye(img, Rect{0, half, kSampleSide, half}, style, offset);    // subject's left eye
    add_noise(img, style.noise_amp, rng);
    return img;
}

Scene gen_scene(const SubjectStyle& style, int label, uint64_t seed, int frame_w, int frame_h) {
    check_label(label);
    require(frame_w >= 320 && frame_h >= 240, Err::malformed_input,
            "scene frames must be at least 320x240");
    Rng rng(derive_seed(seed, {fnv1a64("scene"), static_cast<uint64_t>(label)}));

    // Low-frequency textured background.
    const int base = rng.uniform_int(55, 105);
    GrayImage coarse(16, 12);
    for (auto& v : coarse.data)
        v = static_cast<uint8_t>(std::clamp(base + rng.uniform_int(-30, 30), 0, 255));
    GrayImage frame = resize_bilinear(coarse, frame_w, frame_h);

    // Background clutter: a few dark shapes that are not faces.
    const int face_side = rng.uniform_int(static_cast<int>(0.30 * std::min(frame_w, frame_h)),
                                          static_cast<int>(0.52 * std::min(frame_w, frame_h)));
    const int margin = 6;
    const int fx = rng.uniform_int(margin, frame_w - face_side - margin);
    const int fy = rng.uniform_int(margin, frame_h - face_side - margin);
    const Rect face_box{fx, fy, face_side, face_side};

    const int n_clutter = rng.uniform_int(2, 4);
    for (int i = 0; i < n_clutter; ++i) {
        for (int attempt = 0; attempt < 20; ++attempt) {
            const int cw = rng.uniform_int(12, 48);
            const int ch = rng.uniform_int(12, 48);
            const Rect r{rng.uniform_int(0, frame_w - cw - 1), rng.uniform_int(0, frame_h - ch - 1),
                         cw, ch};
            const Rect overlap_probe{r.x - 8, r.y - 8, r.w + 16, r.h + 16};
            if (iou(overlap_probe, face_box) > 0.0) continue;
            const uint8_t shade = static_cast<uint8_t>(rng.uniform_int(15, 85));
            if (rng.below(2)) fill_rect(frame, r, shade);
            else fill_ellipse(frame, r.x + r.w / 2.0, r.y + r.h / 2.0, r.w / 2.0, r.h / 2.0, shade);
            break;
        }
    }

    // Face: skin ellipse filling the square truth box.
    const double fcx = fx + face_side / 2.0, fcy = fy + face_side / 2.0;
    fill_ellipse(frame, fcx, fcy, 0.49 * face_side, 0.50 * face_side, style.skin);

    // Eyes in the upper part of the face, 2:1 boxes.
    const int eye_w = std::max(12, static_cast<int>(std::llround(0.26 * face_side)));
    const int eye_h = std::max(6, eye_w / 2);
    const double eye_cy = fy + 0.38 * face_side;
    const double eye_dx = 0.21 * face_side;
    const Rect right_eye{static_cast<int>(std::llround(fcx - eye_dx - eye_w / 2.0)),
                         static_cast<int>(std::llround(eye_cy - eye_h / 2.0)), eye_w, eye_h};
    const Rect left_eye{static_cast<int>(std::llround(fcx + eye_dx - eye_w / 2.0)),
                        static_cast<int>(std::llround(eye_cy - eye_h / 2.0)), eye_w, eye_h};

    const double offset = pupil_offset_frac(label, rng);
    render_eye(frame, right_eye, style, offset);
    render_eye(frame, left_eye, style, offset);

    // Mouth bar.
    const int mouth_w = static_cast<int>(std::llround(0.36 * face_side));
    const int mouth_h = std::max(3, static_cast<int>(std::llround(0.06 * face_side)));
    fill_rect(frame,
              Rect{static_cast<int>(std::llround(fcx - mouth_w / 2.0)),
                   static_cast<int>(std::llround(fy + 0.72 * face_side)), mouth_w, mouth_h},
              45);

    add_noise(frame, style.noise_amp, rng);

    Scene scene;
    scene.frame = std::move(frame);
    scene.truth.face_box = face_box;
    scene.truth.eyes = EyePair{right_eye, left_eye};
    scene.truth.label = label;
    return scene;
}

Manifest gen_dataset(int n_subjects, int frames_per_subject_per_label, uint64_t seed,
                     const std::filesystem::path& out_dir) {
    require(n_subjects >= 1 && frames_per_subject_per_label >= 1, Err::malformed_input,
            "subject and frame counts must be >= 1");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    require(!ec && std::filesystem::is_directory(out_dir), Err::io,
            "cannot create output directory " + out_dir.string());

    Manifest m;
    char name[64];
    for (int s = 0; s < n_subjects; ++s) {
        const uint64_t subj_seed = derive_seed(seed, {fnv1a64("subject"), static_cast<uint64_t>(s)});
        const SubjectStyle style = SubjectStyle::from_seed(subj_seed);
        char subject_id[16];
        std::snprintf(subject_id, sizeof subject_id, "s%03d", s);
        for (int label = 0; label < 3; ++label) {
            for (int i = 0; i < frames_per_subject_per_label; ++i) {
                const uint64_t sample_seed = derive_seed(
                    seed, {static_cast<uint64_t>(s), static_cast<uint64_t>(label),
                           static_cast<uint64_t>(i)});
                const GrayImage img = gen_eye_pair(label, style, sample_seed);
                std::snprintf(name, sizeof name, "%s_l%d_f%04d.pgm", subject_id, label, i);
                write_pgm(out_dir / name, img);
                char tag[32];
                std::snprintf(tag, sizeof tag, "%016llx",
                              static_cast<unsigned long long>(sample_seed));
                m.entries.push_back(
                    ManifestEntry{name, label, subject_id, Origin::original, tag});
            }
        }
    }
    save_manifest(m, out_dir / "manifest.jsonl");
    return m;
}

std::vector<Scene> gen_scene_set(int n, uint64_t seed, int frame_w, int frame_h) {
    std::vector<Scene> scenes;
    scenes.reserve(n);
    for (int i = 0; i < n; ++i) {
        const uint64_t style_seed = derive_seed(seed, {fnv1a64("scene-style"), static_cast<uint64_t>(i)});
        const uint64_t scene_seed = derive_seed(seed, {fnv1a64("scene-frame"), static_cast<uint64_t>(i)});
        scenes.push_back(gen_scene(SubjectStyle::from_seed(style_seed), i % 3, scene_seed, frame_w,
                                   frame_h));
    }
    return scenes;
}

namespace {

ordered_json rect_json(const Rect& r) { return ordered_json{r.x, r.y, r.w, r.h}; }

Rect rect_from(const ordered_json& j) {
    return Rect{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

}  // namespace

void write_scene_set(std::span<const Scene> scenes, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    require(!ec && std::filesystem::is_directory(out_dir), Err::io,
            "cannot create output directory " + out_dir.string());
    std::ofstream truth(out_dir / "truth.jsonl", std::ios::trunc);
    require(truth.good(), Err::io, "cannot write truth.jsonl");
    char name[64];
    for (size_t i = 0; i < scenes.size(); ++i) {
        std::snprintf(name, sizeof name, "scene_%04zu.pgm", i);
        write_pgm(out_dir / name, scenes[i].frame);
        ordered_json j;
        j["frame"] = name;
        j["face"] = rect_json(scenes[i].truth.face_box);
        j["eye_right"] = rect_json(scenes[i].truth.eyes.right_box);
        j["eye_left"] = rect_json(scenes[i].truth.eyes.left_box);
        j["label"] = scenes[i].truth.label;
        truth << j.dump() << "\n";
    }
}

std::vector<Scene> load_scene_set(const std::filesystem::path& dir) {
    std::ifstream truth(dir / "truth.jsonl");
    require(truth.good(), Err::io, "cannot open " + (dir / "truth.jsonl").string());
    std::vector<Scene> scenes;
    std::string line;
    size_t line_no = 0;
    while (std::getline(truth, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const ordered_json j = ordered_json::parse(line);
            Scene s;
            s.frame = read_pgm(dir / j.at("frame").get<std::string>());
            s.truth.face_box = rect_from(j.at("face"));
            s.truth.eyes.right_box = rect_from(j.at("eye_right"));
            s.truth.eyes.left_box = rect_from(j.at("eye_left"));
            s.truth.label = j.at("label").get<int>();
            scenes.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            fail(Err::validation,
                 (dir / "truth.jsonl").string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return scenes;
}

namespace {

Rect jitter_box(const Rect& box, const GrayImage& frame, Rng& rng) {
    for (int attempt = 0; attempt < 16; ++attempt) {
        const double scale = rng.uniform(0.90, 1.12);
        const double dx = rng.uniform(-0.08, 0.08) * box.w;
        const double dy = rng.uniform(-0.08, 0.08) * box.h;
        Rect r;
        r.w = std::max(4, static_cast<int>(std::llround(box.w * scale)));
        r.h = std::max(4, static_cast<int>(std::llround(box.h * scale)));
        r.x = static_cast<int>(std::llround(box.x + dx + (box.w - r.w) / 2.0));
        r.y = static_cast<int>(std::llround(box.y + dy + (box.h - r.h) / 2.0));
        if (r.x >= 0 && r.y >= 0 && r.x + r.w <= frame.width && r.y + r.h <= frame.height) return r;
    }
    return box;
}

void append_crops(std::vector<GrayImage>& out, const Scene& s, const Rect& box, int base_w,
                  int base_h, int jitter, Rng& rng) {
    out.push_back(resize_bilinear(crop(s.frame, box), base_w, base_h));
    for (int j = 0; j < jitter; ++j)
        out.push_back(resize_bilinear(crop(s.frame, jitter_box(box, s.frame, rng)), base_w, base_h));
}

}  // namespace

std::vector<GrayImage> face_positives(std::span<const Scene> scenes, int base_w, int base_h,
                                      int jitter, uint64_t seed) {
    std::vector<GrayImage> out;
    out.reserve(scenes.size() * (1 + jitter));
    Rng rng(derive_seed(seed, {fnv1a64("face-jitter")}));
    for (const Scene& s : scenes) append_crops(out, s, s.truth.face_box, base_w, base_h, jitter, rng);
    return out;
}

std::vector<GrayImage> eye_positives(std::span<const Scene> scenes, int base_w, int base_h,
                                     int jitter, uint64_t seed) {
    std::vector<GrayImage> out;
    out.reserve(scenes.size() * 2 * (1 + jitter));
    Rng rng(derive_seed(seed, {fnv1a64("eye-jitter")}));
    for (const Scene& s : scenes) {
        append_crops(out, s, s.truth.eyes.right_box, base_w, base_h, jitter, rng);
        append_crops(out, s, s.truth.eyes.left_box, base_w, base_h, jitter, rng);
    }
    return out;
}

namespace {

bool model_accepts(const CascadeModel& model, const GrayImage& patch) {
    if (model.stages.empty()) return true;
    return eval_cascade(integral(patch), model, Rect{0, 0, patch.width, patch.height}).accepted;
}

// Hard-negative mining: scan-driven false positives first, random windows to
// fill. Every returned patch is base-window sized and accepted by `current`.
std::vector<GrayImage> mine_negatives(std::span<const Scene> scenes, const CascadeModel& current,
                                      size_t want, int base_w, int base_h, uint64_t seed,
                                      bool within_face, const double exclude_iou = 0.3) {
    std::vector<GrayImage> out;
    Rng rng(derive_seed(seed, {fnv1a64(within_face ? "eye-negatives" : "face-negatives"),
                               current.stages.size()}));

    auto truth_overlap = [&](const Scene& s, const Rect& box) {
        if (!within_face) return iou(box, s.truth.face_box);
        return std::max(iou(box, s.truth.eyes.right_box), iou(box, s.truth.eyes.left_box));
    };

    // Scan-mined false positives (only meaningful once stages exist).
    if (!current.stages.empty()) {
        ScanParams scan;
        scan.min_neighbors = 1;
        scan.step_fraction = 0.08;
        for (const Scene& s : scenes) {
            if (out.size() >= want) break;
            const GrayImage* domain = &s.frame;
            GrayImage face_crop;
            Rect origin{0, 0, 0, 0};
            if (within_face) {
                face_crop = crop(s.frame, s.truth.face_box);
                domain = &face_crop;
                origin = s.truth.face_box;
            }
            for (const Detection& d : detect(*domain, current, scan)) {
                Rect box = d.box;
                box.x += origin.x;
                box.y += origin.y;
                if (truth_overlap(s, box) >= exclude_iou) continue;
                GrayImage patch = resize_bilinear(crop(s.frame, box), base_w, base_h);
                if (model_accepts(current, patch)) out.push_back(std::move(patch));
                if (out.size() >= want) break;
            }
        }
    }

    // Random-window fill.
    const size_t max_attempts = want * 300 + 1000;
    for (size_t attempt = 0; attempt < max_attempts && out.size() < want; ++attempt) {
        const Scene& s = scenes[rng.below(static_cast<uint32_t>(scenes.size()))];
        Rect domain = within_face ? s.truth.face_box : Rect{0, 0, s.frame.width, s.frame.height};
        const int min_w = base_w;
        const int max_w = within_face ? std::max(min_w, domain.w / 2) : std::min(domain.w, domain.h);
        if (max_w < min_w) continue;
        const int w = rng.uniform_int(min_w, max_w);
        const int h = std::max(base_h, static_cast<int>(std::llround(
                                           static_cast<double>(w) * base_h / base_w)));
        if (w > domain.w || h > domain.h) continue;
        const Rect box{domain.x + rng.uniform_int(0, domain.w - w),
                       domain.y + rng.uniform_int(0, domain.h - h), w, h};
        if (truth_overlap(s, box) >= exclude_iou) continue;
        GrayImage patch = resize_bilinear(crop(s.frame, box), base_w, base_h);
        if (model_accepts(current, patch)) out.push_back(std::move(patch));
    }
    return out;
}

}  // namespace

NegativeSource make_face_negative_source(std::span<const Scene> scenes, int base_w, int base_h,
                                         uint64_t seed) {
    std::vector<Scene> copy(scenes.begin(), scenes.end());
    return [copy = std::move(copy), base_w, base_h, seed](const CascadeModel& current, size_t want) {
        return mine_negatives(copy, current, want, base_w, base_h, seed, /*within_face=*/false);
    };
}

NegativeSource make_eye_negative_source(std::span<const Scene> scenes, int base_w, int base_h,
                                        uint64_t seed) {
    std::vector<Scene> copy(scenes.begin(), scenes.end());
    return [copy = std::move(copy), base_w, base_h, seed](const CascadeModel& current, size_t want) {
        return mine_negatives(copy, current, want, base_w, base_h, seed, /*within_face=*/true);
    };
}

}  // namespace gazekit
