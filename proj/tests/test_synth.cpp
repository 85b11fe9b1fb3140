#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "gazekit/rng.hpp"
#include "gazekit/synth.hpp"

using namespace gazekit;

namespace {

// Mean x-offset (relative to strip center) of dark pixels in the top eye
// strip; the sign of this statistic is the class signal.
double pupil_offset_statistic(const GrayImage& pair) {
    double sum = 0, count = 0;
    for (int y = 0; y < 36; ++y)
        for (int x = 0; x < 72; ++x)
            if (pair.at(x, y) < 100) {
                sum += x - 35.5;
                count += 1;
            }
    return count > 0 ? sum / count : 0.0;
}

}  // namespace

TEST_CASE("gen_eye_pair: determinism and label conventions") {
    const SubjectStyle style = SubjectStyle::from_seed(7);
    const GrayImage a = gen_eye_pair(gaze_right, style, 1234);
    const GrayImage b = gen_eye_pair(gaze_right, style, 1234);
    CHECK(a == b);
    const GrayImage c = gen_eye_pair(gaze_right, style, 1235);
    CHECK_FALSE(a == c);

    // Camera-mirrored: "right" pupils sit image-left of each eye center,
    // "left" pupils image-right, vague near the center.
    for (int seed = 0; seed < 25; ++seed) {
        const SubjectStyle s = SubjectStyle::from_seed(seed);
        const double right = pupil_offset_statistic(gen_eye_pair(gaze_right, s, seed * 11 + 1));
        const double left = pupil_offset_statistic(gen_eye_pair(gaze_left, s, seed * 11 + 2));
        const double vague = pupil_offset_statistic(gen_eye_pair(gaze_vague, s, seed * 11 + 3));
        CHECK(right < -2.0);
        CHECK(left > 2.0);
        // Vague stays strictly nearer the center than either full offset.
        CHECK(std::abs(vague) < std::abs(right));
        CHECK(std::abs(vague) < std::abs(left));
        CHECK(std::abs(vague) < 6.0);
    }
    CHECK_THROWS_AS(gen_eye_pair(5, style, 1), Error);
}

TEST_CASE("gen_eye_pair: pupil is darker than sclera across 100 seeds") {
    for (int seed = 0; seed < 100; ++seed) {
        const SubjectStyle style = SubjectStyle::from_seed(derive_seed(55, {(uint64_t)seed}));
        const GrayImage img = gen_eye_pair(seed % 3, style, seed);
        // Pixel statistics: mean of the darkest decile (pupil) vs brightest
        // decile (sclera) in the top strip.
        std::vector<uint8_t> top(img.data.begin(), img.data.begin() + 36 * 72);
        std::sort(top.begin(), top.end());
        double dark = 0, bright = 0;
        const size_t k = top.size() / 10;
        for (size_t i = 0; i < k; ++i) {
            dark += top[i];
            bright += top[top.size() - 1 - i];
        }
        CHECK(dark / k < bright / k - 50);
    }
}

TEST_CASE("class separability: offset statistic sign differs for every style") {
    for (int subj = 0; subj < 20; ++subj) {
        const SubjectStyle style = SubjectStyle::from_seed(derive_seed(99, {(uint64_t)subj}));
        double right_mean = 0, left_mean = 0;
        for (int i = 0; i < 10; ++i) {
            right_mean += pupil_offset_statistic(gen_eye_pair(gaze_right, style, i));
            left_mean += pupil_offset_statistic(gen_eye_pair(gaze_left, style, 1000 + i));
        }
        CHECK(right_mean / 10 < 0);
        CHECK(left_mean / 10 > 0);
    }
}

TEST_CASE("gen_scene: truth geometry invariants") {
    for (int i = 0; i < 30; ++i) {
        const SubjectStyle style = SubjectStyle::from_seed(derive_seed(3, {(uint64_t)i}));
        const Scene s = gen_scene(style, i % 3, i, 320, 240);
        const SceneTruth& t = s.truth;

        CHECK(t.face_box.x >= 0);
        CHECK(t.face_box.y >= 0);
        CHECK(t.face_box.x + t.face_box.w <= s.frame.width);
        CHECK(t.face_box.y + t.face_box.h <= s.frame.height);

        // Eyes nested in the upper 55% of the face box, right eye image-left.
        for (const Rect& e : {t.eyes.right_box, t.eyes.left_box}) {
            CHECK(e.x >= t.face_box.x);
            CHECK(e.y >= t.face_box.y);
            CHECK(e.x + e.w <= t.face_box.x + t.face_box.w);
            CHECK(e.y + e.h <= t.face_box.y + static_cast<int>(0.55 * t.face_box.h));
        }
        CHECK(t.eyes.right_box.center_x() < t.eyes.left_box.center_x());
    }
    const SubjectStyle style = SubjectStyle::from_seed(1);
    const Scene a = gen_scene(style, 0, 77, 320, 240);
    const Scene b = gen_scene(style, 0, 77, 320, 240);
    CHECK(a.frame == b.frame);
    CHECK_THROWS_AS(gen_scene(style, 0, 1, 100, 100), Error);
}

TEST_CASE("gen_dataset: counts, balance, and manifest validity") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "gazekit_synth_test";
    fs::remove_all(dir);

    const Manifest m = gen_dataset(30, 5, 42, dir);
    CHECK(m.entries.size() == 30 * 3 * 5);

    std::array<int, 3> hist{};
    for (const auto& e : m.entries) ++hist[e.label];
    CHECK(hist[0] == 150);
    CHECK(hist[1] == 150);
    CHECK(hist[2] == 150);

    // The manifest it wrote passes load_manifest validation.
    const Manifest back = load_manifest(dir / "manifest.jsonl");
    CHECK(back.entries.size() == m.entries.size());

    std::set<std::string> subjects;
    for (const auto& e : back.entries) subjects.insert(e.subject);
    CHECK(subjects.size() == 30);
    fs::remove_all(dir);
}

TEST_CASE("scene corpus round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "gazekit_scene_test";
    fs::remove_all(dir);
    const auto scenes = gen_scene_set(4, 9, 320, 240);
    write_scene_set(scenes, dir);
    const auto back = load_scene_set(dir);
    REQUIRE(back.size() == scenes.size());
    for (size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].frame == scenes[i].frame);
        CHECK(back[i].truth.face_box == scenes[i].truth.face_box);
        CHECK(back[i].truth.eyes.right_box == scenes[i].truth.eyes.right_box);
        CHECK(back[i].truth.label == scenes[i].truth.label);
    }
    fs::remove_all(dir);
}
