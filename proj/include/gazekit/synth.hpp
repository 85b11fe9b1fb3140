#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gazekit/cascade.hpp"
#include "gazekit/cascade_train.hpp"
#include "gazekit/dataset.hpp"
#include "gazekit/preprocess.hpp"

namespace gazekit {

// Gaze-label convention (camera-mirrored, fixed project-wide): the frame is
// what the webcam sees, so a subject looking to *their* right (label 0,
// "right") moves both pupils toward the image's left. "left" (label 1) is the
// mirror case; "vague" (label 2) keeps pupils within a third of the full
// offset of center. Pupil offset magnitude is 0.25 of the eye width.

inline constexpr double kPupilOffsetFrac = 0.25;

struct SubjectStyle {
    uint8_t skin = 160;
    uint8_t sclera = 220;
    uint8_t iris = 40;
    double eye_aspect = 2.2;  // eye ellipse width / height
    double openness = 0.8;    // (0.3, 1.0]
    int noise_amp = 6;

    static SubjectStyle from_seed(uint64_t seed);
};

struct SceneTruth {
    Rect face_box;
    EyePair eyes;
    int label = 0;
};

struct Scene {
    GrayImage frame;
    SceneTruth truth;
};

// 72x72 gray eye-pair composite, ready for binarization: the subject's right
// eye strip on top, left eye strip below.
GrayImage gen_eye_pair(int label, const SubjectStyle& style, uint64_t seed);

Scene gen_scene(const SubjectStyle& style, int label, uint64_t seed, int frame_w = 640,
                int frame_h = 480);

// Writes PGM composites plus manifest.jsonl (balanced across the 3 labels,
// one style per subject) and returns the manifest.
Manifest gen_dataset(int n_subjects, int frames_per_subject_per_label, uint64_t seed,
                     const std::filesystem::path& out_dir);

std::vector<Scene> gen_scene_set(int n, uint64_t seed, int frame_w, int frame_h);
void write_scene_set(std::span<const Scene> scenes, const std::filesystem::path& out_dir);
std::vector<Scene> load_scene_set(const std::filesystem::path& dir);

// Detector-training utilities over scene corpora. jitter adds that many
// randomly shifted/rescaled variants of every truth crop, which widens the
// cascade's acceptance region so the sliding-window grid hits it often
// enough to survive neighbor grouping.
std::vector<GrayImage> face_positives(std::span<const Scene> scenes, int base_w, int base_h,
                                      int jitter = 0, uint64_t seed = 42);
std::vector<GrayImage> eye_positives(std::span<const Scene> scenes, int base_w, int base_h,
                                     int jitter = 0, uint64_t seed = 42);
NegativeSource make_face_negative_source(std::span<const Scene> scenes, int base_w, int base_h,
                                         uint64_t seed);
NegativeSource make_eye_negative_source(std::span<const Scene> scenes, int base_w, int base_h,
                                        uint64_t seed);

}  // namespace gazekit
