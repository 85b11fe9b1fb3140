#pragma once

#include <span>
#include <string>

#include "gazekit/cascade.hpp"
#include "gazekit/image.hpp"

namespace gazekit {

// Eye boxes in image coordinates. right_box is the subject's right eye and
// therefore sits on the image-left side (its center x is the smaller one).
struct EyePair {
    Rect right_box;
    Rect left_box;
};

inline constexpr int kSampleSide = 72;

enum GazeLabel : int { gaze_right = 0, gaze_left = 1, gaze_vague = 2 };

// One CNN input: the 72x72 binary composite plus the gray composite it was
// thresholded from (augmentation re-binarizes after transforming the gray).
// label -1 means unlabeled (inference).
struct Sample {
    BinaryImage input;
    GrayImage composite;
    int label = -1;
    std::string subject_id;
    std::string source_frame;
};

Sample make_sample(GrayImage composite, int label, std::string subject_id, std::string source_frame);

struct PipelineParams {
    ScanParams face_scan{};
    ScanParams eye_scan{};
    double eye_region_fraction = 0.55;  // eyes are searched in the top part of the face box
};

// Runs the eye cascade over the upper part of the face box and keeps the best
// detection on each side of the face midline. Fewer than two sides covered
// (or no detections at all) raises eyes-not-found.
EyePair locate_eyes(const GrayImage& img, const Rect& face, const CascadeModel& eye_model,
                    const ScanParams& scan = {}, double region_fraction = 0.55);

// Crop both eyes, resize each to 72x36, stack vertically (subject's right eye
// on top), then binarize the composite with Otsu.
GrayImage compose_eye_pair_gray(const GrayImage& img, const EyePair& eyes);
BinaryImage compose_eye_pair(const GrayImage& img, const EyePair& eyes);

// Face selection policy: most neighbors, then larger area, then topmost,
// then leftmost. Exposed for tests.
const Detection* select_best_face(std::span<const Detection> detections);

Sample frame_to_sample(const GrayImage& frame, const CascadeModel& face_model,
                       const CascadeModel& eye_model, const PipelineParams& params = {},
                       int label = -1, std::string subject_id = {}, std::string source_frame = {});

}  // namespace gazekit
