#include "gazekit/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace gazekit {

Sample make_sample(GrayImage composite, int label, std::string subject_id,
                   std::string source_frame) {
    require(composite.width == kSampleSide && composite.height == kSampleSide, Err::preprocess_failed,
            "sample composite must be 72x72");
    require(label >= -1 && label <= 2, Err::malformed_input,
            "label must be -1 (unset) or in {0,1,2}, got " + std::to_string(label));
    Sample s;
    try {
        s.input = binarize_otsu(composite).first;
    } catch (const Error& e) {
        if (e.code() == Err::degenerate_histogram)
            fail(Err::preprocess_failed, std::string("composite binarization failed: ") + e.what());
        throw;
    }
    s.composite = std::move(composite);
    s.label = label;
    s.subject_id = std::move(subject_id);
    s.source_frame = std::move(source_frame);
    return s;
}

EyePair locate_eyes(const GrayImage& img, const Rect& face, const CascadeModel& eye_model,
                    const ScanParams& scan, double region_fraction) {
    check_rect_in(face, img.width, img.height, "face");
    const int region_h = std::max(1, static_cast<int>(std::llround(face.h * region_fraction)));
    const Rect region{face.x, face.y, face.w, std::min(region_h, face.h)};
    if (region.w < eye_model.base_w || region.h < eye_model.base_h)
        fail(Err::eyes_not_found, "face region smaller than the eye base window");

    const std::vector<Detection> found = detect(crop(img, region), eye_model, scan);
    if (found.size() < 2) fail(Err::eyes_not_found, "fewer than two eye detections in the face region");

    const double midline = face.x + face.w / 2.0;
    const Detection* best_left_side = nullptr;   // image-left of midline: subject's right eye
    const Detection* best_right_side = nullptr;
    auto better = [](const Detection* cur, const Detection& cand) {
        if (!cur) return true;
        if (cand.neighbors != cur->neighbors) return cand.neighbors > cur->neighbors;
        return cand.score > cur->score;
    };
    std::vector<Detection> shifted(found);
    for (auto& d : shifted) {
        d.box.x += region.x;
        d.box.y += region.y;
    }
    for (const Detection& d : shifted) {
        if (d.box.center_x() < midline) {
            if (better(best_left_side, d)) best_left_side = &d;
        } else {
            if (better(best_right_side, d)) best_right_side = &d;
        }
    }
    if (!best_left_side || !best_right_side)
        fail(Err::eyes_not_found, "eye detections do not cover both sides of the face midline");

    EyePair eyes;
    eyes.right_box = best_left_side->box;  // image-left detection is the subject's right eye
    eyes.left_box = best_right_side->box;
    return eyes;
}

GrayImage compose_eye_pair_gray(const GrayImage& img, const EyePair& eyes) {
    check_rect_in(eyes.right_box, img.width, img.height, "right eye");
    check_rect_in(eyes.left_box, img.width, img.height, "left eye");
    const int half = kSampleSide / 2;
    const GrayImage top = resize_bilinear(crop(img, eyes.right_box), kSampleSide, half);
    const GrayImage bottom = resize_bilinear(crop(img, eyes.left_box), kSampleSide, half);
    GrayImage out(kSampleSide, kSampleSide);
    std::copy(top.data.begin(), top.data.end(), out.data.begin());
    std::copy(bottom.data.begin(), bottom.data.end(), out.data.begin() + top.data.size());
    return out;
}

BinaryImage compose_eye_pair(const GrayImage& img, const EyePair& eyes) {
    const GrayImage gray = compose_eye_pair_gray(img, eyes);
    try {
        return binarize_otsu(gray).first;
    } catch (const Error& e) {
        if (e.code() == Err::degenerate_histogram)
            fail(Err::preprocess_failed, std::string("composite binarization failed: ") + e.what());
        throw;
    }
}

const Detection* select_best_face(std::span<const Detection> detections) {
    const Detection* best = nullptr;
    for (const Detection& d : detections) {
        if (!best) {
            best = &d;
            continue;
        }
        if (d.neighbors != best->neighbors) {
            if (d.neighbors > best->neighbors) best = &d;
        } else if (d.box.area() != best->box.area()) {
            if (d.box.area() > best->box.area()) best = &d;
        } else if (d.box.y != best->box.y) {
            if (d.box.y < best->box.y) best = &d;
        } else if (d.box.x < best->box.x) {
            best = &d;
        }
    }
    return best;
}

Sample frame_to_sample(const GrayImage& frame, const CascadeModel& face_model,
                       const CascadeModel& eye_model, const PipelineParams& params, int label,
                       std::string subject_id, std::string source_frame) {
    const std::vector<Detection> faces = detect(frame, face_model, params.face_scan);
    const Detection* face = select_best_face(faces);
    if (!face) fail(Err::face_not_found, "no face detection in frame " + source_frame);

    const EyePair eyes =
        locate_eyes(frame, face->box, eye_model, params.eye_scan, params.eye_region_fraction);
    GrayImage composite = compose_eye_pair_gray(frame, eyes);
    return make_sample(std::move(composite), label, std::move(subject_id), std::move(source_frame));
}

}  // namespace gazekit
