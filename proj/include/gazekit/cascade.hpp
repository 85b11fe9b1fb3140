#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "gazekit/image.hpp"

namespace gazekit {

enum class FeatureKind { haar, lbp };

struct WeightedRect {
    Rect r;
    int weight = 0;
};

// Signed weighted sum of rectangle sums inside a base window, normalized by
// the evaluated window's area. Features whose weighted areas cancel
// (sum weight*area == 0) are invariant to constant brightness shifts; that
// property is required of serialized models but not of ad-hoc training
// features (a plain mean-intensity probe is a legal pool member).
struct HaarFeature {
    std::vector<WeightedRect> rects;
    int base_w = 0, base_h = 0;

    long long weighted_area() const {
        long long s = 0;
        for (const auto& wr : rects) s += wr.weight * wr.r.area();
        return s;
    }
};

// 3x3 grid of equal cells; cell gives the top-left cell's rect inside the
// base window. The 8-bit code compares each neighbor cell sum against the
// center (neighbor >= center -> bit set), visiting neighbors clockwise from
// the top-left and shifting left, so the top-left neighbor lands in bit 7.
struct LbpFeature {
    Rect cell;
    int base_w = 0, base_h = 0;
};

struct LbpMask {
    std::array<uint64_t, 4> words{};

    bool test(uint8_t code) const { return (words[code >> 6] >> (code & 63)) & 1; }
    void set(uint8_t code) { words[code >> 6] |= uint64_t(1) << (code & 63); }
    bool operator==(const LbpMask&) const = default;
};

struct HaarWeak {
    HaarFeature feature;
    double threshold = 0;   // value < threshold -> left_vote, else right_vote
    double left_vote = 0;
    double right_vote = 0;
};

struct LbpWeak {
    LbpFeature feature;
    LbpMask mask;           // mask.test(code) -> pass_vote, else fail_vote
    double pass_vote = 0;
    double fail_vote = 0;
};

using WeakClassifier = std::variant<HaarWeak, LbpWeak>;

struct Stage {
    std::vector<WeakClassifier> weak;
    double threshold = 0;  // stage passes iff sum of votes >= threshold
};

struct CascadeModel {
    FeatureKind kind = FeatureKind::haar;
    int base_w = 0, base_h = 0;
    std::vector<Stage> stages;

    // Enforces every type invariant; errors name the offending stage/feature.
    void validate() const;
};

struct Detection {
    Rect box;
    double score = 0;  // sum of final-stage votes (mean over grouped members)
    int neighbors = 0;
};

struct EvalResult {
    bool accepted = false;
    int stages_passed = 0;
    double score = 0;
};

double eval_haar(const IntegralImage& ii, const HaarFeature& f, const Rect& window);
uint8_t eval_lbp(const IntegralImage& ii, const LbpFeature& f, const Rect& window);

// Stages run in order; the first stage whose vote sum falls below its
// threshold rejects the window and later stages are never evaluated.
// weak_evals, when given, accumulates the number of weak classifiers run.
EvalResult eval_cascade(const IntegralImage& ii, const CascadeModel& model, const Rect& window,
                        size_t* weak_evals = nullptr);

struct ScanParams {
    double scale_factor = 1.2;
    double step_fraction = 0.05;  // window step = max(1, round(0.05 * window width))
    int min_neighbors = 3;
    double iou_thresh = 0.3;
    int threads = 1;
};

struct DetectStats {
    size_t windows = 0;
    size_t accepted = 0;
    std::vector<Rect>* raw = nullptr;  // set before the call to collect raw accepted boxes
};

// Multi-scale sliding-window scan; deterministic for fixed inputs regardless
// of thread count (rows are collected in scan order, then grouped and sorted).
// Images smaller than the base window yield an empty result.
std::vector<Detection> detect(const GrayImage& img, const CascadeModel& model,
                              const ScanParams& params = {}, DetectStats* stats = nullptr);
std::vector<Detection> detect(const IntegralImage& ii, const CascadeModel& model,
                              const ScanParams& params = {}, DetectStats* stats = nullptr);

// Clusters boxes by transitive IoU >= iou_thresh, drops clusters smaller than
// min_neighbors, and returns each surviving cluster's arithmetic mean box
// (coordinates rounded) with neighbors = cluster size, sorted by descending
// neighbors then score.
std::vector<Detection> group_detections(std::span<const Rect> raw, int min_neighbors,
                                        double iou_thresh);
std::vector<Detection> group_detections(std::span<const Rect> raw, std::span<const double> scores,
                                        int min_neighbors, double iou_thresh);

}  // namespace gazekit
