#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "gazekit/cascade.hpp"

namespace gazekit {

// Candidate features for boosting. A pool holds exactly one feature kind;
// generated pools use zero-sum Haar layouts (edges, lines, center-surround)
// or full 3x3 LBP grids on a coarse position/size lattice.
struct FeaturePool {
    FeatureKind kind = FeatureKind::haar;
    int base_w = 0, base_h = 0;
    std::vector<HaarFeature> haar;
    std::vector<LbpFeature> lbp;

    size_t size() const { return kind == FeatureKind::haar ? haar.size() : lbp.size(); }
};

FeaturePool make_haar_pool(int base_w, int base_h, int position_step = 2, int size_step = 2);
FeaturePool make_lbp_pool(int base_w, int base_h, int position_step = 2);

struct StageTarget {
    double min_tpr = 0.995;
    double max_fpr = 0.5;
    int max_weak = 100;  // weak-classifier budget; exhausting it is an error
};

struct BoostRound {
    int feature = -1;        // pool index of the selected feature
    double error = 0;        // weighted error of the selected weak classifier
    double alpha = 0;
    double weight_sum = 0;   // sample-weight sum after normalization
    double ensemble_error = 0;  // 0/1 training error of the boosted sum at threshold 0
    double exp_loss = 0;        // mean exp(-y * F(x)); non-increasing for correct boosting
};

struct StageTrainLog {
    std::vector<BoostRound> rounds;
    double tpr = 0, fpr = 0;
};

// Discrete AdaBoost over decision stumps (Haar) or subset-mask classifiers
// (LBP). Samples are integral images of base-window-sized patches. Stops at
// the first round where thresholding the boosted sum reaches the stage
// target on the training pool.
Stage train_stage_adaboost(std::span<const IntegralImage> pos, std::span<const IntegralImage> neg,
                           const FeaturePool& pool, const StageTarget& target,
                           StageTrainLog* log = nullptr);

// Asked for up to `want` base-window-sized negative patches that the current
// cascade still accepts. Returning fewer than the trainer's minimum ends
// training (the cascade already rejects nearly everything).
using NegativeSource =
    std::function<std::vector<GrayImage>(const CascadeModel& current, size_t want)>;

struct CascadeTrainConfig {
    StageTarget stage{};
    int max_stages = 12;
    size_t negatives_per_stage = 2000;
    size_t min_negatives = 50;
};

CascadeModel train_cascade(FeatureKind kind, int base_w, int base_h,
                           std::span<const GrayImage> positives, const NegativeSource& mine_negatives,
                           const FeaturePool& pool, const CascadeTrainConfig& cfg,
                           std::ostream* log = nullptr);

}  // namespace gazekit
