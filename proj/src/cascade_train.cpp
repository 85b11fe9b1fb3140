#include "gazekit/cascade_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace gazekit {

FeaturePool make_haar_pool(int base_w, int base_h, int position_step, int size_step) {
    require(base_w >= 4 && base_h >= 4, Err::malformed_input, "haar pool base window too small");
    FeaturePool pool;
    pool.kind = FeatureKind::haar;
    pool.base_w = base_w;
    pool.base_h = base_h;

    auto add = [&](std::vector<WeightedRect> rects) {
        pool.haar.push_back(HaarFeature{std::move(rects), base_w, base_h});
    };

    for (int h = 2; h <= base_h; h += size_step) {
        for (int w = 2; w <= base_w; w += size_step) {
            for (int y = 0; y + h <= base_h; y += position_step) {
                for (int x = 0; x + w <= base_w; x += position_step) {
                    if (w % 2 == 0) {  // left/right edge
                        add({{Rect{x, y, w / 2, h}, +1}, {Rect{x + w / 2, y, w / 2, h}, -1}});
                    }
                    if (h % 2 == 0) {  // top/bottom edge
                        add({{Rect{x, y, w, h / 2}, +1}, {Rect{x, y + h / 2, w, h / 2}, -1}});
                    }
                    if (w % 3 == 0) {  // vertical line (thirds): +1 -2 +1
                        add({{Rect{x, y, w / 3, h}, +1},
                             {Rect{x + w / 3, y, w / 3, h}, -2},
                             {Rect{x + 2 * (w / 3), y, w / 3, h}, +1}});
                    }
                    if (h % 3 == 0) {  // horizontal line
                        add({{Rect{x, y, w, h / 3}, +1},
                             {Rect{x, y + h / 3, w, h / 3}, -2},
                             {Rect{x, y + 2 * (h / 3), w, h / 3}, +1}});
                    }
                    if (w % 4 == 0 && h % 4 == 0) {  // center-surround: whole +1, center -4
                        add({{Rect{x, y, w, h}, +1},
                             {Rect{x + w / 4, y + h / 4, w / 2, h / 2}, -4}});
                    }
                }
            }
        }
    }
    return pool;
}

FeaturePool make_lbp_pool(int base_w, int base_h, int position_step) {
    require(base_w >= 6 && base_h >= 6, Err::malformed_input, "lbp pool base window too small");
    FeaturePool pool;
    pool.kind = FeatureKind::lbp;
    pool.base_w = base_w;
    pool.base_h = base_h;
    for (int ch = 2; 3 * ch <= base_h; ++ch) {
        for (int cw = 2; 3 * cw <= base_w; ++cw) {
            for (int y = 0; y + 3 * ch <= base_h; y += position_step) {
                for (int x = 0; x + 3 * cw <= base_w; x += position_step) {
                    pool.lbp.push_back(LbpFeature{Rect{x, y, cw, ch}, base_w, base_h});
                }
            }
        }
    }
    return pool;
}

namespace {

struct StumpChoice {
    double error = 1.0;
    double threshold = 0;
    bool positive_below = true;  // predict positive when value < threshold
};

// Best threshold/polarity for one feature given current sample weights.
// order: sample indices sorted ascending by this feature's value.
StumpChoice best_stump(const std::vector<float>& values, const std::vector<int>& order,
                       std::span<const double> weights, size_t n_pos) {
    const size_t n = order.size();
    double pos_total = 0;
    for (size_t i = 0; i < n_pos; ++i) pos_total += weights[i];

    StumpChoice best;
    double pos_below = 0, neg_below = 0;
    // Threshold candidates sit between consecutive distinct values plus the
    // extremes. err_a = error of "positive iff value < threshold".
    auto consider = [&](double threshold) {
        const double err_a = (pos_total - pos_below) + neg_below;
        const double err_b = 1.0 - err_a;
        if (err_a < best.error) best = {err_a, threshold, true};
        if (err_b < best.error) best = {err_b, threshold, false};
    };

    consider(static_cast<double>(values[order[0]]) - 1.0);
    for (size_t i = 0; i < n; ++i) {
        const int idx = order[i];
        if (static_cast<size_t>(idx) < n_pos) pos_below += weights[idx];
        else neg_below += weights[idx];
        const double v = values[idx];
        const double next = i + 1 < n ? values[order[i + 1]] : v + 2.0;
        if (next > v) consider(v + (next - v) * 0.5);
    }
    return best;
}

}  // namespace

Stage train_stage_adaboost(std::span<const IntegralImage> pos, std::span<const IntegralImage> neg,
                           const FeaturePool& pool, const StageTarget& target, StageTrainLog* log) {
    require(!pos.empty() && !neg.empty(), Err::malformed_input,
            "stage training needs non-empty positive and negative sets");
    require(pool.size() > 0, Err::malformed_input, "empty feature pool");
    require(target.max_weak >= 1, Err::malformed_input, "weak-classifier budget must be >= 1");

    const size_t n_pos = pos.size(), n_neg = neg.size(), n = n_pos + n_neg;
    auto sample = [&](size_t i) -> const IntegralImage& {
        return i < n_pos ? pos[i] : neg[i - n_pos];
    };
    for (size_t i = 0; i < n; ++i) {
        require(sample(i).width == pool.base_w && sample(i).height == pool.base_h,
                Err::malformed_input, "training sample " + std::to_string(i) + " is not base-window sized");
    }
    const Rect full{0, 0, pool.base_w, pool.base_h};

    // Feature responses are fixed; precompute them once per stage.
    const size_t n_feat = pool.size();
    std::vector<std::vector<float>> haar_values;
    std::vector<std::vector<int>> haar_order;
    std::vector<std::vector<uint8_t>> lbp_codes;
    if (pool.kind == FeatureKind::haar) {
        haar_values.resize(n_feat);
        haar_order.resize(n_feat);
        for (size_t fi = 0; fi < n_feat; ++fi) {
            auto& vals = haar_values[fi];
            vals.resize(n);
            for (size_t i = 0; i < n; ++i)
                vals[i] = static_cast<float>(eval_haar(sample(i), pool.haar[fi], full));
            auto& ord = haar_order[fi];
            ord.resize(n);
            std::iota(ord.begin(), ord.end(), 0);
            std::stable_sort(ord.begin(), ord.end(),
                             [&](int a, int b) { return vals[a] < vals[b]; });
        }
    } else {
        lbp_codes.resize(n_feat);
        for (size_t fi = 0; fi < n_feat; ++fi) {
            auto& codes = lbp_codes[fi];
            codes.resize(n);
            for (size_t i = 0; i < n; ++i) codes[i] = eval_lbp(sample(i), pool.lbp[fi], full);
        }
    }

    // Viola-Jones initialization: half the mass on each class.
    std::vector<double> weights(n);
    for (size_t i = 0; i < n; ++i)
        weights[i] = i < n_pos ? 0.5 / static_cast<double>(n_pos) : 0.5 / static_cast<double>(n_neg);

    Stage stage;
    std::vector<double> boosted(n, 0.0);  // running vote sum per sample

    for (int round = 0; round < target.max_weak; ++round) {
        const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
        for (auto& w : weights) w /= wsum;
        const double norm_check = std::accumulate(weights.begin(), weights.end(), 0.0);

        // Pick the weak classifier with minimum weighted error.
        int best_feat = -1;
        double best_err = 2.0;
        StumpChoice best_stump_choice;
        LbpMask best_mask;
        if (pool.kind == FeatureKind::haar) {
            for (size_t fi = 0; fi < n_feat; ++fi) {
                const StumpChoice c = best_stump(haar_values[fi], haar_order[fi], weights, n_pos);
                if (c.error < best_err) {
                    best_err = c.error;
                    best_feat = static_cast<int>(fi);
                    best_stump_choice = c;
                }
            }
        } else {
            for (size_t fi = 0; fi < n_feat; ++fi) {
                double pos_w[256] = {}, neg_w[256] = {};
                const auto& codes = lbp_codes[fi];
                for (size_t i = 0; i < n_pos; ++i) pos_w[codes[i]] += weights[i];
                for (size_t i = n_pos; i < n; ++i) neg_w[codes[i]] += weights[i];
                double err = 0;
                for (int c = 0; c < 256; ++c) err += std::min(pos_w[c], neg_w[c]);
                if (err < best_err) {
                    best_err = err;
                    best_feat = static_cast<int>(fi);
                    best_mask = LbpMask{};
                    for (int c = 0; c < 256; ++c)
                        if (pos_w[c] > neg_w[c]) best_mask.set(static_cast<uint8_t>(c));
                }
            }
        }

        const double eps = std::clamp(best_err, 1e-12, 1.0 - 1e-12);
        const double alpha = 0.5 * std::log((1.0 - eps) / eps);

        // Materialize the weak classifier and its per-sample votes.
        std::vector<double> votes(n);
        if (pool.kind == FeatureKind::haar) {
            HaarWeak hw;
            hw.feature = pool.haar[best_feat];
            hw.threshold = best_stump_choice.threshold;
            hw.left_vote = best_stump_choice.positive_below ? alpha : -alpha;
            hw.right_vote = best_stump_choice.positive_below ? -alpha : alpha;
            const auto& vals = haar_values[best_feat];
            for (size_t i = 0; i < n; ++i)
                votes[i] = vals[i] < hw.threshold ? hw.left_vote : hw.right_vote;
            stage.weak.push_back(std::move(hw));
        } else {
            LbpWeak lw;
            lw.feature = pool.lbp[best_feat];
            lw.mask = best_mask;
            lw.pass_vote = alpha;
            lw.fail_vote = -alpha;
            const auto& codes = lbp_codes[best_feat];
            for (size_t i = 0; i < n; ++i)
                votes[i] = lw.mask.test(codes[i]) ? lw.pass_vote : lw.fail_vote;
            stage.weak.push_back(std::move(lw));
        }

        // Reweight: vote = alpha * h_i, so exp(-alpha*y_i*h_i) = exp(-y_i*vote).
        for (size_t i = 0; i < n; ++i) {
            const double y = i < n_pos ? 1.0 : -1.0;
            weights[i] *= std::exp(-y * votes[i]);
            boosted[i] += votes[i];
        }

        // Stage threshold: highest value keeping TPR >= min_tpr on the pool.
        std::vector<double> pos_sums(boosted.begin(), boosted.begin() + n_pos);
        std::sort(pos_sums.begin(), pos_sums.end(), std::greater<>());
        const size_t keep = std::clamp<size_t>(
            static_cast<size_t>(std::ceil(target.min_tpr * static_cast<double>(n_pos))), 1, n_pos);
        const double threshold = pos_sums[keep - 1];
        size_t tp = 0, fp = 0;
        for (size_t i = 0; i < n_pos; ++i) tp += boosted[i] >= threshold;
        for (size_t i = n_pos; i < n; ++i) fp += boosted[i] >= threshold;
        const double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
        const double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);

        if (log) {
            size_t wrong = 0;
            double exp_loss = 0;
            for (size_t i = 0; i < n; ++i) {
                const bool pred_pos = boosted[i] >= 0.0;
                wrong += pred_pos != (i < n_pos);
                exp_loss += std::exp(-(i < n_pos ? 1.0 : -1.0) * boosted[i]);
            }
            log->rounds.push_back({best_feat, best_err, alpha, norm_check,
                                   static_cast<double>(wrong) / static_cast<double>(n),
                                   exp_loss / static_cast<double>(n)});
            log->tpr = tpr;
            log->fpr = fpr;
        }

        if (tpr >= target.min_tpr && fpr <= target.max_fpr) {
            stage.threshold = threshold;
            return stage;
        }
    }

    fail(Err::stage_training_failed,
         "stage target (tpr >= " + std::to_string(target.min_tpr) + ", fpr <= " +
             std::to_string(target.max_fpr) + ") unreachable within " +
             std::to_string(target.max_weak) + " weak classifiers");
}

CascadeModel train_cascade(FeatureKind kind, int base_w, int base_h,
                           std::span<const GrayImage> positives, const NegativeSource& mine_negatives,
                           const FeaturePool& pool, const CascadeTrainConfig& cfg, std::ostream* log) {
    require(pool.kind == kind && pool.base_w == base_w && pool.base_h == base_h, Err::malformed_input,
            "feature pool does not match the cascade being trained");
    require(!positives.empty(), Err::malformed_input, "no positive samples");

    std::vector<IntegralImage> pos_ii;
    pos_ii.reserve(positives.size());
    for (const GrayImage& p : positives) {
        require(p.width == base_w && p.height == base_h, Err::malformed_input,
                "positive sample is not base-window sized");
        pos_ii.push_back(integral(p));
    }

    CascadeModel model;
    model.kind = kind;
    model.base_w = base_w;
    model.base_h = base_h;

    for (int si = 0; si < cfg.max_stages; ++si) {
        const std::vector<GrayImage> negs = mine_negatives(model, cfg.negatives_per_stage);
        if (negs.size() < cfg.min_negatives) {
            if (log)
                *log << "stage " << si << ": only " << negs.size()
                     << " negatives still pass; stopping\n";
            break;
        }
        std::vector<IntegralImage> neg_ii;
        neg_ii.reserve(negs.size());
        for (const GrayImage& g : negs) {
            require(g.width == base_w && g.height == base_h, Err::malformed_input,
                    "mined negative is not base-window sized");
            neg_ii.push_back(integral(g));
        }
        StageTrainLog stage_log;
        Stage st = train_stage_adaboost(pos_ii, neg_ii, pool, cfg.stage, &stage_log);
        if (log)
            *log << "stage " << si << ": " << st.weak.size() << " weak, tpr=" << stage_log.tpr
                 << " fpr=" << stage_log.fpr << " on " << negs.size() << " mined negatives\n";
        model.stages.push_back(std::move(st));
    }

    require(!model.stages.empty(), Err::stage_training_failed,
            "no cascade stage could be trained (negative mining came up empty)");
    model.validate();
    return model;
}

}  // namespace gazekit
