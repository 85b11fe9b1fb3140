#include "gazekit/cascade.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

namespace gazekit {

namespace {

std::string stage_feature_tag(size_t si, size_t wi) {
    return "stage " + std::to_string(si) + ", weak " + std::to_string(wi);
}

int scale_round(int v, double s) { return static_cast<int>(std::llround(v * s)); }

}  // namespace

void CascadeModel::validate() const {
    require(base_w >= 1 && base_h >= 1, Err::validation, "cascade base window must be >= 1x1");
    for (size_t si = 0; si < stages.size(); ++si) {
        const Stage& st = stages[si];
        require(!st.weak.empty(), Err::validation,
                "stage " + std::to_string(si) + " has no weak classifiers");
        require(std::isfinite(st.threshold), Err::validation,
                "stage " + std::to_string(si) + " threshold is not finite");
        for (size_t wi = 0; wi < st.weak.size(); ++wi) {
            const std::string tag = stage_feature_tag(si, wi);
            if (kind == FeatureKind::haar) {
                const HaarWeak* hw = std::get_if<HaarWeak>(&st.weak[wi]);
                require(hw != nullptr, Err::validation, tag + ": haar cascade holds an lbp classifier");
                const HaarFeature& f = hw->feature;
                require(f.rects.size() >= 2 && f.rects.size() <= 3, Err::validation,
                        tag + ": haar feature must have 2-3 rects, has " + std::to_string(f.rects.size()));
                require(f.base_w == base_w && f.base_h == base_h, Err::validation,
                        tag + ": feature base window differs from cascade base window");
                for (const auto& wr : f.rects) {
                    require(wr.r.w > 0 && wr.r.h > 0, Err::validation, tag + ": zero-area feature rect");
                    require(wr.r.x >= 0 && wr.r.y >= 0 && wr.r.x + wr.r.w <= base_w &&
                                wr.r.y + wr.r.h <= base_h,
                            Err::validation, tag + ": feature rect outside base window");
                }
                require(f.weighted_area() == 0, Err::validation,
                        tag + ": haar weighted areas must cancel (sum weight*area == 0), got " +
                            std::to_string(f.weighted_area()));
                require(std::isfinite(hw->threshold) && std::isfinite(hw->left_vote) &&
                            std::isfinite(hw->right_vote),
                        Err::validation, tag + ": non-finite stump parameters");
            } else {
                const LbpWeak* lw = std::get_if<LbpWeak>(&st.weak[wi]);
                require(lw != nullptr, Err::validation, tag + ": lbp cascade holds a haar classifier");
                const LbpFeature& f = lw->feature;
                require(f.base_w == base_w && f.base_h == base_h, Err::validation,
                        tag + ": feature base window differs from cascade base window");
                require(f.cell.w > 0 && f.cell.h > 0, Err::validation, tag + ": zero-area lbp cell");
                require(f.cell.x >= 0 && f.cell.y >= 0 && f.cell.x + 3 * f.cell.w <= base_w &&
                            f.cell.y + 3 * f.cell.h <= base_h,
                        Err::validation, tag + ": 3x3 lbp grid outside base window");
                require(std::isfinite(lw->pass_vote) && std::isfinite(lw->fail_vote), Err::validation,
                        tag + ": non-finite votes");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Scaled evaluation. Features are scaled once per window size to corner
// offsets into the integral table; the public eval_* entry points and the
// multi-scale scanner share this code so they agree bit for bit.

namespace {

struct ScaledRect {
    size_t tl = 0, tr = 0, bl = 0, br = 0;
    double weight = 0;
};

struct ScaledHaar {
    std::vector<ScaledRect> rects;
    double inv_area = 0;
};

struct ScaledLbp {
    std::array<size_t, 16> corner{};  // 4x4 lattice of cell-corner offsets
};

ScaledRect scale_rect(const Rect& r, double sx, double sy, int win_w, int win_h, int stride,
                      double weight) {
    int x = std::clamp(scale_round(r.x, sx), 0, win_w);
    int y = std::clamp(scale_round(r.y, sy), 0, win_h);
    int w = std::clamp(scale_round(r.w, sx), 0, win_w - x);
    int h = std::clamp(scale_round(r.h, sy), 0, win_h - y);
    ScaledRect out;
    out.tl = static_cast<size_t>(y) * stride + x;
    out.tr = static_cast<size_t>(y) * stride + x + w;
    out.bl = static_cast<size_t>(y + h) * stride + x;
    out.br = static_cast<size_t>(y + h) * stride + x + w;
    out.weight = weight;
    return out;
}

long long scaled_area(const ScaledRect& r, int stride) {
    const long long w = static_cast<long long>(r.tr - r.tl);
    const long long h = static_cast<long long>((r.bl - r.tl) / stride);
    return w * h;
}

ScaledHaar scale_haar(const HaarFeature& f, int win_w, int win_h, int stride) {
    const double sx = static_cast<double>(win_w) / f.base_w;
    const double sy = static_cast<double>(win_h) / f.base_h;
    ScaledHaar out;
    out.inv_area = 1.0 / (static_cast<double>(win_w) * win_h);
    out.rects.reserve(f.rects.size());
    for (const auto& wr : f.rects)
        out.rects.push_back(scale_rect(wr.r, sx, sy, win_w, win_h, stride, wr.weight));
    // Integer rounding can break the weighted-area cancellation of zero-sum
    // features at non-unit scales; recomputing the first rect's weight
    // restores brightness-shift invariance at every scale.
    if (f.weighted_area() == 0 && !out.rects.empty()) {
        const long long a0 = scaled_area(out.rects[0], stride);
        if (a0 > 0) {
            long long rest = 0;
            for (size_t k = 1; k < out.rects.size(); ++k)
                rest += static_cast<long long>(out.rects[k].weight) * scaled_area(out.rects[k], stride);
            out.rects[0].weight = -static_cast<double>(rest) / static_cast<double>(a0);
        }
    }
    return out;
}

ScaledLbp scale_lbp(const LbpFeature& f, int win_w, int win_h, int stride) {
    const double sx = static_cast<double>(win_w) / f.base_w;
    const double sy = static_cast<double>(win_h) / f.base_h;
    int cw = std::max(1, scale_round(f.cell.w, sx));
    int ch = std::max(1, scale_round(f.cell.h, sy));
    cw = std::min(cw, std::max(1, win_w / 3));
    ch = std::min(ch, std::max(1, win_h / 3));
    int gx = std::clamp(scale_round(f.cell.x, sx), 0, win_w - 3 * cw);
    int gy = std::clamp(scale_round(f.cell.y, sy), 0, win_h - 3 * ch);
    ScaledLbp out;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            out.corner[static_cast<size_t>(i) * 4 + j] =
                static_cast<size_t>(gy + i * ch) * stride + (gx + j * cw);
    return out;
}

inline double eval_scaled_haar(const uint32_t* base, const ScaledHaar& f) {
    double acc = 0;
    for (const auto& r : f.rects) {
        const uint32_t s = base[r.br] + base[r.tl] - base[r.tr] - base[r.bl];
        acc += r.weight * static_cast<double>(s);
    }
    return acc * f.inv_area;
}

inline uint8_t eval_scaled_lbp(const uint32_t* base, const ScaledLbp& f) {
    uint32_t c[16];
    for (int i = 0; i < 16; ++i) c[i] = base[f.corner[i]];
    uint32_t cell[9];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            cell[i * 3 + j] = c[(i + 1) * 4 + (j + 1)] + c[i * 4 + j] - c[i * 4 + (j + 1)] - c[(i + 1) * 4 + j];
    const uint32_t center = cell[4];
    // Clockwise from the top-left cell, shifting left each step.
    static constexpr int order[8] = {0, 1, 2, 5, 8, 7, 6, 3};
    uint8_t code = 0;
    for (int k = 0; k < 8; ++k) code = static_cast<uint8_t>((code << 1) | (cell[order[k]] >= center ? 1 : 0));
    return code;
}

struct ScaledHaarWeak {
    ScaledHaar feature;
    double threshold, left_vote, right_vote;
};

struct ScaledLbpWeak {
    ScaledLbp feature;
    LbpMask mask;
    double pass_vote, fail_vote;
};

struct ScaledStage {
    double threshold = 0;
    std::vector<ScaledHaarWeak> haar;
    std::vector<ScaledLbpWeak> lbp;
    size_t size() const { return haar.size() + lbp.size(); }
};

struct ScaledCascade {
    FeatureKind kind;
    int win_w = 0, win_h = 0;
    std::vector<ScaledStage> stages;
};

ScaledCascade scale_cascade(const CascadeModel& m, int win_w, int win_h, int stride) {
    ScaledCascade out;
    out.kind = m.kind;
    out.win_w = win_w;
    out.win_h = win_h;
    out.stages.reserve(m.stages.size());
    for (const Stage& st : m.stages) {
        ScaledStage s;
        s.threshold = st.threshold;
        for (const WeakClassifier& wc : st.weak) {
            if (const HaarWeak* hw = std::get_if<HaarWeak>(&wc)) {
                s.haar.push_back({scale_haar(hw->feature, win_w, win_h, stride), hw->threshold,
                                  hw->left_vote, hw->right_vote});
            } else {
                const LbpWeak& lw = std::get<LbpWeak>(wc);
                s.lbp.push_back({scale_lbp(lw.feature, win_w, win_h, stride), lw.mask, lw.pass_vote,
                                 lw.fail_vote});
            }
        }
        out.stages.push_back(std::move(s));
    }
    return out;
}

EvalResult eval_scaled_cascade(const uint32_t* table, size_t window_origin, const ScaledCascade& sc,
                               size_t* weak_evals) {
    const uint32_t* base = table + window_origin;
    EvalResult r;
    double sum = 0;
    for (const ScaledStage& st : sc.stages) {
        sum = 0;
        for (const auto& w : st.haar) {
            sum += eval_scaled_haar(base, w.feature) < w.threshold ? w.left_vote : w.right_vote;
        }
        for (const auto& w : st.lbp) {
            sum += w.mask.test(eval_scaled_lbp(base, w.feature)) ? w.pass_vote : w.fail_vote;
        }
        if (weak_evals) *weak_evals += st.size();
        if (sum < st.threshold) {
            r.accepted = false;
            r.score = sum;
            return r;
        }
        ++r.stages_passed;
    }
    r.accepted = true;
    r.score = sum;  // vote sum of the final stage (0 for an empty cascade)
    return r;
}

void check_window(const IntegralImage& ii, const Rect& window) {
    check_rect_in(window, ii.width, ii.height, "cascade window");
    require(window.w >= 1 && window.h >= 1, Err::bounds, "cascade window must be >= 1x1");
}

}  // namespace

double eval_haar(const IntegralImage& ii, const HaarFeature& f, const Rect& window) {
    check_window(ii, window);
    const ScaledHaar sf = scale_haar(f, window.w, window.h, ii.stride());
    return eval_scaled_haar(ii.sums.data() + static_cast<size_t>(window.y) * ii.stride() + window.x, sf);
}

uint8_t eval_lbp(const IntegralImage& ii, const LbpFeature& f, const Rect& window) {
    check_window(ii, window);
    const ScaledLbp sf = scale_lbp(f, window.w, window.h, ii.stride());
    return eval_scaled_lbp(ii.sums.data() + static_cast<size_t>(window.y) * ii.stride() + window.x, sf);
}

EvalResult eval_cascade(const IntegralImage& ii, const CascadeModel& model, const Rect& window,
                        size_t* weak_evals) {
    check_window(ii, window);
    const ScaledCascade sc = scale_cascade(model, window.w, window.h, ii.stride());
    return eval_scaled_cascade(ii.sums.data(), static_cast<size_t>(window.y) * ii.stride() + window.x,
                               sc, weak_evals);
}

// ---------------------------------------------------------------------------
// Grouping.

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<Detection> group_detections(std::span<const Rect> raw, std::span<const double> scores,
                                        int min_neighbors, double iou_thresh) {
    require(iou_thresh > 0.0 && iou_thresh < 1.0, Err::malformed_input,
            "iou_thresh must lie in (0,1), got " + std::to_string(iou_thresh));
    require(scores.empty() || scores.size() == raw.size(), Err::malformed_input,
            "scores length must match boxes");

    const size_t n = raw.size();
    UnionFind uf(n);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (iou(raw[i], raw[j]) >= iou_thresh) uf.unite(static_cast<int>(i), static_cast<int>(j));

    // Clusters keyed by root, visited in first-member order for determinism.
    std::vector<int> root_order;
    std::vector<std::vector<size_t>> members(n);
    for (size_t i = 0; i < n; ++i) {
        const int r = uf.find(static_cast<int>(i));
        if (members[r].empty()) root_order.push_back(r);
        members[r].push_back(i);
    }

    std::vector<Detection> out;
    for (int r : root_order) {
        const auto& m = members[r];
        if (static_cast<int>(m.size()) < min_neighbors) continue;
        double sx = 0, sy = 0, sr = 0, sb = 0, score = 0;
        for (size_t i : m) {
            sx += raw[i].x;
            sy += raw[i].y;
            sr += raw[i].x + raw[i].w;
            sb += raw[i].y + raw[i].h;
            if (!scores.empty()) score += scores[i];
        }
        const double k = static_cast<double>(m.size());
        // Rounding the mean corners keeps the box inside the hull of its
        // members (rounding x and w separately can overshoot by a pixel).
        const int bx = static_cast<int>(std::llround(sx / k));
        const int by = static_cast<int>(std::llround(sy / k));
        Detection d;
        d.box = Rect{bx, by, static_cast<int>(std::llround(sr / k)) - bx,
                     static_cast<int>(std::llround(sb / k)) - by};
        d.neighbors = static_cast<int>(m.size());
        d.score = scores.empty() ? 0.0 : score / k;
        out.push_back(d);
    }

    std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
        if (a.neighbors != b.neighbors) return a.neighbors > b.neighbors;
        if (a.score != b.score) return a.score > b.score;
        if (a.box.y != b.box.y) return a.box.y < b.box.y;
        if (a.box.x != b.box.x) return a.box.x < b.box.x;
        if (a.box.w != b.box.w) return a.box.w < b.box.w;
        return a.box.h < b.box.h;
    });
    return out;
}

std::vector<Detection> group_detections(std::span<const Rect> raw, int min_neighbors,
                                        double iou_thresh) {
    return group_detections(raw, {}, min_neighbors, iou_thresh);
}

// ---------------------------------------------------------------------------
// Multi-scale scan.

namespace {

struct RowResult {
    std::vector<Rect> boxes;
    std::vector<double> scores;
    size_t windows = 0;
};

}  // namespace

std::vector<Detection> detect(const IntegralImage& ii, const CascadeModel& model,
                              const ScanParams& params, DetectStats* stats) {
    model.validate();
    require(params.scale_factor > 1.0, Err::malformed_input, "scale_factor must be > 1");
    const int stride = ii.stride();

    std::vector<Rect> boxes;
    std::vector<double> scores;
    size_t windows_total = 0;

    const int threads = std::max(1, params.threads);
    for (int level = 0;; ++level) {
        const double scale = std::pow(params.scale_factor, level);
        const int win_w = scale_round(model.base_w, scale);
        const int win_h = scale_round(model.base_h, scale);
        if (win_w > ii.width || win_h > ii.height) break;
        if (win_w < 1 || win_h < 1) continue;

        const ScaledCascade sc = scale_cascade(model, win_w, win_h, stride);
        const int step = std::max(1, scale_round(win_w, params.step_fraction));
        const int ny = (ii.height - win_h) / step + 1;
        const int nx = (ii.width - win_w) / step + 1;

        std::vector<RowResult> rows(ny);
        auto scan_row = [&](int ry) {
            RowResult& out = rows[ry];
            const int y = ry * step;
            for (int cx = 0; cx < nx; ++cx) {
                const int x = cx * step;
                ++out.windows;
                const EvalResult r = eval_scaled_cascade(
                    ii.sums.data(), static_cast<size_t>(y) * stride + x, sc, nullptr);
                if (r.accepted) {
                    out.boxes.push_back(Rect{x, y, win_w, win_h});
                    out.scores.push_back(r.score);
                }
            }
        };

        if (threads == 1 || ny < 2) {
            for (int ry = 0; ry < ny; ++ry) scan_row(ry);
        } else {
            std::vector<std::thread> pool;
            std::atomic<int> next{0};
            const int nthreads = std::min(threads, ny);
            for (int t = 0; t < nthreads; ++t) {
                pool.emplace_back([&] {
                    for (int ry = next.fetch_add(1); ry < ny; ry = next.fetch_add(1)) scan_row(ry);
                });
            }
            for (auto& t : pool) t.join();
        }

        for (const RowResult& r : rows) {  // rows appended in scan order
            boxes.insert(boxes.end(), r.boxes.begin(), r.boxes.end());
            scores.insert(scores.end(), r.scores.begin(), r.scores.end());
            windows_total += r.windows;
        }
    }

    if (stats) {
        stats->windows = windows_total;
        stats->accepted = boxes.size();
        if (stats->raw) *stats->raw = boxes;
    }
    return group_detections(boxes, scores, params.min_neighbors, params.iou_thresh);
}

std::vector<Detection> detect(const GrayImage& img, const CascadeModel& model,
                              const ScanParams& params, DetectStats* stats) {
    if (img.width < model.base_w || img.height < model.base_h) {
        if (stats) *stats = {};
        return {};
    }
    return detect(integral(img), model, params, stats);
}

}  // namespace gazekit
