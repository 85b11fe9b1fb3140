#include "gazekit/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gazekit {

namespace {

constexpr int kMaxIntegralDim = 4096;  // 255 * 4096^2 < 2^32

std::string dim_str(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

std::string rect_str(const Rect& r) {
    return "(" + std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) +
           "," + std::to_string(r.h) + ")";
}

}  // namespace

double iou(const Rect& a, const Rect& b) {
    const long long ix = std::max(0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const long long iy = std::max(0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const long long inter = ix * iy;
    const long long uni = a.area() + b.area() - inter;
    if (uni <= 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

GrayImage::GrayImage(int w, int h, uint8_t fill)
    : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {
    require(w >= 1 && h >= 1, Err::malformed_input, "image dimensions must be >= 1x1, got " + dim_str(w, h));
}

void check_rect_in(const Rect& r, int width, int height, const char* what) {
    if (r.x < 0 || r.y < 0 || r.w < 0 || r.h < 0 || r.x + r.w > width || r.y + r.h > height) {
        fail(Err::bounds, std::string(what) + " rect " + rect_str(r) + " out of bounds for " +
                              dim_str(width, height));
    }
}

GrayImage to_grayscale(std::span<const uint8_t> rgb, int width, int height) {
    require(width >= 1 && height >= 1, Err::malformed_input,
            "rgb raster dimensions must be >= 1x1, got " + dim_str(width, height));
    const size_t expect = static_cast<size_t>(width) * height * 3;
    require(rgb.size() == expect, Err::malformed_input,
            "rgb data length " + std::to_string(rgb.size()) + " != 3*w*h = " + std::to_string(expect));
    GrayImage out(width, height);
    const uint8_t* p = rgb.data();
    for (size_t i = 0, n = static_cast<size_t>(width) * height; i < n; ++i, p += 3) {
        // ITU-R BT.601 weights, round half up; exact in integer arithmetic.
        const uint32_t v = 299u * p[0] + 587u * p[1] + 114u * p[2];
        out.data[i] = static_cast<uint8_t>((v + 500u) / 1000u);
    }
    return out;
}

IntegralImage integral(const GrayImage& img) {
    require(!img.empty(), Err::malformed_input, "integral of empty image");
    require(img.width <= kMaxIntegralDim && img.height <= kMaxIntegralDim, Err::malformed_input,
            "image exceeds 4096x4096 integral limit: " + dim_str(img.width, img.height));
    IntegralImage ii;
    ii.width = img.width;
    ii.height = img.height;
    ii.sums.assign(static_cast<size_t>(img.width + 1) * (img.height + 1), 0);
    const int stride = ii.stride();
    for (int y = 0; y < img.height; ++y) {
        uint32_t row = 0;
        const uint8_t* src = img.data.data() + static_cast<size_t>(y) * img.width;
        const uint32_t* above = ii.sums.data() + static_cast<size_t>(y) * stride;
        uint32_t* cur = ii.sums.data() + static_cast<size_t>(y + 1) * stride;
        for (int x = 0; x < img.width; ++x) {
            row += src[x];
            cur[x + 1] = above[x + 1] + row;
        }
    }
    return ii;
}

uint32_t rect_sum(const IntegralImage& ii, const Rect& r) {
    check_rect_in(r, ii.width, ii.height, "rect_sum");
    const int s = ii.stride();
    const uint32_t* t = ii.sums.data();
    const size_t tl = static_cast<size_t>(r.y) * s + r.x;
    const size_t br = static_cast<size_t>(r.y + r.h) * s + (r.x + r.w);
    const size_t tr = static_cast<size_t>(r.y) * s + (r.x + r.w);
    const size_t bl = static_cast<size_t>(r.y + r.h) * s + r.x;
    // Unsigned wraparound keeps this exact even when partial sums exceed 2^32.
    return t[br] + t[tl] - t[tr] - t[bl];
}

GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
    require(!img.empty(), Err::malformed_input, "resize of empty image");
    require(out_w >= 1 && out_h >= 1, Err::malformed_input,
            "resize target must be >= 1x1, got " + dim_str(out_w, out_h));
    if (out_w == img.width && out_h == img.height) return img;

    GrayImage out(out_w, out_h);
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;

    // Per-column source coordinates are reused for every row.
    std::vector<int> x0(out_w), x1(out_w);
    std::vector<double> fx(out_w);
    for (int x = 0; x < out_w; ++x) {
        const double src = (x + 0.5) * sx - 0.5;  // pixel-center alignment
        const double f = std::floor(src);
        x0[x] = std::clamp(static_cast<int>(f), 0, img.width - 1);
        x1[x] = std::clamp(static_cast<int>(f) + 1, 0, img.width - 1);
        fx[x] = src - f;
    }
    for (int y = 0; y < out_h; ++y) {
        const double src = (y + 0.5) * sy - 0.5;
        const double f = std::floor(src);
        const int y0 = std::clamp(static_cast<int>(f), 0, img.height - 1);
        const int y1 = std::clamp(static_cast<int>(f) + 1, 0, img.height - 1);
        const double fy = src - f;
        const uint8_t* r0 = img.data.data() + static_cast<size_t>(y0) * img.width;
        const uint8_t* r1 = img.data.data() + static_cast<size_t>(y1) * img.width;
        uint8_t* dst = out.data.data() + static_cast<size_t>(y) * out_w;
        for (int x = 0; x < out_w; ++x) {
            const double top = r0[x0[x]] * (1.0 - fx[x]) + r0[x1[x]] * fx[x];
            const double bot = r1[x0[x]] * (1.0 - fx[x]) + r1[x1[x]] * fx[x];
            const double v = top * (1.0 - fy) + bot * fy;
            dst[x] = static_cast<uint8_t>(std::clamp(static_cast<int>(std::floor(v + 0.5)), 0, 255));
        }
    }
    return out;
}

std::pair<BinaryImage, uint8_t> binarize_otsu(const GrayImage& img) {
    require(!img.empty(), Err::malformed_input, "binarize of empty image");
    uint64_t hist[256] = {};
    for (uint8_t v : img.data) ++hist[v];

    int distinct = 0;
    for (int i = 0; i < 256; ++i) distinct += hist[i] > 0;
    require(distinct >= 2, Err::degenerate_histogram,
            "image has a single intensity; no threshold separates two classes");

    const double total = static_cast<double>(img.data.size());
    double sum_all = 0;
    for (int i = 0; i < 256; ++i) sum_all += static_cast<double>(i) * hist[i];

    // Maximize between-class variance over thresholds t; class 0 = {v <= t}.
    // Ties resolve to the lowest maximizing threshold.
    int best_t = 0;
    double best_var = -1.0;
    double w0 = 0, sum0 = 0;
    for (int t = 0; t < 255; ++t) {
        w0 += hist[t];
        sum0 += static_cast<double>(t) * hist[t];
        const double w1 = total - w0;
        if (w0 == 0 || w1 == 0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        const double var = (w0 / total) * (w1 / total) * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }

    BinaryImage out(img.width, img.height);
    for (size_t i = 0; i < img.data.size(); ++i) out.data[i] = img.data[i] > best_t ? 1 : 0;
    return {std::move(out), static_cast<uint8_t>(best_t)};
}

GrayImage crop(const GrayImage& img, const Rect& r) {
    check_rect_in(r, img.width, img.height, "crop");
    require(r.w >= 1 && r.h >= 1, Err::malformed_input, "crop rect must have positive extents");
    GrayImage out(r.w, r.h);
    for (int y = 0; y < r.h; ++y) {
        const uint8_t* src = img.data.data() + static_cast<size_t>(r.y + y) * img.width + r.x;
        std::copy(src, src + r.w, out.data.data() + static_cast<size_t>(y) * r.w);
    }
    return out;
}

GrayImage hflip(const GrayImage& img) {
    require(!img.empty(), Err::malformed_input, "hflip of empty image");
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(img.width - 1 - x, y);
    return out;
}

}  // namespace gazekit
