#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gazekit/error.hpp"

namespace gazekit {

struct Rect {
    int x = 0, y = 0, w = 0, h = 0;

    long long area() const { return static_cast<long long>(w) * h; }
    double center_x() const { return x + w / 2.0; }
    double center_y() const { return y + h / 2.0; }
    bool operator==(const Rect&) const = default;
};

double iou(const Rect& a, const Rect& b);

struct GrayImage {
    int width = 0, height = 0;
    std::vector<uint8_t> data;  // row-major, width*height

    GrayImage() = default;
    GrayImage(int w, int h, uint8_t fill = 0);

    uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    bool empty() const { return data.empty(); }
    bool operator==(const GrayImage&) const = default;
};

// Values constrained to {0,1}.
struct BinaryImage {
    int width = 0, height = 0;
    std::vector<uint8_t> data;

    BinaryImage() = default;
    BinaryImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h, 0) {}

    uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    bool operator==(const BinaryImage&) const = default;
};

// Summed-area table with a zero top row and left column: entry (ty,tx) is the
// sum of all source pixels strictly above and left of (ty,tx). Table size is
// (height+1) x (width+1); 32-bit sums are exact for images up to 4096x4096.
struct IntegralImage {
    int width = 0, height = 0;  // source image dimensions
    std::vector<uint32_t> sums;

    int stride() const { return width + 1; }
    uint32_t at(int ty, int tx) const { return sums[static_cast<size_t>(ty) * stride() + tx]; }
};

void check_rect_in(const Rect& r, int width, int height, const char* what);

GrayImage to_grayscale(std::span<const uint8_t> rgb, int width, int height);
IntegralImage integral(const GrayImage& img);
uint32_t rect_sum(const IntegralImage& ii, const Rect& r);
GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h);
// Returns the binary image and the chosen threshold; pixel -> 1 iff value > threshold.
std::pair<BinaryImage, uint8_t> binarize_otsu(const GrayImage& img);
GrayImage crop(const GrayImage& img, const Rect& r);
GrayImage hflip(const GrayImage& img);

}  // namespace gazekit
