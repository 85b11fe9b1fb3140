#pragma once

#include <cstddef>
#include <vector>

namespace gazekit::kernels {

// Hot float loops behind the CNN (convolution and fully connected layers
// reduce to dot/axpy over contiguous rows). A scalar reference implementation
// always exists; vector variants are selected at runtime from CPU features
// and must agree with the reference within floating-point reassociation
// tolerance (see tests/test_kernels.cpp).
//
// Selection order: GAZEKIT_KERNELS environment variable ("scalar", "avx2",
// "neon") if set, otherwise the widest supported instruction set.

enum class Backend { scalar, avx2, neon };

struct Ops {
    const char* name;
    float (*dot)(const float* a, const float* b, size_t n);
    void (*axpy)(float alpha, const float* x, float* y, size_t n);  // y += alpha * x
    void (*relu)(const float* x, float* y, size_t n);               // y = max(x, 0)
    void (*relu_backward)(const float* x, const float* gy, float* gx, size_t n);  // gx = x > 0 ? gy : 0
};

const Ops& scalar_ops();
const Ops& active();

Backend active_backend();
bool backend_available(Backend b);
bool set_backend(Backend b);  // false (and no change) if unavailable
const char* backend_name(Backend b);
std::vector<Backend> available_backends();

}  // namespace gazekit::kernels
