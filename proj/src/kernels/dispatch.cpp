#include <atomic>
#include <cstdlib>
#include <cstring>

#include "gazekit/kernels.hpp"

namespace gazekit::kernels {

#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
const Ops& neon_ops();
#endif

namespace {

bool cpu_has(Backend b) {
    switch (b) {
        case Backend::scalar:
            return true;
        case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Backend::neon:
#if defined(__aarch64__) || defined(__ARM_NEON)
            return true;  // NEON is mandatory on aarch64
#else
            return false;
#endif
    }
    return false;
}

const Ops& ops_for(Backend b) {
    switch (b) {
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2:
            return avx2_ops();
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
        case Backend::neon:
            return neon_ops();
#endif
        default:
            return scalar_ops();
    }
}

Backend pick_default() {
    if (const char* env = std::getenv("GAZEKIT_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && cpu_has(Backend::avx2)) return Backend::avx2;
        if (std::strcmp(env, "neon") == 0 && cpu_has(Backend::neon)) return Backend::neon;
    }
    if (cpu_has(Backend::avx2)) return Backend::avx2;
    if (cpu_has(Backend::neon)) return Backend::neon;
    return Backend::scalar;
}

std::atomic<Backend>& selected() {
    static std::atomic<Backend> b{pick_default()};
    return b;
}

}  // namespace

const Ops& active() { return ops_for(selected().load(std::memory_order_relaxed)); }

Backend active_backend() { return selected().load(std::memory_order_relaxed); }

bool backend_available(Backend b) { return cpu_has(b); }

bool set_backend(Backend b) {
    if (!cpu_has(b)) return false;
    selected().store(b, std::memory_order_relaxed);
    return true;
}

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "unknown";
}

std::vector<Backend> available_backends() {
    std::vector<Backend> out{Backend::scalar};
    if (cpu_has(Backend::avx2)) out.push_back(Backend::avx2);
    if (cpu_has(Backend::neon)) out.push_back(Backend::neon);
    return out;
}

}  // namespace gazekit::kernels
