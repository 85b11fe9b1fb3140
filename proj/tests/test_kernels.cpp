#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "gazekit/kernels.hpp"
#include "gazekit/rng.hpp"

using namespace gazekit;

namespace {

std::vector<float> random_vec(Rng& rng, size_t n, float lo = -2.0f, float hi = 2.0f) {
    std::vector<float> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.unitf();
    return v;
}

bool close(float a, float b, float tol) {
    return std::abs(a - b) <= tol * std::max({1.0f, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("scalar backend is always available and selectable") {
    const kernels::Backend original = kernels::active_backend();
    CHECK(kernels::backend_available(kernels::Backend::scalar));
    CHECK(kernels::set_backend(kernels::Backend::scalar));
    CHECK(kernels::active_backend() == kernels::Backend::scalar);
    CHECK(std::string(kernels::active().name) == "scalar");
    kernels::set_backend(original);
}

TEST_CASE("unavailable backends are refused without changing the selection") {
    const kernels::Backend original = kernels::active_backend();
    for (auto b : {kernels::Backend::avx2, kernels::Backend::neon}) {
        if (!kernels::backend_available(b)) {
            CHECK_FALSE(kernels::set_backend(b));
            CHECK(kernels::active_backend() == original);
        }
    }
}

TEST_CASE("every available backend agrees with the scalar reference") {
    Rng rng(101);
    const kernels::Backend original = kernels::active_backend();
    const auto& ref = kernels::scalar_ops();
    for (kernels::Backend b : kernels::available_backends()) {
        REQUIRE(kernels::set_backend(b));
        const auto& ops = kernels::active();
        INFO("backend: ", ops.name);

        for (int trial = 0; trial < 50; ++trial) {
            const size_t n = 1 + rng.below(300);
            const auto a = random_vec(rng, n);
            const auto x = random_vec(rng, n);

            // Vector lanes reassociate the dot sum; compare with tolerance.
            CHECK(close(ops.dot(a.data(), x.data(), n), ref.dot(a.data(), x.data(), n), 1e-5f));

            const float alpha = -1.5f + 3.0f * rng.unitf();
            auto y1 = random_vec(rng, n);
            auto y2 = y1;
            ops.axpy(alpha, x.data(), y1.data(), n);
            ref.axpy(alpha, x.data(), y2.data(), n);
            for (size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i], 1e-6f));

            std::vector<float> r1(n), r2(n), g1(n), g2(n);
            ops.relu(a.data(), r1.data(), n);
            ref.relu(a.data(), r2.data(), n);
            CHECK(r1 == r2);  // max() has a single correct answer per lane

            ops.relu_backward(a.data(), x.data(), g1.data(), n);
            ref.relu_backward(a.data(), x.data(), g2.data(), n);
            CHECK(g1 == g2);
        }
    }
    kernels::set_backend(original);
}

TEST_CASE("dot and axpy reference semantics") {
    const auto& ref = kernels::scalar_ops();
    const float a[3] = {1, 2, 3};
    const float b[3] = {4, 5, 6};
    CHECK(ref.dot(a, b, 3) == doctest::Approx(32.0f));
    float y[3] = {1, 1, 1};
    ref.axpy(2.0f, a, y, 3);
    CHECK(y[0] == 3.0f);
    CHECK(y[1] == 5.0f);
    CHECK(y[2] == 7.0f);
    CHECK(ref.dot(a, b, 0) == 0.0f);
}
