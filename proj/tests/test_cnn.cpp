#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gazekit/net.hpp"
#include "gazekit/rng.hpp"
#include "support/oracles.hpp"

using namespace gazekit;
using namespace gazekit::testing;

namespace {

bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("conv_forward hand examples") {
    Tensor x = Tensor::zeros({1, 1, 3, 3});
    x.fill(1.0f);
    Tensor w = Tensor::zeros({1, 1, 2, 2});
    w.fill(1.0f);
    Tensor b = Tensor::zeros({1});
    const Tensor y = conv_forward(x, w, b);
    CHECK(y.shape == std::vector<int>{1, 1, 2, 2});
    for (float v : y.data) CHECK(v == 4.0f);

    // 1x1 identity kernel.
    Rng rng(3);
    Tensor x2 = Tensor::zeros({2, 1, 4, 5});
    fill_uniform(x2, rng, -1, 1);
    Tensor w2 = Tensor::zeros({1, 1, 1, 1});
    w2.data[0] = 1.0f;
    const Tensor y2 = conv_forward(x2, w2, Tensor::zeros({1}));
    CHECK(y2.data == x2.data);

    CHECK_THROWS_AS(conv_forward(x, Tensor::zeros({1, 2, 2, 2}), b), Error);       // channel mismatch
    CHECK_THROWS_AS(conv_forward(x, Tensor::zeros({1, 1, 4, 4}), b), Error);       // kernel too big
}

TEST_CASE("conv/fc/pool forward match brute-force oracles on random shapes (64-bit)") {
    Rng rng(5);
    for (int trial = 0; trial < 120; ++trial) {
        const int n = 1 + rng.below(3), c = 1 + rng.below(3);
        const int h = 2 + rng.below(9), w = 2 + rng.below(9);
        const int f = 1 + rng.below(4);
        const int kh = 1 + rng.below(static_cast<uint32_t>(h)), kw = 1 + rng.below(static_cast<uint32_t>(w));

        TensorT<double> x = TensorT<double>::zeros({n, c, h, w});
        TensorT<double> wt = TensorT<double>::zeros({f, c, kh, kw});
        TensorT<double> b = TensorT<double>::zeros({f});
        fill_uniform(x, rng, -1, 1);
        fill_uniform(wt, rng, -1, 1);
        fill_uniform(b, rng, -1, 1);
        const TensorT<double> got = conv_forward(x, wt, b);
        const TensorT<double> want = conv_oracle(x, wt, b);
        REQUIRE(got.shape == want.shape);
        for (size_t i = 0; i < got.numel(); ++i) CHECK(close(got.data[i], want.data[i], 1e-6));

        const int d = 1 + rng.below(30), out = 1 + rng.below(10);
        TensorT<double> fx = TensorT<double>::zeros({n, d});
        TensorT<double> fw = TensorT<double>::zeros({out, d});
        TensorT<double> fb = TensorT<double>::zeros({out});
        fill_uniform(fx, rng, -1, 1);
        fill_uniform(fw, rng, -1, 1);
        fill_uniform(fb, rng, -1, 1);
        const TensorT<double> fgot = fc_forward(fx, fw, fb);
        const TensorT<double> fwant = fc_oracle(fx, fw, fb);
        for (size_t i = 0; i < fgot.numel(); ++i) CHECK(close(fgot.data[i], fwant.data[i], 1e-6));

        TensorT<double> px = TensorT<double>::zeros({n, c, 2 * (1 + static_cast<int>(rng.below(5))),
                                                     2 * (1 + static_cast<int>(rng.below(5)))});
        fill_uniform(px, rng, -1, 1);
        const auto pgot = pool_forward(px);
        const TensorT<double> pwant = pool_oracle(px);
        CHECK(pgot.y.data == pwant.data);
    }
}

TEST_CASE("float conv path tracks the double oracle within accumulation tolerance") {
    Rng rng(6);
    for (int trial = 0; trial < 30; ++trial) {
        const int c = 1 + rng.below(3), h = 4 + rng.below(8), w = 4 + rng.below(8);
        const int kh = 1 + rng.below(4), kw = 1 + rng.below(4);
        TensorT<double> xd = TensorT<double>::zeros({1, c, h, w});
        TensorT<double> wd = TensorT<double>::zeros({2, c, kh, kw});
        TensorT<double> bd = TensorT<double>::zeros({2});
        fill_uniform(xd, rng, -1, 1);
        fill_uniform(wd, rng, -1, 1);
        fill_uniform(bd, rng, -1, 1);
        Tensor xf = Tensor::zeros({1, c, h, w}), wf = Tensor::zeros({2, c, kh, kw}),
               bf = Tensor::zeros({2});
        for (size_t i = 0; i < xd.numel(); ++i) xf.data[i] = static_cast<float>(xd.data[i]);
        for (size_t i = 0; i < wd.numel(); ++i) wf.data[i] = static_cast<float>(wd.data[i]);
        for (size_t i = 0; i < bd.numel(); ++i) bf.data[i] = static_cast<float>(bd.data[i]);

        const TensorT<double> want = conv_oracle(xd, wd, bd);
        const Tensor got = conv_forward(xf, wf, bf);
        // Per-element error scales with the number of accumulated products.
        const double tol = 1e-6 * static_cast<double>(c * kh * kw) * 8.0 + 1e-6;
        for (size_t i = 0; i < got.numel(); ++i)
            CHECK(std::abs(static_cast<double>(got.data[i]) - want.data[i]) <= tol);
    }
}

TEST_CASE("conv_backward basics and finite differences") {
    Rng rng(7);
    TensorT<double> x = TensorT<double>::zeros({2, 2, 5, 5});
    TensorT<double> w = TensorT<double>::zeros({3, 2, 3, 3});
    fill_uniform(x, rng, -1, 1);
    fill_uniform(w, rng, -1, 1);
    TensorT<double> b = TensorT<double>::zeros({3});

    // Zero upstream gradient -> zero parameter/input gradients.
    const TensorT<double> zero_gy = TensorT<double>::zeros({2, 3, 3, 3});
    const auto zg = conv_backward(x, w, zero_gy);
    for (double v : zg.x.data) CHECK(v == 0.0);
    for (double v : zg.w.data) CHECK(v == 0.0);
    for (double v : zg.b.data) CHECK(v == 0.0);

    // grad_b equals the per-filter sum of grad_out.
    TensorT<double> gy = TensorT<double>::zeros({2, 3, 3, 3});
    fill_uniform(gy, rng, -1, 1);
    const auto g = conv_backward(x, w, gy);
    for (int f = 0; f < 3; ++f) {
        double sum = 0;
        for (int n = 0; n < 2; ++n)
            for (int i = 0; i < 9; ++i) sum += gy.data[(static_cast<size_t>(n) * 3 + f) * 9 + i];
        CHECK(close(g.b.data[f], sum, 1e-12));
    }

    // Finite differences through the scalar loss sum(conv(x,w,b) * gy).
    auto loss = [&](const TensorT<double>& xx, const TensorT<double>& ww, const TensorT<double>& bb) {
        const auto y = conv_forward(xx, ww, bb);
        double acc = 0;
        for (size_t i = 0; i < y.numel(); ++i) acc += y.data[i] * gy.data[i];
        return acc;
    };
    const double eps = 1e-5;
    for (int k = 0; k < 40; ++k) {
        {
            const size_t i = rng.below(static_cast<uint32_t>(w.numel()));
            auto wp = w, wm = w;
            wp.data[i] += eps;
            wm.data[i] -= eps;
            const double fd = (loss(x, wp, b) - loss(x, wm, b)) / (2 * eps);
            CHECK(rel_err(g.w.data[i], fd) < 1e-4);
        }
        {
            const size_t i = rng.below(static_cast<uint32_t>(x.numel()));
            auto xp = x, xm = x;
            xp.data[i] += eps;
            xm.data[i] -= eps;
            const double fd = (loss(xp, w, b) - loss(xm, w, b)) / (2 * eps);
            CHECK(rel_err(g.x.data[i], fd) < 1e-4);
        }
    }
}

TEST_CASE("pooling examples, tie rule, odd dims, gradients") {
    Tensor x = Tensor::zeros({1, 1, 2, 2});
    x.data = {1, 2, 3, 4};
    const auto r = pool_forward(x);
    CHECK(r.y.data[0] == 4.0f);
    CHECK(r.argmax[0] == 3);

    Tensor tie = Tensor::zeros({1, 1, 2, 2});
    tie.fill(7.0f);
    CHECK(pool_forward(tie).argmax[0] == 0);  // first in row-major order

    CHECK_THROWS_AS(pool_forward(Tensor::zeros({1, 1, 3, 4})), Error);

    // Gradients route only to the argmax; check against finite differences
    // on a tie-free random input.
    Rng rng(11);
    TensorT<double> xd = TensorT<double>::zeros({1, 2, 4, 6});
    fill_uniform(xd, rng, -1, 1);
    TensorT<double> gy = TensorT<double>::zeros({1, 2, 2, 3});
    fill_uniform(gy, rng, -1, 1);
    const auto fwd = pool_forward(xd);
    const auto gx = pool_backward(gy, fwd.argmax, xd.shape);
    auto loss = [&](const TensorT<double>& in) {
        const auto y = pool_forward(in);
        double acc = 0;
        for (size_t i = 0; i < y.y.numel(); ++i) acc += y.y.data[i] * gy.data[i];
        return acc;
    };
    const double eps = 1e-6;
    for (size_t i = 0; i < xd.numel(); ++i) {
        auto xp = xd, xm = xd;
        xp.data[i] += eps;
        xm.data[i] -= eps;
        const double fd = (loss(xp) - loss(xm)) / (2 * eps);
        CHECK(std::abs(gx.data[i] - fd) < 1e-6);
    }
}

TEST_CASE("fc identity, zero input, finite differences") {
    Tensor x = Tensor::zeros({2, 3});
    x.data = {1, 2, 3, 4, 5, 6};
    Tensor eye = Tensor::zeros({3, 3});
    for (int i = 0; i < 3; ++i) eye.data[static_cast<size_t>(i) * 3 + i] = 1.0f;
    CHECK(fc_forward(x, eye, Tensor::zeros({3})).data == x.data);

    Tensor zero_x = Tensor::zeros({1, 3});
    Tensor b = Tensor::zeros({3});
    b.data = {0.5f, -1.0f, 2.0f};
    CHECK(fc_forward(zero_x, eye, b).data == b.data);

    CHECK_THROWS_AS(fc_forward(x, Tensor::zeros({3, 4}), Tensor::zeros({3})), Error);

    Rng rng(13);
    TensorT<double> xd = TensorT<double>::zeros({3, 7});
    TensorT<double> wd = TensorT<double>::zeros({4, 7});
    TensorT<double> bd = TensorT<double>::zeros({4});
    TensorT<double> gy = TensorT<double>::zeros({3, 4});
    fill_uniform(xd, rng, -1, 1);
    fill_uniform(wd, rng, -1, 1);
    fill_uniform(bd, rng, -1, 1);
    fill_uniform(gy, rng, -1, 1);
    const auto g = fc_backward(xd, wd, gy);
    auto loss = [&](const TensorT<double>& xx, const TensorT<double>& ww, const TensorT<double>& bb) {
        const auto y = fc_forward(xx, ww, bb);
        double acc = 0;
        for (size_t i = 0; i < y.numel(); ++i) acc += y.data[i] * gy.data[i];
        return acc;
    };
    const double eps = 1e-6;
    for (size_t i = 0; i < wd.numel(); ++i) {
        auto wp = wd, wm = wd;
        wp.data[i] += eps;
        wm.data[i] -= eps;
        CHECK(rel_err(g.w.data[i], (loss(xd, wp, bd) - loss(xd, wm, bd)) / (2 * eps)) < 1e-4);
    }
    for (size_t i = 0; i < xd.numel(); ++i) {
        auto xp = xd, xm = xd;
        xp.data[i] += eps;
        xm.data[i] -= eps;
        CHECK(rel_err(g.x.data[i], (loss(xp, wd, bd) - loss(xm, wd, bd)) / (2 * eps)) < 1e-4);
    }
}

TEST_CASE("relu semantics") {
    Tensor x = Tensor::zeros({1, 4});
    x.data = {-1.0f, 0.0f, 0.5f, 2.0f};
    const Tensor y = relu(x);
    CHECK(y.data == std::vector<float>{0.0f, 0.0f, 0.5f, 2.0f});

    Tensor gy = Tensor::zeros({1, 4});
    gy.fill(1.0f);
    const Tensor gx = relu_backward(x, gy);
    CHECK(gx.data == std::vector<float>{0.0f, 0.0f, 1.0f, 1.0f});  // gradient 0 at x == 0
}

TEST_CASE("softmax cross entropy") {
    Tensor logits = Tensor::zeros({1, 3});
    const int label0[1] = {0};
    auto r = softmax_xent(logits, std::span<const int>(label0, 1));
    CHECK(close(r.loss, std::log(3.0), 1e-6));
    for (int j = 0; j < 3; ++j) CHECK(close(r.probs.data[j], 1.0 / 3.0, 1e-6));

    // Large logits must not overflow.
    Tensor big = Tensor::zeros({1, 3});
    big.data = {1000.0f, 0.0f, 0.0f};
    auto rb = softmax_xent(big, std::span<const int>(label0, 1));
    CHECK(std::isfinite(rb.loss));
    CHECK(rb.loss < 1e-6);

    // Shift invariance: adding a constant to a row changes nothing.
    Rng rng(17);
    Tensor a = Tensor::zeros({2, 3});
    fill_uniform(a, rng, -2, 2);
    Tensor shifted = a;
    for (int j = 0; j < 3; ++j) shifted.data[j] += 7.5f;
    const int labels[2] = {2, 1};
    auto ra = softmax_xent(a, std::span<const int>(labels, 2));
    auto rs = softmax_xent(shifted, std::span<const int>(labels, 2));
    CHECK(close(ra.loss, rs.loss, 1e-5));
    for (size_t i = 0; i < ra.grad.numel(); ++i) CHECK(close(ra.grad.data[i], rs.grad.data[i], 1e-5));

    // Rows sum to 1; loss is non-negative.
    for (int n = 0; n < 2; ++n) {
        double sum = 0;
        for (int j = 0; j < 3; ++j) sum += ra.probs.data[static_cast<size_t>(n) * 3 + j];
        CHECK(close(sum, 1.0, 1e-6));
    }
    CHECK(ra.loss >= 0.0f);

    const int bad[1] = {5};
    CHECK_THROWS_AS(softmax_xent(logits, std::span<const int>(bad, 1)), Error);
}

TEST_CASE("param_count closed form") {
    ArchConfig arch;  // c1=6, c2=2
    CHECK(param_count(arch) == 54941);
    CHECK(arch.fc1_inputs() == 450);

    // fc2 alone: 120*3 + 3.
    CHECK(ArchConfig::classes * (ArchConfig::fc1_units + 1) == 363);

    // Closed form 26*c1 + (25*c1+1)*c2 + (225*c2+1)*120 + 363 across configs.
    for (int c1 = 1; c1 <= 8; ++c1)
        for (int c2 = 1; c2 <= 4; ++c2) {
            ArchConfig a;
            a.c1 = c1;
            a.c2 = c2;
            CHECK(param_count(a) == 26 * c1 + (25 * c1 + 1) * c2 + (225 * c2 + 1) * 120 + 363);
        }

    ArchConfig bad;
    bad.c1 = 0;
    CHECK_THROWS_AS(param_count(bad), Error);
}

TEST_CASE("init_params determinism and distribution") {
    ArchConfig arch;
    const Network a = init_params(arch, 99);
    const Network b = init_params(arch, 99);
    CHECK(a == b);
    const Network c = init_params(arch, 100);
    CHECK(a.conv1_w.data != c.conv1_w.data);

    for (float v : a.conv1_b.data) CHECK(v == 0.0f);
    for (float v : a.fc1_b.data) CHECK(v == 0.0f);

    // Empirical mean of fc1 weights (54,000 draws) within 3 sigma of 0 for
    // uniform(-a, a): sigma_mean = a / sqrt(3 n).
    const double bound = std::sqrt(6.0 / (450 + 120));
    double mean = 0;
    for (float v : a.fc1_w.data) mean += v;
    mean /= static_cast<double>(a.fc1_w.numel());
    const double sigma_mean = bound / std::sqrt(3.0 * static_cast<double>(a.fc1_w.numel()));
    CHECK(std::abs(mean) < 3 * sigma_mean);
    for (float v : a.fc1_w.data) CHECK(std::abs(v) <= bound);
}

TEST_CASE("forward shape, determinism, batch permutation") {
    ArchConfig arch;
    const Network net = init_params(arch, 7);
    Rng rng(19);
    Tensor x = Tensor::zeros({4, 1, 72, 72});
    for (auto& v : x.data) v = rng.below(2) ? 1.0f : 0.0f;

    const Tensor y1 = forward(net, x);
    CHECK(y1.shape == std::vector<int>{4, 3});
    const Tensor y2 = forward(net, x);
    CHECK(y1.data == y2.data);  // bit-identical on repeated calls

    // Permuting the batch permutes the logits identically.
    Tensor xp = Tensor::zeros({4, 1, 72, 72});
    const int perm[4] = {2, 0, 3, 1};
    const size_t plane = 72 * 72;
    for (int i = 0; i < 4; ++i)
        std::copy(x.ptr() + perm[i] * plane, x.ptr() + (perm[i] + 1) * plane, xp.ptr() + i * plane);
    const Tensor yp = forward(net, xp);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(yp.data[static_cast<size_t>(i) * 3 + j] ==
                  y1.data[static_cast<size_t>(perm[i]) * 3 + j]);

    CHECK_THROWS_AS(forward(net, Tensor::zeros({1, 1, 64, 64})), Error);
}

TEST_CASE("predict is invariant under monotone transforms of the logits") {
    ArchConfig arch;
    const Network net = init_params(arch, 77);
    Rng rng(79);
    Tensor x = Tensor::zeros({6, 1, 72, 72});
    for (auto& v : x.data) v = rng.below(2) ? 1.0f : 0.0f;
    const auto base = predict(net, x);

    // Uniform shift of every logit (add a constant to the fc2 biases).
    Network shifted = net;
    for (auto& b : shifted.fc2_b.data) b += 3.25f;
    CHECK(predict(shifted, x) == base);

    // Positive rescale of every logit (scale fc2 weights and biases).
    Network scaled = net;
    for (auto& w : scaled.fc2_w.data) w *= 2.5f;
    for (auto& b : scaled.fc2_b.data) b *= 2.5f;
    CHECK(predict(scaled, x) == base);
}

TEST_CASE("predict argmax with lowest-index ties") {
    ArchConfig arch;
    Network net = init_params(arch, 21);
    // Zero out fc2 so logits are all equal: every prediction must be class 0.
    net.fc2_w.fill(0.0f);
    net.fc2_b.fill(0.0f);
    Tensor x = Tensor::zeros({2, 1, 72, 72});
    x.fill(1.0f);
    const auto labels = predict(net, x);
    CHECK(labels == std::vector<int>{0, 0});
}

TEST_CASE("model save/load round trip and corruption errors") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "gazekit_model_test";
    fs::create_directories(dir);
    const fs::path path = dir / "m.gzk";

    ArchConfig arch;
    arch.c1 = 4;
    arch.c2 = 3;
    const Network net = init_params(arch, 1234);
    save_model(net, path);
    const Network loaded = load_model(path);
    CHECK(loaded.arch == net.arch);
    auto a = net.params();
    auto b = loaded.params();
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i]->data == b[i]->data);

    // save -> load -> forward equals the original forward bitwise.
    Rng rng(23);
    Tensor x = Tensor::zeros({2, 1, 72, 72});
    for (auto& v : x.data) v = rng.below(2) ? 1.0f : 0.0f;
    CHECK(forward(net, x).data == forward(loaded, x).data);

    // Corrupted magic -> format error.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(load_model(path), Error);
    try {
        load_model(path);
    } catch (const Error& e) {
        CHECK(e.code() == Err::format);
    }

    // NaN weight -> validation error.
    save_model(net, path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4 + 2 + 6 * 4);  // first float of conv1_w
        const uint32_t nan_bits = 0x7fc00000;
        f.write(reinterpret_cast<const char*>(&nan_bits), 4);
    }
    try {
        load_model(path);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Err::validation);
    }

    // Truncated file -> format error with byte offset.
    save_model(net, path);
    fs::resize_file(path, 100);
    try {
        load_model(path);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Err::format);
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("full-network gradient check (64-bit, one seed)") {
    ArchConfig arch;
    const auto r = full_net_grad_check(arch, 4242, 2, 12);
    CHECK(r.checked + r.skipped_ties == 8 * 12);
    CHECK(r.checked >= 8 * 12 * 3 / 4);  // tie-straddling stencils must stay rare
    CHECK(r.max_rel_err < 1e-4);
}
