#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "gazekit/layers.hpp"
#include "gazekit/tensor.hpp"

namespace gazekit {

// C(5x5)-S(2x2)-C(5x5)-S(2x2)-FC(120)-FC(3) over a 1x72x72 input.
// Channel counts c1/c2 are configurable; everything else is fixed and the
// spatial chain 72 -> 68 -> 34 -> 30 -> 15 is asserted at construction.
struct ArchConfig {
    int c1 = 6;
    int c2 = 2;

    static constexpr int input_hw = 72;
    static constexpr int kernel = 5;
    static constexpr int fc1_units = 120;
    static constexpr int classes = 3;

    static constexpr int conv1_hw = input_hw - kernel + 1;  // 68
    static constexpr int pool1_hw = conv1_hw / 2;           // 34
    static constexpr int conv2_hw = pool1_hw - kernel + 1;  // 30
    static constexpr int pool2_hw = conv2_hw / 2;           // 15

    static_assert(conv1_hw == 68 && pool1_hw == 34 && conv2_hw == 30 && pool2_hw == 15);

    int fc1_inputs() const { return pool2_hw * pool2_hw * c2; }
    void validate() const;
    int64_t param_count() const;
    bool operator==(const ArchConfig&) const = default;
};

int64_t param_count(const ArchConfig& arch);

template <typename F>
struct NetT {
    ArchConfig arch;
    uint64_t rng_seed = 0;
    TensorT<F> conv1_w, conv1_b, conv2_w, conv2_b, fc1_w, fc1_b, fc2_w, fc2_b;

    std::array<TensorT<F>*, 8> params() {
        return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc1_w, &fc1_b, &fc2_w, &fc2_b};
    }
    std::array<const TensorT<F>*, 8> params() const {
        return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc1_w, &fc1_b, &fc2_w, &fc2_b};
    }
    bool operator==(const NetT&) const = default;
};

using Network = NetT<float>;

inline constexpr std::array<const char*, 8> kParamNames = {
    "conv1_w", "conv1_b", "conv2_w", "conv2_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b"};

// Glorot-uniform weights, zero biases; bit-identical for equal seeds.
Network init_params(const ArchConfig& arch, uint64_t seed);
NetT<double> to_double(const Network& net);

// Activations kept for the backward pass.
template <typename F>
struct ForwardTrace {
    TensorT<F> x;
    TensorT<F> conv1_out, relu1_out;
    PoolResult<F> pool1;
    TensorT<F> conv2_out, relu2_out;
    PoolResult<F> pool2;
    TensorT<F> flat, fc1_out, relu3_out, logits;
};

template <typename F>
struct Gradients {
    TensorT<F> conv1_w, conv1_b, conv2_w, conv2_b, fc1_w, fc1_b, fc2_w, fc2_b;

    std::array<TensorT<F>*, 8> params() {
        return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc1_w, &fc1_b, &fc2_w, &fc2_b};
    }
    std::array<const TensorT<F>*, 8> params() const {
        return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc1_w, &fc1_b, &fc2_w, &fc2_b};
    }

    static Gradients zeros_like(const NetT<F>& net) {
        Gradients g;
        auto src = net.params();
        auto dst = g.params();
        for (size_t i = 0; i < src.size(); ++i) *dst[i] = TensorT<F>::zeros_like(*src[i]);
        return g;
    }
};

template <typename F>
TensorT<F> forward(const NetT<F>& net, const TensorT<F>& batch, ForwardTrace<F>* trace = nullptr);

// Softmax cross-entropy loss and parameter/input gradients for one batch.
template <typename F>
F backward(const NetT<F>& net, const ForwardTrace<F>& trace, std::span<const int> labels,
           Gradients<F>& grads);

std::vector<int> predict(const Network& net, const Tensor& batch);

// Model file: magic "GZK1", u16 format version, little-endian; the
// architecture header, then per-layer f32 weight/bias blobs in declaration
// order (conv1_w, conv1_b, conv2_w, conv2_b, fc1_w, fc1_b, fc2_w, fc2_b).
void save_model(const Network& net, const std::filesystem::path& path);
Network load_model(const std::filesystem::path& path);

extern template TensorT<float> forward<float>(const NetT<float>&, const TensorT<float>&, ForwardTrace<float>*);
extern template TensorT<double> forward<double>(const NetT<double>&, const TensorT<double>&, ForwardTrace<double>*);
extern template float backward<float>(const NetT<float>&, const ForwardTrace<float>&, std::span<const int>, Gradients<float>&);
extern template double backward<double>(const NetT<double>&, const ForwardTrace<double>&, std::span<const int>, Gradients<double>&);

}  // namespace gazekit
