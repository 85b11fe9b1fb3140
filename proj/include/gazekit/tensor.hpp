#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "gazekit/error.hpp"

namespace gazekit {

// Dense row-major tensor. float for training/inference, double for the
// gradient-check mode.
template <typename F>
struct TensorT {
    std::vector<int> shape;
    std::vector<F> data;

    TensorT() = default;

    static TensorT zeros(std::initializer_list<int> s) {
        TensorT t;
        t.shape.assign(s);
        t.data.assign(numel_of(t.shape), F(0));
        return t;
    }

    static TensorT zeros_like(const TensorT& o) {
        TensorT t;
        t.shape = o.shape;
        t.data.assign(o.data.size(), F(0));
        return t;
    }

    static size_t numel_of(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) {
            require(d >= 0, Err::shape, "negative tensor dimension");
            n *= static_cast<size_t>(d);
        }
        return n;
    }

    size_t numel() const { return data.size(); }
    int dim(size_t i) const { return shape.at(i); }
    int rank() const { return static_cast<int>(shape.size()); }

    F* ptr() { return data.data(); }
    const F* ptr() const { return data.data(); }

    std::string shape_str() const {
        std::string s = "(";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }

    void fill(F v) { std::fill(data.begin(), data.end(), v); }

    bool operator==(const TensorT&) const = default;
};

using Tensor = TensorT<float>;

template <typename F>
void check_shape(const TensorT<F>& t, std::initializer_list<int> expect, const char* what) {
    bool ok = t.shape.size() == expect.size();
    if (ok) {
        size_t i = 0;
        for (int d : expect) ok = ok && t.shape[i++] == d;
    }
    if (!ok) {
        TensorT<F> e;
        e.shape.assign(expect);
        fail(Err::shape, std::string(what) + ": got shape " + t.shape_str() + ", expected " + e.shape_str());
    }
}

}  // namespace gazekit
