#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

#include "sgym/errors.hpp"

namespace sgym {

// Dense row-major tensor of doubles. Intentionally minimal: shape + flat data.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel(shape), 0.0) {}

    static size_t numel(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) {
            if (d < 0) throw ShapeMismatch("negative tensor dimension");
            n *= static_cast<size_t>(d);
        }
        return n;
    }

    size_t size() const { return data.size(); }
    int dim(size_t i) const { return shape[i]; }
    size_t rank() const { return shape.size(); }

    void fill(double v) { data.assign(data.size(), v); }
    void zero() { fill(0.0); }

    double& operator[](size_t i) { return data[i]; }
    double operator[](size_t i) const { return data[i]; }

    // Row-major index helpers; bounds are the caller's responsibility
    // (checked with assert in debug builds).
    double& at2(int i, int j) {
        assert(rank() == 2);
        return data[static_cast<size_t>(i) * shape[1] + j];
    }
    double at2(int i, int j) const {
        assert(rank() == 2);
        return data[static_cast<size_t>(i) * shape[1] + j];
    }
    double& at3(int i, int j, int k) {
        assert(rank() == 3);
        return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double at3(int i, int j, int k) const {
        assert(rank() == 3);
        return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double& at4(int i, int j, int k, int l) {
        assert(rank() == 4);
        return data[((static_cast<size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }
    double at4(int i, int j, int k, int l) const {
        assert(rank() == 4);
        return data[((static_cast<size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }
    double& at5(int i, int j, int k, int l, int m) {
        assert(rank() == 5);
        return data[(((static_cast<size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l) *
                        shape[4] +
                    m];
    }
    double at5(int i, int j, int k, int l, int m) const {
        assert(rank() == 5);
        return data[(((static_cast<size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l) *
                        shape[4] +
                    m];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

inline void require_shape(const Tensor& t, const std::vector<int>& want, const char* what) {
    if (t.shape != want) throw ShapeMismatch(std::string("unexpected shape for ") + what);
}

}  // namespace sgym
