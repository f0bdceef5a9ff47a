#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bsac/errors.hpp"

namespace bsac {

// Dense row-major tensor of doubles. Rank 1 and rank 2 are the only shapes
// the library produces; a rank-1 tensor of length n behaves like [1, n] in
// matrix contexts.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> shape_, std::vector<double> data_);

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor vec(std::vector<double> values);                  // [n]
    static Tensor row(std::vector<double> values);                  // [1, n]
    static Tensor matrix(int rows, int cols, std::vector<double> values);

    int64_t numel() const;
    int rows() const;  // 1 for rank-1
    int cols() const;  // last dimension

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }
    double& operator[](size_t i) { return data[i]; }
    double operator[](size_t i) const { return data[i]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    std::string shape_str() const;
};

int64_t shape_numel(const std::vector<int>& shape);

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape " + a.shape_str() + " vs " +
                         b.shape_str());
    }
}

}  // namespace bsac
