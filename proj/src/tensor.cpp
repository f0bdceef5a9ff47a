#include "bsac/tensor.hpp"

#include <sstream>

namespace bsac {

int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d < 0) throw ShapeError("negative dimension in shape");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str());
    }
}

Tensor Tensor::zeros(std::vector<int> shape) {
    Tensor t;
    int64_t n = shape_numel(shape);
    t.shape = std::move(shape);
    t.data.assign(static_cast<size_t>(n), 0.0);
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.data) x = value;
    return t;
}

Tensor Tensor::vec(std::vector<double> values) {
    Tensor t;
    t.shape = {static_cast<int>(values.size())};
    t.data = std::move(values);
    return t;
}

Tensor Tensor::row(std::vector<double> values) {
    Tensor t;
    t.shape = {1, static_cast<int>(values.size())};
    t.data = std::move(values);
    return t;
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

int64_t Tensor::numel() const { return static_cast<int64_t>(data.size()); }

int Tensor::rows() const {
    if (shape.size() == 2) return shape[0];
    if (shape.size() == 1) return 1;
    throw ShapeError("rows() on rank-" + std::to_string(shape.size()) + " tensor");
}

int Tensor::cols() const {
    if (shape.empty()) throw ShapeError("cols() on rank-0 tensor");
    return shape.back();
}

bool Tensor::all_finite() const {
    for (double x : data) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

}  // namespace bsac
