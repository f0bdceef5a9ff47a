#include "bsac/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsac/errors.hpp"

namespace bsac {

namespace {

void require_matrixish(const Tensor& t, const char* what) {
    if (t.shape.empty() || t.shape.size() > 2) {
        throw ShapeError(std::string(what) + ": expected rank 1 or 2, got " + t.shape_str());
    }
}

}  // namespace

int Tape::push(TapeNode node) {
    if (backward_done_) {
        throw UsageError("tape already consumed by backward(); reset() before reuse");
    }
    if (node.op != OpKind::kLeaf) {
        bool needs = false;
        for (int in : {node.a, node.b, node.c}) {
            if (in >= 0) needs = needs || nodes_[in].needs_grad;
        }
        node.needs_grad = needs;
    } else {
        node.needs_grad = node.requires_grad;
    }
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

const Tensor& Tape::val(int id) const {
    const TapeNode& n = nodes_[id];
    return n.ref ? *n.ref : n.value;
}

TapeNode& Tape::node_checked(Var v) {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
        throw UsageError("invalid tape handle");
    }
    return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
        throw UsageError("invalid tape handle");
    }
    return val(v.id);
}

void Tape::reset() {
    nodes_.clear();
    grads_.clear();
    backward_done_ = false;
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    TapeNode n;
    n.op = OpKind::kLeaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return {push(std::move(n))};
}

Var Tape::leaf_ref(const Tensor& value, bool requires_grad) {
    TapeNode n;
    n.op = OpKind::kLeaf;
    n.ref = &value;
    n.requires_grad = requires_grad;
    return {push(std::move(n))};
}

Var Tape::linear(Var x, Var w, Var b) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    const Tensor& bv = value(b);
    require_matrixish(xv, "linear input");
    const int rows = xv.rows(), in = xv.cols();
    if (wv.shape.size() != 2 || wv.shape[0] != in) {
        throw ShapeError("linear: input width " + std::to_string(in) +
                         " vs weight shape " + wv.shape_str());
    }
    const int out = wv.shape[1];
    if (static_cast<int>(bv.numel()) != out) {
        throw ShapeError("linear: bias length " + std::to_string(bv.numel()) +
                         " vs output width " + std::to_string(out));
    }
    Tensor y = Tensor::zeros({rows, out});
    for (int r = 0; r < rows; ++r) {
        double* yr = &y.data[static_cast<size_t>(r) * out];
        for (int o = 0; o < out; ++o) yr[o] = bv.data[o];
        const double* xr = &xv.data[static_cast<size_t>(r) * in];
        for (int i = 0; i < in; ++i) {
            const double xi = xr[i];
            const double* wi = &wv.data[static_cast<size_t>(i) * out];
            for (int o = 0; o < out; ++o) yr[o] += xi * wi[o];
        }
    }
    TapeNode n;
    n.op = OpKind::kLinear;
    n.a = x.id;
    n.b = w.id;
    n.c = b.id;
    n.value = std::move(y);
    return {push(std::move(n))};
}

#define BSAC_UNARY(NAME, KIND, EXPR)                     \
    Var Tape::NAME(Var x) {                              \
        const Tensor& xv = value(x);                     \
        Tensor y = xv;                                   \
        for (double& v : y.data) v = (EXPR);             \
        TapeNode n;                                      \
        n.op = OpKind::KIND;                             \
        n.a = x.id;                                      \
        n.value = std::move(y);                          \
        return {push(std::move(n))};                     \
    }

BSAC_UNARY(relu, kRelu, v > 0.0 ? v : 0.0)
BSAC_UNARY(tanh, kTanh, std::tanh(v))
BSAC_UNARY(exp, kExp, std::exp(v))
BSAC_UNARY(log, kLog, std::log(v))
BSAC_UNARY(square, kSquare, v* v)
BSAC_UNARY(neg, kNeg, -v)
#undef BSAC_UNARY

Var Tape::clamp(Var x, double lo, double hi) {
    if (!(lo <= hi)) throw UsageError("clamp: lo > hi");
    const Tensor& xv = value(x);
    Tensor y = xv;
    for (double& v : y.data) v = std::min(hi, std::max(lo, v));
    TapeNode n;
    n.op = OpKind::kClamp;
    n.a = x.id;
    n.s0 = lo;
    n.s1 = hi;
    n.value = std::move(y);
    return {push(std::move(n))};
}

#define BSAC_BINARY(NAME, KIND, EXPR)                               \
    Var Tape::NAME(Var a, Var b) {                                  \
        const Tensor& av = value(a);                                \
        const Tensor& bv = value(b);                                \
        require_same_shape(av, bv, #NAME);                          \
        Tensor y = av;                                              \
        for (size_t i = 0; i < y.data.size(); ++i) {                \
            const double u = av.data[i], v = bv.data[i];            \
            (void)u;                                                \
            (void)v;                                                \
            y.data[i] = (EXPR);                                     \
        }                                                           \
        TapeNode n;                                                 \
        n.op = OpKind::KIND;                                        \
        n.a = a.id;                                                 \
        n.b = b.id;                                                 \
        n.value = std::move(y);                                     \
        return {push(std::move(n))};                                \
    }

BSAC_BINARY(add, kAdd, u + v)
BSAC_BINARY(sub, kSub, u - v)
BSAC_BINARY(mul, kMul, u* v)
BSAC_BINARY(minimum, kMin, u <= v ? u : v)
#undef BSAC_BINARY

Var Tape::add_const(Var x, double c) {
    const Tensor& xv = value(x);
    Tensor y = xv;
    for (double& v : y.data) v += c;
    TapeNode n;
    n.op = OpKind::kAddConst;
    n.a = x.id;
    n.s0 = c;
    n.value = std::move(y);
    return {push(std::move(n))};
}

Var Tape::mul_const(Var x, double c) {
    const Tensor& xv = value(x);
    Tensor y = xv;
    for (double& v : y.data) v *= c;
    TapeNode n;
    n.op = OpKind::kMulConst;
    n.a = x.id;
    n.s0 = c;
    n.value = std::move(y);
    return {push(std::move(n))};
}

Var Tape::const_minus(double c, Var x) {
    const Tensor& xv = value(x);
    Tensor y = xv;
    for (double& v : y.data) v = c - v;
    TapeNode n;
    n.op = OpKind::kConstMinus;
    n.a = x.id;
    n.s0 = c;
    n.value = std::move(y);
    return {push(std::move(n))};
}

Var Tape::concat_cols(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_matrixish(av, "concat_cols");
    require_matrixish(bv, "concat_cols");
    if (av.rows() != bv.rows()) {
        throw ShapeError("concat_cols: row mismatch " + av.shape_str() + " vs " + bv.shape_str());
    }
    const int rows = av.rows(), ca = av.cols(), cb = bv.cols();
    Tensor y = Tensor::zeros({rows, ca + cb});
    for (int r = 0; r < rows; ++r) {
        for (int j = 0; j < ca; ++j) y.at(r, j) = av.at(r, j);
        for (int j = 0; j < cb; ++j) y.at(r, ca + j) = bv.at(r, j);
    }
    TapeNode n;
    n.op = OpKind::kConcatCols;
    n.a = a.id;
    n.b = b.id;
    n.i0 = ca;
    n.value = std::move(y);
    return {push(std::move(n))};
}

Var Tape::slice_cols(Var x, int c0, int c1) {
    const Tensor& xv = value(x);
    require_matrixish(xv, "slice_cols");
    if (c0 < 0 || c1 > xv.cols() || c0 >= c1) {
        throw ShapeError("slice_cols: range [" + std::to_string(c0) + ", " + std::to_string(c1) +
                         ") on " + xv.shape_str());
    }
    const int rows = xv.rows();
    Tensor y = Tensor::zeros({rows, c1 - c0});
    for (int r = 0; r < rows; ++r) {
        for (int j = c0; j < c1; ++j) y.at(r, j - c0) = xv.at(r, j);
    }
    TapeNode n;
    n.op = OpKind::kSliceCols;
    n.a = x.id;
    n.i0 = c0;
    n.i1 = c1;
    n.value = std::move(y);
    return {push(std::move(n))};
}

Var Tape::permute_cols(Var x, std::vector<int> perm) {
    const Tensor& xv = value(x);
    require_matrixish(xv, "permute_cols");
    if (static_cast<int>(perm.size()) != xv.cols()) {
        throw ShapeError("permute_cols: perm size " + std::to_string(perm.size()) + " vs " +
                         xv.shape_str());
    }
    std::vector<char> seen(perm.size(), 0);
    for (int p : perm) {
        if (p < 0 || p >= xv.cols() || seen[p]) throw UsageError("permute_cols: not a permutation");
        seen[p] = 1;
    }
    const int rows = xv.rows(), colsN = xv.cols();
    Tensor y = Tensor::zeros({rows, colsN});
    for (int r = 0; r < rows; ++r) {
        for (int j = 0; j < colsN; ++j) y.at(r, j) = xv.at(r, perm[j]);
    }
    TapeNode n;
    n.op = OpKind::kPermuteCols;
    n.a = x.id;
    n.perm = std::move(perm);
    n.value = std::move(y);
    return {push(std::move(n))};
}

Var Tape::row_sum(Var x) {
    const Tensor& xv = value(x);
    require_matrixish(xv, "row_sum");
    const int rows = xv.rows(), colsN = xv.cols();
    Tensor y = Tensor::zeros({rows, 1});
    for (int r = 0; r < rows; ++r) {
        double s = 0.0;
        for (int j = 0; j < colsN; ++j) s += xv.at(r, j);
        y.at(r, 0) = s;
    }
    TapeNode n;
    n.op = OpKind::kRowSum;
    n.a = x.id;
    n.value = std::move(y);
    return {push(std::move(n))};
}

Var Tape::mean_all(Var x) {
    const Tensor& xv = value(x);
    if (xv.numel() == 0) throw ShapeError("mean_all on empty tensor");
    double s = 0.0;
    for (double v : xv.data) s += v;
    Tensor y = Tensor::matrix(1, 1, {s / static_cast<double>(xv.numel())});
    TapeNode n;
    n.op = OpKind::kMeanAll;
    n.a = x.id;
    n.value = std::move(y);
    return {push(std::move(n))};
}

Tensor& Tape::grad_buf(int id) {
    Tensor& g = grads_[id];
    if (g.data.empty() && val(id).numel() > 0) {
        g = Tensor::zeros(val(id).shape);
    }
    return g;
}

bool Tape::has_grad(Var v) const {
    return backward_done_ && v.valid() && v.id < static_cast<int>(grads_.size()) &&
           !grads_[v.id].data.empty();
}

Tensor Tape::grad(Var v) const {
    if (!backward_done_) throw UsageError("grad() before backward()");
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
        throw UsageError("invalid tape handle");
    }
    if (grads_[v.id].data.empty()) return Tensor::zeros(val(v.id).shape);
    return grads_[v.id];
}

void Tape::backward(Var loss, double seed) {
    if (nodes_.empty()) throw UsageError("backward on empty tape");
    if (backward_done_) throw UsageError("backward called twice on one tape");
    const Tensor& lv = value(loss);
    if (lv.numel() != 1) {
        throw UsageError("backward: loss must be a single element, got " + lv.shape_str());
    }
    grads_.assign(nodes_.size(), Tensor{});
    grad_buf(loss.id).data[0] = seed;

    for (int id = loss.id; id >= 0; --id) {
        const TapeNode& n = nodes_[id];
        if (!n.needs_grad || grads_[id].data.empty()) continue;
        const Tensor& gy = grads_[id];
        switch (n.op) {
            case OpKind::kLeaf:
                break;
            case OpKind::kLinear: {
                const Tensor& xv = val(n.a);
                const Tensor& wv = val(n.b);
                const int rows = xv.rows(), in = xv.cols(), out = wv.shape[1];
                if (nodes_[n.a].needs_grad) {
                    Tensor& gx = grad_buf(n.a);
                    for (int r = 0; r < rows; ++r) {
                        const double* gyr = &gy.data[static_cast<size_t>(r) * out];
                        double* gxr = &gx.data[static_cast<size_t>(r) * in];
                        for (int i = 0; i < in; ++i) {
                            const double* wi = &wv.data[static_cast<size_t>(i) * out];
                            double s = 0.0;
                            for (int o = 0; o < out; ++o) s += gyr[o] * wi[o];
                            gxr[i] += s;
                        }
                    }
                }
                if (nodes_[n.b].needs_grad) {
                    Tensor& gw = grad_buf(n.b);
                    for (int r = 0; r < rows; ++r) {
                        const double* xr = &xv.data[static_cast<size_t>(r) * in];
                        const double* gyr = &gy.data[static_cast<size_t>(r) * out];
                        for (int i = 0; i < in; ++i) {
                            const double xi = xr[i];
                            double* gwi = &gw.data[static_cast<size_t>(i) * out];
                            for (int o = 0; o < out; ++o) gwi[o] += xi * gyr[o];
                        }
                    }
                }
                if (nodes_[n.c].needs_grad) {
                    Tensor& gb = grad_buf(n.c);
                    for (int r = 0; r < rows; ++r) {
                        const double* gyr = &gy.data[static_cast<size_t>(r) * out];
                        for (int o = 0; o < out; ++o) gb.data[o] += gyr[o];
                    }
                }
                break;
            }
            case OpKind::kRelu: {
                if (!nodes_[n.a].needs_grad) break;
                const Tensor& xv = val(n.a);
                Tensor& gx = grad_buf(n.a);
                for (size_t i = 0; i < gx.data.size(); ++i) {
                    if (xv.data[i] > 0.0) gx.data[i] += gy.data[i];
                }
                break;
            }
            case OpKind::kTanh: {
                if (!nodes_[n.a].needs_grad) break;
                Tensor& gx = grad_buf(n.a);
                for (size_t i = 0; i < gx.data.size(); ++i) {
                    const double t = n.value.data[i];
                    gx.data[i] += gy.data[i] * (1.0 - t * t);
                }
                break;
            }
            case OpKind::kExp: {
                if (!nodes_[n.a].needs_grad) break;
                Tensor& gx = grad_buf(n.a);
                for (size_t i = 0; i < gx.data.size(); ++i) {
                    gx.data[i] += gy.data[i] * n.value.data[i];
                }
                break;
            }
            case OpKind::kLog: {
                if (!nodes_[n.a].needs_grad) break;
                const Tensor& xv = val(n.a);
                Tensor& gx = grad_buf(n.a);
                for (size_t i = 0; i < gx.data.size(); ++i) {
                    gx.data[i] += gy.data[i] / xv.data[i];
                }
                break;
            }
            case OpKind::kSquare: {
                if (!nodes_[n.a].needs_grad) break;
                const Tensor& xv = val(n.a);
                Tensor& gx = grad_buf(n.a);
                for (size_t i = 0; i < gx.data.size(); ++i) {
                    gx.data[i] += gy.data[i] * 2.0 * xv.data[i];
                }
                break;
            }
            case OpKind::kNeg: {
                if (!nodes_[n.a].needs_grad) break;
                Tensor& gx = grad_buf(n.a);
                for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] -= gy.data[i];
                break;
            }
            case OpKind::kClamp: {
                if (!nodes_[n.a].needs_grad) break;
                const Tensor& xv = val(n.a);
                Tensor& gx = grad_buf(n.a);
                for (size_t i = 0; i < gx.data.size(); ++i) {
                    if (xv.data[i] >= n.s0 && xv.data[i] <= n.s1) gx.data[i] += gy.data[i];
                }
                break;
            }
            case OpKind::kAdd: {
                for (int in : {n.a, n.b}) {
                    if (!nodes_[in].needs_grad) continue;
                    Tensor& g = grad_buf(in);
                    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += gy.data[i];
                }
                break;
            }
            case OpKind::kSub: {
                if (nodes_[n.a].needs_grad) {
                    Tensor& ga = grad_buf(n.a);
                    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += gy.data[i];
                }
                if (nodes_[n.b].needs_grad) {
                    Tensor& gb = grad_buf(n.b);
                    for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] -= gy.data[i];
                }
                break;
            }
            case OpKind::kMul: {
                const Tensor& av = val(n.a);
                const Tensor& bv = val(n.b);
                if (nodes_[n.a].needs_grad) {
                    Tensor& ga = grad_buf(n.a);
                    for (size_t i = 0; i < ga.data.size(); ++i) {
                        ga.data[i] += gy.data[i] * bv.data[i];
                    }
                }
                if (nodes_[n.b].needs_grad) {
                    Tensor& gb = grad_buf(n.b);
                    for (size_t i = 0; i < gb.data.size(); ++i) {
                        gb.data[i] += gy.data[i] * av.data[i];
                    }
                }
                break;
            }
            case OpKind::kMin: {
                const Tensor& av = val(n.a);
                const Tensor& bv = val(n.b);
                if (nodes_[n.a].needs_grad) {
                    Tensor& ga = grad_buf(n.a);
                    for (size_t i = 0; i < ga.data.size(); ++i) {
                        if (av.data[i] <= bv.data[i]) ga.data[i] += gy.data[i];
                    }
                }
                if (nodes_[n.b].needs_grad) {
                    Tensor& gb = grad_buf(n.b);
                    for (size_t i = 0; i < gb.data.size(); ++i) {
                        if (av.data[i] > bv.data[i]) gb.data[i] += gy.data[i];
                    }
                }
                break;
            }
            case OpKind::kAddConst: {
                if (!nodes_[n.a].needs_grad) break;
                Tensor& gx = grad_buf(n.a);
                for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gy.data[i];
                break;
            }
            case OpKind::kMulConst: {
                if (!nodes_[n.a].needs_grad) break;
                Tensor& gx = grad_buf(n.a);
                for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gy.data[i] * n.s0;
                break;
            }
            case OpKind::kConstMinus: {
                if (!nodes_[n.a].needs_grad) break;
                Tensor& gx = grad_buf(n.a);
                for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] -= gy.data[i];
                break;
            }
            case OpKind::kConcatCols: {
                const int rows = n.value.rows();
                const int ca = n.i0;
                const int cb = n.value.cols() - ca;
                if (nodes_[n.a].needs_grad) {
                    Tensor& ga = grad_buf(n.a);
                    for (int r = 0; r < rows; ++r) {
                        for (int j = 0; j < ca; ++j) ga.at(r, j) += gy.at(r, j);
                    }
                }
                if (nodes_[n.b].needs_grad) {
                    Tensor& gb = grad_buf(n.b);
                    for (int r = 0; r < rows; ++r) {
                        for (int j = 0; j < cb; ++j) gb.at(r, j) += gy.at(r, ca + j);
                    }
                }
                break;
            }
            case OpKind::kSliceCols: {
                if (!nodes_[n.a].needs_grad) break;
                Tensor& gx = grad_buf(n.a);
                const int rows = n.value.rows();
                for (int r = 0; r < rows; ++r) {
                    for (int j = n.i0; j < n.i1; ++j) gx.at(r, j) += gy.at(r, j - n.i0);
                }
                break;
            }
            case OpKind::kPermuteCols: {
                if (!nodes_[n.a].needs_grad) break;
                Tensor& gx = grad_buf(n.a);
                const int rows = n.value.rows(), colsN = n.value.cols();
                for (int r = 0; r < rows; ++r) {
                    for (int j = 0; j < colsN; ++j) gx.at(r, n.perm[j]) += gy.at(r, j);
                }
                break;
            }
            case OpKind::kRowSum: {
                if (!nodes_[n.a].needs_grad) break;
                const Tensor& xv = val(n.a);
                Tensor& gx = grad_buf(n.a);
                const int rows = xv.rows(), colsN = xv.cols();
                for (int r = 0; r < rows; ++r) {
                    const double g = gy.at(r, 0);
                    for (int j = 0; j < colsN; ++j) gx.at(r, j) += g;
                }
                break;
            }
            case OpKind::kMeanAll: {
                if (!nodes_[n.a].needs_grad) break;
                const Tensor& xv = val(n.a);
                Tensor& gx = grad_buf(n.a);
                const double g = gy.data[0] / static_cast<double>(xv.numel());
                for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g;
                break;
            }
        }
    }
    backward_done_ = true;
}

}  // namespace bsac
