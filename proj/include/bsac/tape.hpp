#pragma once

#include <cstdint>
#include <vector>

#include "bsac/tensor.hpp"

namespace bsac {

// Handle into a Tape. Default-constructed handles are invalid.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

enum class OpKind : uint8_t {
    kLeaf,
    kLinear,       // a[R,I] * b[I,O] + c[O]
    kRelu,
    kTanh,
    kExp,
    kLog,
    kSquare,
    kNeg,
    kClamp,        // s0 = lo, s1 = hi
    kAdd,
    kSub,
    kMul,
    kMin,          // elementwise; ties route gradient to the first input
    kAddConst,     // x + s0
    kMulConst,     // x * s0
    kConstMinus,   // s0 - x
    kConcatCols,
    kSliceCols,    // columns [i0, i1)
    kPermuteCols,  // out[:, j] = in[:, perm[j]]
    kRowSum,       // [R,C] -> [R,1]
    kMeanAll,      // -> [1,1]
};

struct TapeNode {
    OpKind op = OpKind::kLeaf;
    int a = -1, b = -1, c = -1;
    Tensor value;               // owned result (empty for borrowed leaves)
    const Tensor* ref = nullptr;  // borrowed leaf storage
    double s0 = 0.0, s1 = 0.0;
    int i0 = 0, i1 = 0;
    std::vector<int> perm;
    bool requires_grad = false;
    bool needs_grad = false;    // true if any grad-requiring leaf feeds this node
};

// Records a forward computation and plays it backwards. One backward pass
// per tape; construction order is the topological order.
class Tape {
  public:
    // Owned leaf (constants: inputs, noise, targets).
    Var leaf(Tensor value, bool requires_grad = false);
    // Borrowed leaf; caller keeps `value` alive and unchanged for the tape's
    // lifetime. Used for network parameters to avoid copies.
    Var leaf_ref(const Tensor& value, bool requires_grad);

    Var linear(Var x, Var w, Var b);
    Var relu(Var x);
    Var tanh(Var x);
    Var exp(Var x);
    Var log(Var x);
    Var square(Var x);
    Var neg(Var x);
    Var clamp(Var x, double lo, double hi);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var minimum(Var a, Var b);
    Var add_const(Var x, double c);
    Var mul_const(Var x, double c);
    Var const_minus(double c, Var x);
    Var concat_cols(Var a, Var b);
    Var slice_cols(Var x, int c0, int c1);
    Var permute_cols(Var x, std::vector<int> perm);
    Var row_sum(Var x);
    Var mean_all(Var x);

    const Tensor& value(Var v) const;

    // Seeds d(loss)/d(loss) = seed and accumulates gradients for every node
    // on a path to a grad-requiring leaf. `loss` must be a single element.
    void backward(Var loss, double seed = 1.0);

    bool has_grad(Var v) const;
    // Gradient of the last backward's loss w.r.t. v (zeros if untouched).
    Tensor grad(Var v) const;

    size_t size() const { return nodes_.size(); }
    bool backward_done() const { return backward_done_; }
    void reset();

  private:
    int push(TapeNode node);
    const Tensor& val(int id) const;
    TapeNode& node_checked(Var v);
    Tensor& grad_buf(int id);

    std::vector<TapeNode> nodes_;
    std::vector<Tensor> grads_;
    bool backward_done_ = false;
};

}  // namespace bsac
