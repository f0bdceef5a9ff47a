#include <cmath>
#include <functional>
#include <vector>

#include "bsac/adam.hpp"
#include "bsac/errors.hpp"
#include "bsac/mlp.hpp"
#include "bsac/rng.hpp"
#include "bsac/tape.hpp"
#include "doctest.h"

using namespace bsac;

namespace {

// Straight-line re-implementation of the affine/activation stack, kept free
// of Tape and mlp_forward internals.
std::vector<double> naive_mlp(const MlpParams& p, const std::vector<double>& x) {
    std::vector<double> h = x;
    for (size_t l = 0; l < p.weights.size(); ++l) {
        const int in = p.weights[l].shape[0], out = p.weights[l].shape[1];
        std::vector<double> y(out, 0.0);
        for (int o = 0; o < out; ++o) {
            double s = p.biases[l].data[o];
            for (int i = 0; i < in; ++i) s += h[i] * p.weights[l].data[i * out + o];
            y[o] = s;
        }
        if (l + 1 < p.weights.size()) {
            for (double& v : y) {
                if (p.activation == Activation::kRelu) v = v > 0 ? v : 0;
                if (p.activation == Activation::kTanh) v = std::tanh(v);
            }
        }
        h = std::move(y);
    }
    return h;
}

// Central finite differences of a scalar loss over one flat parameter vector.
std::vector<double> central_diff(std::function<double(const std::vector<double>&)> f,
                                 std::vector<double> theta, double h) {
    std::vector<double> g(theta.size());
    for (size_t i = 0; i < theta.size(); ++i) {
        const double orig = theta[i];
        theta[i] = orig + h;
        const double fp = f(theta);
        theta[i] = orig - h;
        const double fm = f(theta);
        theta[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

void flatten_into(const MlpParams& p, std::vector<double>& out) {
    for (const Tensor& w : p.weights) out.insert(out.end(), w.data.begin(), w.data.end());
    for (const Tensor& b : p.biases) out.insert(out.end(), b.data.begin(), b.data.end());
}

void unflatten_from(MlpParams& p, const std::vector<double>& in) {
    size_t k = 0;
    for (Tensor& w : p.weights)
        for (double& v : w.data) v = in[k++];
    for (Tensor& b : p.biases)
        for (double& v : b.data) v = in[k++];
}

std::vector<double> flatten_grads(const MlpGrads& g) {
    std::vector<double> out;
    for (const Tensor& w : g.weights) out.insert(out.end(), w.data.begin(), w.data.end());
    for (const Tensor& b : g.biases) out.insert(out.end(), b.data.begin(), b.data.end());
    return out;
}

}  // namespace

TEST_CASE("mlp_forward: identity layer passes input through") {
    MlpParams p;
    p.activation = Activation::kIdentity;
    p.weights.push_back(Tensor::matrix(2, 2, {1, 0, 0, 1}));
    p.biases.push_back(Tensor::zeros({2}));
    Tensor out = mlp_forward(p, Tensor::vec({1, 2}));
    CHECK(out.data == std::vector<double>{1, 2});
}

TEST_CASE("mlp_forward: relu splits signs") {
    MlpParams p;
    p.activation = Activation::kRelu;
    // single layer: activation on the output only applies between layers, so
    // build layer [1 -> 2] then an identity layer to exercise the relu.
    p.weights.push_back(Tensor::matrix(1, 2, {1, -1}));
    p.biases.push_back(Tensor::zeros({2}));
    p.weights.push_back(Tensor::matrix(2, 2, {1, 0, 0, 1}));
    p.biases.push_back(Tensor::zeros({2}));
    Tensor out = mlp_forward(p, Tensor::vec({3}));
    CHECK(out.data == std::vector<double>{3, 0});
}

TEST_CASE("mlp_forward: matches straight-line recomputation to 1e-12") {
    Rng rng(42);
    for (auto act : {Activation::kRelu, Activation::kTanh}) {
        MlpParams p = MlpParams::create(5, {16, 16}, 3, act, rng);
        for (int trial = 0; trial < 10; ++trial) {
            Tensor x = rng.normal_tensor({5});
            Tensor got = mlp_forward(p, x);
            std::vector<double> want = naive_mlp(p, x.data);
            REQUIRE(got.numel() == 3);
            for (int i = 0; i < 3; ++i) CHECK(got.data[i] == doctest::Approx(want[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("mlp_forward: taped output equals plain output bitwise") {
    Rng rng(7);
    MlpParams p = MlpParams::create(4, {8}, 2, Activation::kRelu, rng);
    Tensor x = rng.normal_tensor({3, 4});
    Tensor plain = mlp_forward(p, x);
    Tape tape;
    MlpVars vars = register_params(tape, p);
    Var out = mlp_forward(tape, p, vars, tape.leaf(x));
    CHECK(tape.value(out).data == plain.data);
}

TEST_CASE("mlp_forward: dimension mismatch names the layer") {
    Rng rng(1);
    MlpParams p = MlpParams::create(4, {8}, 2, Activation::kRelu, rng);
    CHECK_THROWS_WITH_AS(mlp_forward(p, Tensor::vec({1, 2, 3})),
                         doctest::Contains("layer 0"), ShapeError);
    Tensor bad = rng.normal_tensor({2, 5});
    CHECK_THROWS_AS(mlp_forward(p, bad), ShapeError);
}

TEST_CASE("backward: linear loss gives the fixed input as gradient") {
    Tape tape;
    Tensor w0 = Tensor::row({0.5, -1.5, 2.0});
    Var w = tape.leaf_ref(w0, true);
    Var x = tape.leaf(Tensor::row({3.0, 4.0, 5.0}));
    Var loss = tape.mean_all(tape.mul_const(tape.row_sum(tape.mul(w, x)), 1.0));
    tape.backward(loss);
    Tensor g = tape.grad(w);
    CHECK(g.data == std::vector<double>{3.0, 4.0, 5.0});
}

TEST_CASE("backward: tanh(w)^2 at w=0 has zero gradient") {
    Tape tape;
    Tensor w0 = Tensor::row({0.0});
    Var w = tape.leaf_ref(w0, true);
    Var loss = tape.mean_all(tape.square(tape.tanh(w)));
    tape.backward(loss);
    CHECK(tape.grad(w).data[0] == 0.0);
}

TEST_CASE("backward: empty tape is a usage error") {
    Tape tape;
    CHECK_THROWS_AS(tape.backward(Var{}), UsageError);
}

TEST_CASE("backward: second backward on one tape is a usage error") {
    Tape tape;
    Var x = tape.leaf(Tensor::row({1.0}), true);
    Var loss = tape.mean_all(x);
    tape.backward(loss);
    CHECK_THROWS_AS(tape.backward(loss), UsageError);
}

TEST_CASE("backward: non-scalar loss rejected") {
    Tape tape;
    Var x = tape.leaf(Tensor::row({1.0, 2.0}), true);
    CHECK_THROWS_AS(tape.backward(x), UsageError);
}

static double mlp_scalar_loss(const MlpParams& base, const std::vector<double>& theta,
                              const Tensor& x) {
    MlpParams p = base;
    unflatten_from(p, theta);
    Tape tape;
    MlpVars vars = register_params(tape, p);
    Var out = mlp_forward(tape, p, vars, tape.leaf(x));
    // loss = mean(tanh(out)^2) + mean(exp(-out^2)): smooth composition.
    Var a = tape.mean_all(tape.square(tape.tanh(out)));
    Var b = tape.mean_all(tape.exp(tape.neg(tape.square(out))));
    Var loss = tape.add(a, b);
    return tape.value(loss).data[0];
}

TEST_CASE("finite-difference property: analytic MLP gradients at rel err < 1e-6") {
    Rng rng(99);
    for (auto act : {Activation::kTanh, Activation::kIdentity}) {
        MlpParams p = MlpParams::create(3, {6, 5}, 2, act, rng);
        Tensor x = rng.normal_tensor({4, 3});

        Tape tape;
        MlpVars vars = register_params(tape, p);
        Var out = mlp_forward(tape, p, vars, tape.leaf(x));
        Var a = tape.mean_all(tape.square(tape.tanh(out)));
        Var b = tape.mean_all(tape.exp(tape.neg(tape.square(out))));
        Var loss = tape.add(a, b);
        tape.backward(loss);
        std::vector<double> analytic = flatten_grads(collect_grads(tape, vars));

        std::vector<double> theta;
        flatten_into(p, theta);
        std::vector<double> fd = central_diff(
            [&](const std::vector<double>& t) { return mlp_scalar_loss(p, t, x); }, theta, 1e-5);

        REQUIRE(analytic.size() == fd.size());
        for (size_t i = 0; i < fd.size(); ++i) {
            const double denom = std::max({std::abs(fd[i]), std::abs(analytic[i]), 1e-4});
            CHECK(std::abs(fd[i] - analytic[i]) / denom < 1e-6);
        }
    }
}

TEST_CASE("finite-difference property: structural ops (concat/slice/permute/min/clamp)") {
    Rng rng(123);
    Tensor a0 = rng.normal_tensor({2, 3});
    Tensor b0 = rng.normal_tensor({2, 2});

    struct Built {
        Var a, b, loss;
    };
    auto build = [](Tape& tape, const Tensor& at, const Tensor& bt) {
        Built r;
        r.a = tape.leaf(at, true);
        r.b = tape.leaf(bt, true);
        Var cat = tape.concat_cols(r.a, r.b);  // [2,5]
        Var perm = tape.permute_cols(cat, {4, 2, 0, 1, 3});
        Var s1 = tape.slice_cols(perm, 0, 3);
        Var s2 = tape.slice_cols(perm, 2, 5);
        Var m = tape.minimum(tape.tanh(s1), tape.clamp(s2, -0.5, 0.5));
        r.loss = tape.mean_all(tape.square(tape.add_const(m, 0.25)));
        return r;
    };
    auto eval = [&](const std::vector<double>& theta) {
        Tensor at = a0, bt = b0;
        for (int i = 0; i < 6; ++i) at.data[i] = theta[i];
        for (int i = 0; i < 4; ++i) bt.data[i] = theta[6 + i];
        Tape tape;
        return tape.value(build(tape, at, bt).loss).data[0];
    };

    std::vector<double> theta(a0.data.begin(), a0.data.end());
    theta.insert(theta.end(), b0.data.begin(), b0.data.end());

    Tape tape;
    Built built = build(tape, a0, b0);
    tape.backward(built.loss);
    std::vector<double> analytic = tape.grad(built.a).data;
    const std::vector<double> gb = tape.grad(built.b).data;
    analytic.insert(analytic.end(), gb.begin(), gb.end());

    std::vector<double> fd = central_diff(eval, theta, 1e-5);
    for (size_t i = 0; i < fd.size(); ++i) {
        const double denom = std::max({std::abs(fd[i]), std::abs(analytic[i]), 1e-4});
        CHECK(std::abs(fd[i] - analytic[i]) / denom < 1e-6);
    }
}

TEST_CASE("tape determinism: identical passes produce bitwise-identical gradients") {
    Rng rng(5);
    MlpParams p = MlpParams::create(4, {8, 8}, 1, Activation::kRelu, rng);
    Tensor x = rng.normal_tensor({6, 4});
    auto run = [&]() {
        Tape tape;
        MlpVars vars = register_params(tape, p);
        Var out = mlp_forward(tape, p, vars, tape.leaf(x));
        tape.backward(tape.mean_all(tape.square(out)));
        return flatten_grads(collect_grads(tape, vars));
    };
    CHECK(run() == run());
}

TEST_CASE("adam_step: zero gradient leaves parameters, advances step") {
    Rng rng(3);
    MlpParams p = MlpParams::create(2, {4}, 1, Activation::kRelu, rng);
    MlpParams before = p;
    AdamState st = AdamState::create(p, 1e-3);
    MlpGrads g;
    for (const Tensor& w : p.weights) g.weights.push_back(Tensor::zeros(w.shape));
    for (const Tensor& b : p.biases) g.biases.push_back(Tensor::zeros(b.shape));
    adam_step(p, g, st);
    CHECK(st.step == 1);
    for (size_t l = 0; l < p.weights.size(); ++l) {
        CHECK(p.weights[l].data == before.weights[l].data);
        CHECK(p.biases[l].data == before.biases[l].data);
    }
}

TEST_CASE("adam_step: constant gradient walks opposite its sign") {
    MlpParams p;
    p.weights.push_back(Tensor::matrix(1, 1, {0.0}));
    p.biases.push_back(Tensor::zeros({1}));
    AdamState st = AdamState::create(p, 1e-2);
    MlpGrads g;
    g.weights.push_back(Tensor::matrix(1, 1, {0.7}));
    g.biases.push_back(Tensor::zeros({1}));
    double prev = 0.0;
    for (int i = 0; i < 50; ++i) {
        adam_step(p, g, st);
        CHECK(p.weights[0].data[0] < prev);
        prev = p.weights[0].data[0];
    }
}

TEST_CASE("adam_step: first step matches the hand recurrence") {
    // One step from fresh state: m=(1-b1)g, v=(1-b2)g^2, mhat=g, vhat=g^2,
    // delta = lr*g/(|g|+eps) ~ lr*sign(g).
    const double lr = 3e-4, g0 = -0.37, eps = 1e-8;
    MlpParams p;
    p.weights.push_back(Tensor::matrix(1, 1, {1.25}));
    p.biases.push_back(Tensor::zeros({1}));
    AdamState st = AdamState::create(p, lr);
    MlpGrads g;
    g.weights.push_back(Tensor::matrix(1, 1, {g0}));
    g.biases.push_back(Tensor::zeros({1}));
    adam_step(p, g, st);
    const double expected = 1.25 - lr * g0 / (std::abs(g0) + eps);
    CHECK(p.weights[0].data[0] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(std::abs((1.25 - p.weights[0].data[0]) - lr * (-1.0)) < 1e-10);
}

TEST_CASE("adam_step: missing gradient entries are a usage error") {
    Rng rng(3);
    MlpParams p = MlpParams::create(2, {4}, 1, Activation::kRelu, rng);
    AdamState st = AdamState::create(p, 1e-3);
    MlpGrads g;  // empty
    CHECK_THROWS_AS(adam_step(p, g, st), UsageError);
}

TEST_CASE("adam invariance: group split and update order do not change results") {
    Rng rng(11);
    MlpParams joint = MlpParams::create(3, {5}, 2, Activation::kTanh, rng);
    MlpParams split = joint;
    MlpGrads g;
    for (const Tensor& w : joint.weights) g.weights.push_back(rng.normal_tensor(w.shape));
    for (const Tensor& b : joint.biases) g.biases.push_back(rng.normal_tensor(b.shape));

    AdamState st = AdamState::create(joint, 1e-3);
    adam_step(joint, g, st);

    // Same update applied per-layer in reverse order with independent states.
    for (int l = 1; l >= 0; --l) {
        MlpParams layer;
        layer.weights.push_back(split.weights[l]);
        layer.biases.push_back(split.biases[l]);
        AdamState ls = AdamState::create(layer, 1e-3);
        MlpGrads lg;
        lg.weights.push_back(g.weights[l]);
        lg.biases.push_back(g.biases[l]);
        adam_step(layer, lg, ls);
        split.weights[l] = layer.weights[0];
        split.biases[l] = layer.biases[0];
    }
    for (size_t l = 0; l < joint.weights.size(); ++l) {
        CHECK(joint.weights[l].data == split.weights[l].data);
        CHECK(joint.biases[l].data == split.biases[l].data);
    }
}

TEST_CASE("seeded_rng: same seed reproduces the normal stream") {
    Rng a(2024), b(2024);
    for (int i = 0; i < 1000; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("seeded_rng: law of large numbers for normal draws") {
    Rng rng(17);
    const int n = 1'000'000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("seeded_rng: different seeds diverge quickly") {
    Rng a(1), b(2);
    bool differ = false;
    for (int i = 0; i < 10 && !differ; ++i) differ = a.normal() != b.normal();
    CHECK(differ);
}

TEST_CASE("seeded_rng: uniform draws stay in [0,1)") {
    Rng rng(8);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("rng state round-trips") {
    Rng a(77);
    for (int i = 0; i < 13; ++i) a.normal();
    Rng::State st = a.state();
    std::vector<double> want;
    for (int i = 0; i < 20; ++i) want.push_back(a.normal());
    Rng b(0);
    b.set_state(st);
    for (int i = 0; i < 20; ++i) CHECK(b.normal() == want[i]);
}
