#include "bsac/mlp.hpp"

#include <cmath>
#include <string>

#include "bsac/errors.hpp"

namespace bsac {

MlpParams MlpParams::create(int in_dim, const std::vector<int>& hidden, int out_dim,
                            Activation activation, Rng& rng) {
    if (in_dim <= 0 || out_dim <= 0) throw ShapeError("mlp: non-positive layer width");
    MlpParams p;
    p.activation = activation;
    std::vector<int> widths;
    widths.push_back(in_dim);
    for (int h : hidden) {
        if (h <= 0) throw ShapeError("mlp: non-positive hidden width");
        widths.push_back(h);
    }
    widths.push_back(out_dim);
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        const int fan_in = widths[l], fan_out = widths[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        p.weights.push_back(rng.uniform_tensor({fan_in, fan_out}, -bound, bound));
        p.biases.push_back(Tensor::zeros({fan_out}));
    }
    return p;
}

int64_t MlpParams::param_count() const {
    int64_t n = 0;
    for (const Tensor& w : weights) n += w.numel();
    for (const Tensor& b : biases) n += b.numel();
    return n;
}

MlpVars register_params(Tape& tape, const MlpParams& params, bool requires_grad) {
    MlpVars v;
    for (size_t l = 0; l < params.weights.size(); ++l) {
        v.weights.push_back(tape.leaf_ref(params.weights[l], requires_grad));
        v.biases.push_back(tape.leaf_ref(params.biases[l], requires_grad));
    }
    return v;
}

MlpGrads collect_grads(const Tape& tape, const MlpVars& vars) {
    MlpGrads g;
    for (size_t l = 0; l < vars.weights.size(); ++l) {
        g.weights.push_back(tape.grad(vars.weights[l]));
        g.biases.push_back(tape.grad(vars.biases[l]));
    }
    return g;
}

Var mlp_forward(Tape& tape, const MlpParams& params, const MlpVars& vars, Var input) {
    Var h = input;
    for (size_t l = 0; l < params.weights.size(); ++l) {
        try {
            h = tape.linear(h, vars.weights[l], vars.biases[l]);
        } catch (const ShapeError& e) {
            throw ShapeError("mlp layer " + std::to_string(l) + ": " + e.what());
        }
        if (l + 1 < params.weights.size()) {
            switch (params.activation) {
                case Activation::kRelu: h = tape.relu(h); break;
                case Activation::kTanh: h = tape.tanh(h); break;
                case Activation::kIdentity: break;
            }
        }
    }
    return h;
}

Tensor mlp_forward(const MlpParams& params, const Tensor& input) {
    const int rows = input.rows();
    Tensor h = input;
    if (h.shape.size() == 1) h.shape = {1, static_cast<int>(h.data.size())};
    for (size_t l = 0; l < params.weights.size(); ++l) {
        const Tensor& w = params.weights[l];
        const Tensor& b = params.biases[l];
        if (h.cols() != w.shape[0]) {
            throw ShapeError("mlp layer " + std::to_string(l) + ": input width " +
                             std::to_string(h.cols()) + " vs weight shape " + w.shape_str());
        }
        const int in = w.shape[0], out = w.shape[1];
        Tensor y = Tensor::zeros({rows, out});
        for (int r = 0; r < rows; ++r) {
            double* yr = &y.data[static_cast<size_t>(r) * out];
            for (int o = 0; o < out; ++o) yr[o] = b.data[o];
            const double* hr = &h.data[static_cast<size_t>(r) * in];
            for (int i = 0; i < in; ++i) {
                const double xi = hr[i];
                const double* wi = &w.data[static_cast<size_t>(i) * out];
                for (int o = 0; o < out; ++o) yr[o] += xi * wi[o];
            }
        }
        if (l + 1 < params.weights.size()) {
            switch (params.activation) {
                case Activation::kRelu:
                    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
                    break;
                case Activation::kTanh:
                    for (double& v : y.data) v = std::tanh(v);
                    break;
                case Activation::kIdentity: break;
            }
        }
        h = std::move(y);
    }
    if (input.shape.size() == 1) h.shape = {h.shape[1]};
    return h;
}

}  // namespace bsac
