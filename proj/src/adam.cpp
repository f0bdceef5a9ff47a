#include "bsac/adam.hpp"

#include <cmath>
#include <string>

#include "bsac/errors.hpp"

namespace bsac {

namespace {

void adam_tensor(Tensor& p, const Tensor& g, Tensor& m, Tensor& v, double lr, double b1,
                 double b2, double eps, double bc1, double bc2) {
    for (size_t i = 0; i < p.data.size(); ++i) {
        const double gi = g.data[i];
        m.data[i] = b1 * m.data[i] + (1.0 - b1) * gi;
        v.data[i] = b2 * v.data[i] + (1.0 - b2) * gi * gi;
        const double mhat = m.data[i] / bc1;
        const double vhat = v.data[i] / bc2;
        p.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

AdamState AdamState::create(const MlpParams& params, double lr) {
    AdamState s;
    s.lr = lr;
    for (const Tensor& w : params.weights) {
        s.m_weights.push_back(Tensor::zeros(w.shape));
        s.v_weights.push_back(Tensor::zeros(w.shape));
    }
    for (const Tensor& b : params.biases) {
        s.m_biases.push_back(Tensor::zeros(b.shape));
        s.v_biases.push_back(Tensor::zeros(b.shape));
    }
    return s;
}

void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state) {
    if (grads.weights.size() != params.weights.size() ||
        grads.biases.size() != params.biases.size()) {
        throw UsageError("adam_step: gradient layer count does not match parameters");
    }
    for (size_t l = 0; l < params.weights.size(); ++l) {
        if (!grads.weights[l].same_shape(params.weights[l]) ||
            !grads.biases[l].same_shape(params.biases[l])) {
            throw UsageError("adam_step: gradient shape mismatch at layer " + std::to_string(l));
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t l = 0; l < params.weights.size(); ++l) {
        adam_tensor(params.weights[l], grads.weights[l], state.m_weights[l], state.v_weights[l],
                    state.lr, state.beta1, state.beta2, state.eps, bc1, bc2);
        adam_tensor(params.biases[l], grads.biases[l], state.m_biases[l], state.v_biases[l],
                    state.lr, state.beta1, state.beta2, state.eps, bc1, bc2);
    }
}

void AdamScalar::update(double& param, double grad) {
    step += 1;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad * grad;
    const double mhat = m / (1.0 - std::pow(beta1, static_cast<double>(step)));
    const double vhat = v / (1.0 - std::pow(beta2, static_cast<double>(step)));
    param -= lr * mhat / (std::sqrt(vhat) + eps);
}

}  // namespace bsac
