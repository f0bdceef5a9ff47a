#pragma once

#include <cstdint>
#include <vector>

#include "bsac/mlp.hpp"
#include "bsac/tensor.hpp"

namespace bsac {

// Adam accumulators for one parameter group (one MLP). Moment tensors
// mirror the parameter layout layer by layer.
struct AdamState {
    std::vector<Tensor> m_weights, v_weights;
    std::vector<Tensor> m_biases, v_biases;
    int64_t step = 0;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState create(const MlpParams& params, double lr);
};

// One Adam update in place; throws UsageError when the gradient layout does
// not key onto the parameters.
void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state);

// Scalar Adam, used for the temperature parameter.
struct AdamScalar {
    double m = 0.0, v = 0.0;
    int64_t step = 0;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void update(double& param, double grad);
};

}  // namespace bsac
