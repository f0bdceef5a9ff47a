#pragma once

#include <vector>

#include "bsac/rng.hpp"
#include "bsac/tape.hpp"
#include "bsac/tensor.hpp"

namespace bsac {

enum class Activation { kRelu, kTanh, kIdentity };

// Fully connected network parameters. weights[l] has shape [in_l, out_l],
// biases[l] has shape [out_l]; the activation applies between layers, the
// final layer stays affine. Glorot-uniform weights, zero biases.
struct MlpParams {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
    Activation activation = Activation::kRelu;

    static MlpParams create(int in_dim, const std::vector<int>& hidden, int out_dim,
                            Activation activation, Rng& rng);

    int in_dim() const { return weights.front().shape[0]; }
    int out_dim() const { return weights.back().shape[1]; }
    size_t layer_count() const { return weights.size(); }
    int64_t param_count() const;
};

// Parameter leaves registered on a tape, aligned with MlpParams layers.
struct MlpVars {
    std::vector<Var> weights;
    std::vector<Var> biases;
};

// Gradients aligned with MlpParams layers.
struct MlpGrads {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
};

MlpVars register_params(Tape& tape, const MlpParams& params, bool requires_grad = true);
MlpGrads collect_grads(const Tape& tape, const MlpVars& vars);

// Taped forward pass; input is [B, in_dim] (or [in_dim]).
Var mlp_forward(Tape& tape, const MlpParams& params, const MlpVars& vars, Var input);

// Plain forward pass with no recording; same arithmetic as the taped path.
Tensor mlp_forward(const MlpParams& params, const Tensor& input);

}  // namespace bsac
