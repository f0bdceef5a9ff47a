#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bsac/bsn.hpp"
#include "bsac/mlp.hpp"
#include "bsac/rng.hpp"
#include "bsac/tape.hpp"

namespace bsac {

// Whether actions pass through tanh (bounded envs) or stay raw Gaussians.
enum class SquashMode { kTanh, kOff };

constexpr double kSquashEps = 1e-6;
constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;

// One conditional sub-policy: a network mapping [state ++ parent-actions]
// to a diagonal Gaussian (mean, log-std) over its action coordinates.
struct SubPolicy {
    std::string node_id;
    MlpParams net;  // output width = 2 * action_dim
    int action_dim = 0;
    double log_std_min = kLogStdMin;
    double log_std_max = kLogStdMax;
};

// Product policy over a strategy graph: sub-policies realized in topological
// order, each conditioned on the state and its parents' executed actions.
struct JointPolicy {
    BsnGraph graph;
    std::vector<std::string> order;  // cached topo order
    std::vector<SubPolicy> subs;     // aligned with `order`
    SquashMode squash = SquashMode::kTanh;
    int state_dim = 0;

    static JointPolicy create(const BsnGraph& graph, int state_dim,
                              const std::vector<int>& hidden, SquashMode squash, Rng& rng);

    size_t node_count() const { return subs.size(); }
    int sub_index(const std::string& node_id) const;
    const SubPolicy& sub(const std::string& node_id) const { return subs[sub_index(node_id)]; }
    SubPolicy& sub(const std::string& node_id) { return subs[sub_index(node_id)]; }
    int parent_width(const std::string& node_id) const;
};

// ---------------------------------------------------------------------------
// Plain (unrecorded) sampling, single state.

struct SubSampleResult {
    Tensor action;  // [action_dim]
    double log_prob;
};

SubSampleResult sub_sample(const SubPolicy& sub, SquashMode squash, const Tensor& state,
                           const Tensor& parent_actions, const Tensor& noise);

struct JointSample {
    Tensor action;                       // [total_action_dim], env coordinate order
    std::vector<double> node_log_probs;  // topo order
    double joint_log_prob;               // sum of node_log_probs in topo order
};

// One noise tensor per node, topo order, shape [action_dim_i].
JointSample joint_sample(const JointPolicy& policy, const Tensor& state,
                         const std::vector<Tensor>& noise);

// Deterministic action: per-node means fed forward through the graph.
Tensor greedy_action(const JointPolicy& policy, const Tensor& state);

// Exact joint log-density of an executed action (atanh inversion under
// tanh squashing; every coordinate must then lie strictly inside (-1, 1)).
double joint_log_prob(const JointPolicy& policy, const Tensor& state, const Tensor& action);

struct EntropyEstimate {
    double joint;                   // equals the ordered sum of per_node
    std::vector<double> per_node;   // topo order
};

EntropyEstimate entropy_estimate(const JointPolicy& policy, const Tensor& state, int n_samples,
                                 Rng& rng);

// ---------------------------------------------------------------------------
// Taped batched sampling (reparameterized; gradients flow into parameters).

struct PolicyVars {
    std::vector<MlpVars> subs;  // topo order
};

PolicyVars register_policy(Tape& tape, const JointPolicy& policy, bool requires_grad = true);

struct JointSampleVars {
    Var action;                       // [B, D] env coordinate order
    std::vector<Var> node_log_probs;  // each [B, 1], topo order
    Var joint_log_prob;               // [B, 1]
};

// `state` is a [B, state_dim] tape var; noise per node is [B, action_dim_i].
JointSampleVars joint_sample_taped(Tape& tape, const JointPolicy& policy, const PolicyVars& vars,
                                   Var state, const std::vector<Tensor>& noise);

// Convenience: plain batched sampling through a scratch tape.
struct JointSampleBatch {
    Tensor action;                        // [B, D]
    std::vector<Tensor> node_log_probs;   // each [B, 1]
    Tensor joint_log_prob;                // [B, 1]
};

JointSampleBatch joint_sample_batch(const JointPolicy& policy, const Tensor& states,
                                    const std::vector<Tensor>& noise);

// Fresh per-node noise tensors for a batch of B states.
std::vector<Tensor> draw_policy_noise(const JointPolicy& policy, int batch, Rng& rng);

}  // namespace bsac
