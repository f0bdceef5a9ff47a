#pragma once

#include <string>
#include <vector>

#include "bsac/tensor.hpp"

namespace bsac {

// One strategy node: a named group of joint-action coordinates plus the
// nodes it is conditioned on.
struct BsnNode {
    std::string id;
    std::vector<int> action_dims;
    std::vector<std::string> parents;
};

// Validated DAG over action groups. Node action-dims partition
// {0..total_action_dim-1}; parent references resolve; no cycles.
struct BsnGraph {
    std::vector<BsnNode> nodes;  // declaration order
    int total_action_dim = 0;

    int node_index(const std::string& id) const;  // ReferenceError if unknown
    const BsnNode& node(const std::string& id) const;
    size_t size() const { return nodes.size(); }

    // Degenerate single-node graph covering all coordinates (the flat case).
    static BsnGraph single_node(int action_dim, const std::string& id = "all");
};

// Parses the line-oriented declaration format:
//   node <id> dims <d0>[,<d1>...] [parents <id0>[,<id1>...]]
// '#' starts a comment. total_action_dim is inferred as max dim + 1.
BsnGraph parse_bsn(const std::string& text);

BsnGraph parse_bsn_file(const std::string& path);

// Validates an assembled graph (parse_bsn calls this).
void validate_bsn(const BsnGraph& graph);

// Parents-before-children order; ties broken by lexicographic node id.
std::vector<std::string> topo_order(const BsnGraph& graph);

// Concatenation of the parents' action slices, in declared parent order.
Tensor gather_parent_actions(const BsnGraph& graph, const std::string& node_id,
                             const Tensor& joint_action);

}  // namespace bsac
