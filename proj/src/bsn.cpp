#include "bsac/bsn.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "bsac/errors.hpp"

namespace bsac {

int BsnGraph::node_index(const std::string& id) const {
    for (size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id == id) return static_cast<int>(i);
    }
    throw ReferenceError("unknown node id '" + id + "'");
}

const BsnNode& BsnGraph::node(const std::string& id) const {
    return nodes[static_cast<size_t>(node_index(id))];
}

BsnGraph BsnGraph::single_node(int action_dim, const std::string& id) {
    BsnGraph g;
    BsnNode n;
    n.id = id;
    for (int d = 0; d < action_dim; ++d) n.action_dims.push_back(d);
    g.nodes.push_back(std::move(n));
    g.total_action_dim = action_dim;
    validate_bsn(g);
    return g;
}

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, ',')) {
        if (cur.empty()) throw ParseError("empty entry in list '" + s + "'");
        out.push_back(cur);
    }
    if (out.empty()) throw ParseError("empty list");
    return out;
}

}  // namespace

BsnGraph parse_bsn(const std::string& text) {
    BsnGraph g;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    int max_dim = -1;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;  // blank
        if (tok != "node") {
            throw ParseError("line " + std::to_string(line_no) + ": expected 'node', got '" +
                             tok + "'");
        }
        BsnNode n;
        if (!(ls >> n.id)) throw ParseError("line " + std::to_string(line_no) + ": missing node id");
        if (!(ls >> tok) || tok != "dims") {
            throw ParseError("line " + std::to_string(line_no) + ": expected 'dims'");
        }
        std::string dims_csv;
        if (!(ls >> dims_csv)) {
            throw ParseError("line " + std::to_string(line_no) + ": missing dims list");
        }
        for (const std::string& d : split_csv(dims_csv)) {
            size_t pos = 0;
            int v = -1;
            try {
                v = std::stoi(d, &pos);
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(line_no) + ": bad dim '" + d + "'");
            }
            if (pos != d.size() || v < 0) {
                throw ParseError("line " + std::to_string(line_no) + ": bad dim '" + d + "'");
            }
            n.action_dims.push_back(v);
            max_dim = std::max(max_dim, v);
        }
        if (ls >> tok) {
            if (tok != "parents") {
                throw ParseError("line " + std::to_string(line_no) + ": expected 'parents', got '" +
                                 tok + "'");
            }
            std::string parents_csv;
            if (!(ls >> parents_csv)) {
                throw ParseError("line " + std::to_string(line_no) + ": missing parents list");
            }
            n.parents = split_csv(parents_csv);
            if (ls >> tok) {
                throw ParseError("line " + std::to_string(line_no) + ": trailing token '" + tok +
                                 "'");
            }
        }
        g.nodes.push_back(std::move(n));
    }
    if (g.nodes.empty()) throw ParseError("declaration contains no nodes");
    g.total_action_dim = max_dim + 1;
    validate_bsn(g);
    return g;
}

BsnGraph parse_bsn_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open BSN file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_bsn(buf.str());
}

void validate_bsn(const BsnGraph& graph) {
    std::set<std::string> ids;
    for (const BsnNode& n : graph.nodes) {
        if (n.id.empty()) throw ParseError("empty node id");
        if (!ids.insert(n.id).second) throw ParseError("duplicate node id '" + n.id + "'");
        if (n.action_dims.empty()) {
            throw PartitionError("node '" + n.id + "' owns no action dims");
        }
        std::set<int> within(n.action_dims.begin(), n.action_dims.end());
        if (within.size() != n.action_dims.size()) {
            throw PartitionError("node '" + n.id + "' repeats an action dim");
        }
    }
    for (const BsnNode& n : graph.nodes) {
        for (const std::string& p : n.parents) {
            if (!ids.count(p)) {
                throw ReferenceError("node '" + n.id + "' references unknown parent '" + p + "'");
            }
            if (p == n.id) throw CycleError("cycle: " + n.id + " -> " + n.id);
        }
    }

    // Coordinate partition: every dim in [0, total) owned exactly once.
    std::map<int, std::string> owner;
    for (const BsnNode& n : graph.nodes) {
        for (int d : n.action_dims) {
            auto [it, inserted] = owner.emplace(d, n.id);
            if (!inserted) {
                throw PartitionError("action dim " + std::to_string(d) + " owned by both '" +
                                     it->second + "' and '" + n.id + "'");
            }
        }
    }
    for (int d = 0; d < graph.total_action_dim; ++d) {
        if (!owner.count(d)) throw PartitionError("action dim " + std::to_string(d) + " unowned");
    }
    if (!owner.empty() && owner.rbegin()->first != graph.total_action_dim - 1) {
        throw PartitionError("action dims exceed total_action_dim");
    }

    // Acyclicity via DFS over parent edges; on failure report the loop.
    enum { kWhite, kGrey, kBlack };
    std::map<std::string, int> color;
    std::vector<std::string> stack;
    std::function<void(const std::string&)> visit = [&](const std::string& id) {
        color[id] = kGrey;
        stack.push_back(id);
        for (const std::string& p : graph.node(id).parents) {
            if (color[p] == kGrey) {
                std::string seq = p;
                bool in_loop = false;
                for (const std::string& s : stack) {
                    if (s == p) {
                        in_loop = true;
                        continue;
                    }
                    if (in_loop) seq += " -> " + s;
                }
                seq += " -> " + p;
                throw CycleError("cycle: " + seq);
            }
            if (color[p] == kWhite) visit(p);
        }
        stack.pop_back();
        color[id] = kBlack;
    };
    for (const BsnNode& n : graph.nodes) {
        if (color[n.id] == kWhite) visit(n.id);
    }
}

std::vector<std::string> topo_order(const BsnGraph& graph) {
    std::map<std::string, int> pending;  // unmet parent count
    std::map<std::string, std::vector<std::string>> children;
    for (const BsnNode& n : graph.nodes) {
        pending[n.id] = static_cast<int>(n.parents.size());
        for (const std::string& p : n.parents) children[p].push_back(n.id);
    }
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto& [id, count] : pending) {
        if (count == 0) ready.push(id);
    }
    std::vector<std::string> order;
    while (!ready.empty()) {
        const std::string id = ready.top();
        ready.pop();
        order.push_back(id);
        for (const std::string& c : children[id]) {
            if (--pending[c] == 0) ready.push(c);
        }
    }
    return order;
}

Tensor gather_parent_actions(const BsnGraph& graph, const std::string& node_id,
                             const Tensor& joint_action) {
    if (static_cast<int>(joint_action.numel()) != graph.total_action_dim) {
        throw ShapeError("joint action length " + std::to_string(joint_action.numel()) +
                         " vs total action dim " + std::to_string(graph.total_action_dim));
    }
    const BsnNode& n = graph.node(node_id);
    std::vector<double> vals;
    for (const std::string& p : n.parents) {
        for (int d : graph.node(p).action_dims) vals.push_back(joint_action.data[d]);
    }
    return Tensor::vec(std::move(vals));
}

}  // namespace bsac
