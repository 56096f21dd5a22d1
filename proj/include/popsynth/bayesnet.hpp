#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "popsynth/dataset.hpp"

namespace popsynth {

// DAG over named nodes with required- and forbidden-edge constraint sets.
// Every mutation preserves acyclicity and the constraints; a violating
// mutation throws and leaves the structure unchanged.
class NetworkStructure {
public:
    explicit NetworkStructure(std::vector<std::string> nodes);

    const std::vector<std::string>& nodes() const { return nodes_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }
    int node_index(const std::string& name) const;
    bool has_node(const std::string& name) const;

    bool has_edge(int parent, int child) const;
    std::vector<std::pair<int, int>> edges() const;  // sorted
    const std::vector<int>& parents(int child) const { return parents_[child]; }
    std::vector<int> children(int parent) const;
    std::size_t edge_count() const { return edge_count_; }

    void add_edge(int parent, int child);
    void remove_edge(int parent, int child);
    void reverse_edge(int parent, int child);
    bool would_create_cycle(int parent, int child) const;

    void require_edge(int parent, int child);
    void forbid_edge(int parent, int child);
    bool is_required(int parent, int child) const;
    bool is_forbidden(int parent, int child) const;
    const std::set<std::pair<int, int>>& required_edges() const { return required_; }
    const std::set<std::pair<int, int>>& forbidden_edges() const { return forbidden_; }

    // Kahn's ordering, lexicographic tie-break on node name.
    std::vector<int> topological_order() const;

    bool operator==(const NetworkStructure& other) const {
        return nodes_ == other.nodes_ && parents_ == other.parents_;
    }

private:
    bool reachable(int from, int to) const;

    std::vector<std::string> nodes_;
    std::vector<std::vector<int>> parents_;  // sorted
    std::size_t edge_count_ = 0;
    std::set<std::pair<int, int>> required_;
    std::set<std::pair<int, int>> forbidden_;
};

// Conditional probability table of one node. Rows are indexed by the parent
// configuration with parents in declared order and the last parent varying
// fastest; each row is a distribution over the node's states.
struct Cpt {
    std::vector<int> parents;       // node indices, declared order
    std::vector<int> parent_cards;  // cardinality per parent
    int cardinality = 0;            // number of node states
    std::vector<double> table;      // config_count() x cardinality, row-major

    std::size_t config_count() const {
        return cardinality == 0 ? 0 : table.size() / static_cast<std::size_t>(cardinality);
    }
    std::size_t config_index(std::span<const int> full_assignment) const;
    std::span<const double> row(std::size_t config) const {
        return {table.data() + config * static_cast<std::size_t>(cardinality),
                static_cast<std::size_t>(cardinality)};
    }
};

using ParameterSet = std::vector<Cpt>;  // indexed by node

struct NodeDef {
    std::string name;
    std::vector<std::string> states;

    bool operator==(const NodeDef&) const = default;
};

struct NodeProvenance {
    std::string source_id;
    std::string method;  // "mle", "em", "macro", "manual"
    std::string config_hash;
};

// Dense table over every full assignment; states enumerated in node order
// with the last node varying fastest.
struct JointTable {
    std::vector<std::string> nodes;
    std::vector<int> cards;
    std::vector<double> p;
};

struct SampleOptions {
    std::map<std::string, int> evidence;  // node name -> state index
    int threads = 1;
    int max_tries_per_record = 10'000;
};

// Immutable discrete Bayesian network: structure + one CPT per node.
// All queries are read-only and thread-safe.
class BayesianNetwork {
public:
    BayesianNetwork(std::vector<NodeDef> nodes, NetworkStructure structure, ParameterSet params);

    const std::vector<NodeDef>& nodes() const { return nodes_; }
    const NetworkStructure& structure() const { return structure_; }
    const ParameterSet& parameters() const { return cpts_; }
    const Cpt& cpt(int node) const { return cpts_[node]; }
    int node_index(const std::string& name) const { return structure_.node_index(name); }

    std::vector<NodeProvenance>& provenance() { return provenance_; }
    const std::vector<NodeProvenance>& provenance() const { return provenance_; }

    double joint_probability(std::span<const int> assignment) const;

    JointTable enumerate_joint(std::size_t cell_cap = 10'000'000) const;

    // Exact marginal over `attrs` (by summation over the joint; small nets only).
    FrequencyTable marginal(const std::vector<std::string>& attrs,
                            std::size_t cell_cap = 10'000'000) const;

    // Deterministic ancestral sampling; identical (n, seed, options) give
    // bit-identical output regardless of thread count.
    std::vector<std::vector<int>> sample(std::size_t n, std::uint64_t seed,
                                         const SampleOptions& options = {}) const;

private:
    std::vector<NodeDef> nodes_;
    NetworkStructure structure_;
    ParameterSet cpts_;
    std::vector<NodeProvenance> provenance_;
    std::vector<int> topo_order_;
};

// Model file round-trip (structured text; CPT row order is normative:
// parents in declared order, last parent varying fastest).
void save_model(const BayesianNetwork& net, const std::string& path);
BayesianNetwork load_model(const std::string& path);

// Uniform-fallback-aware row check used when loading serialized CPTs: rows
// within 1e-9 of sum 1 are renormalized, anything else is an error.
ParameterSet validated_parameters(const NetworkStructure& structure,
                                  const std::vector<NodeDef>& nodes, ParameterSet params);

}  // namespace popsynth
