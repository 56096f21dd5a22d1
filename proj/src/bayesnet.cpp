#include "popsynth/bayesnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <queue>
#include <thread>

#include <json.hpp>

#include "popsynth/errors.hpp"
#include "popsynth/rng.hpp"

namespace popsynth {

using nlohmann::ordered_json;

NetworkStructure::NetworkStructure(std::vector<std::string> nodes)
    : nodes_(std::move(nodes)), parents_(nodes_.size()) {
    std::set<std::string> seen;
    for (const auto& n : nodes_) {
        if (!seen.insert(n).second) {
            throw ValidationError("structure: duplicate node '" + n + "'");
        }
    }
}

int NetworkStructure::node_index(const std::string& name) const {
    auto it = std::find(nodes_.begin(), nodes_.end(), name);
    if (it == nodes_.end()) throw ValidationError("structure: unknown node '" + name + "'");
    return static_cast<int>(it - nodes_.begin());
}

bool NetworkStructure::has_node(const std::string& name) const {
    return std::find(nodes_.begin(), nodes_.end(), name) != nodes_.end();
}

bool NetworkStructure::has_edge(int parent, int child) const {
    const auto& p = parents_[child];
    return std::binary_search(p.begin(), p.end(), parent);
}

std::vector<std::pair<int, int>> NetworkStructure::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int v = 0; v < node_count(); ++v) {
        for (int u : parents_[v]) out.emplace_back(u, v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> NetworkStructure::children(int parent) const {
    std::vector<int> out;
    for (int v = 0; v < node_count(); ++v) {
        if (has_edge(parent, v)) out.push_back(v);
    }
    return out;
}

bool NetworkStructure::reachable(int from, int to) const {
    if (from == to) return true;
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<int> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < node_count(); ++v) {
            if (!seen[v] && has_edge(u, v)) {
                if (v == to) return true;
                seen[v] = true;
                stack.push_back(v);
            }
        }
    }
    return false;
}

bool NetworkStructure::would_create_cycle(int parent, int child) const {
    return reachable(child, parent);
}

void NetworkStructure::add_edge(int parent, int child) {
    if (parent == child) throw ValidationError("structure: self-loop on '" + nodes_[parent] + "'");
    if (has_edge(parent, child)) return;
    if (is_forbidden(parent, child)) {
        throw ValidationError("structure: edge " + nodes_[parent] + " -> " + nodes_[child] +
                              " is forbidden");
    }
    if (would_create_cycle(parent, child)) {
        throw ValidationError("structure: edge " + nodes_[parent] + " -> " + nodes_[child] +
                              " would create a cycle");
    }
    auto& p = parents_[child];
    p.insert(std::lower_bound(p.begin(), p.end(), parent), parent);
    ++edge_count_;
}

void NetworkStructure::remove_edge(int parent, int child) {
    if (!has_edge(parent, child)) {
        throw ValidationError("structure: no edge " + nodes_[parent] + " -> " + nodes_[child]);
    }
    if (is_required(parent, child)) {
        throw ValidationError("structure: edge " + nodes_[parent] + " -> " + nodes_[child] +
                              " is required");
    }
    auto& p = parents_[child];
    p.erase(std::lower_bound(p.begin(), p.end(), parent));
    --edge_count_;
}

void NetworkStructure::reverse_edge(int parent, int child) {
    remove_edge(parent, child);
    try {
        add_edge(child, parent);
    } catch (...) {
        add_edge(parent, child);  // restore
        throw;
    }
}

void NetworkStructure::require_edge(int parent, int child) {
    if (forbidden_.count({parent, child})) {
        throw ValidationError("structure: edge " + nodes_[parent] + " -> " + nodes_[child] +
                              " is both required and forbidden");
    }
    if (!has_edge(parent, child)) add_edge(parent, child);
    required_.insert({parent, child});
}

void NetworkStructure::forbid_edge(int parent, int child) {
    if (required_.count({parent, child})) {
        throw ValidationError("structure: edge " + nodes_[parent] + " -> " + nodes_[child] +
                              " is both required and forbidden");
    }
    if (has_edge(parent, child)) {
        throw ValidationError("structure: cannot forbid present edge " + nodes_[parent] + " -> " +
                              nodes_[child]);
    }
    forbidden_.insert({parent, child});
}

bool NetworkStructure::is_required(int parent, int child) const {
    return required_.count({parent, child}) > 0;
}

bool NetworkStructure::is_forbidden(int parent, int child) const {
    return forbidden_.count({parent, child}) > 0;
}

std::vector<int> NetworkStructure::topological_order() const {
    auto name_less = [this](int a, int b) { return nodes_[a] > nodes_[b]; };  // min-heap by name
    std::priority_queue<int, std::vector<int>, decltype(name_less)> ready(name_less);
    std::vector<int> indeg(nodes_.size());
    for (int v = 0; v < node_count(); ++v) {
        indeg[v] = static_cast<int>(parents_[v].size());
        if (indeg[v] == 0) ready.push(v);
    }
    std::vector<int> order;
    while (!ready.empty()) {
        int u = ready.top();
        ready.pop();
        order.push_back(u);
        for (int v = 0; v < node_count(); ++v) {
            if (has_edge(u, v) && --indeg[v] == 0) ready.push(v);
        }
    }
    if (order.size() != nodes_.size()) throw ValidationError("structure: cycle detected");
    return order;
}

std::size_t Cpt::config_index(std::span<const int> full_assignment) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < parents.size(); ++i) {
        idx = idx * static_cast<std::size_t>(parent_cards[i]) +
              static_cast<std::size_t>(full_assignment[parents[i]]);
    }
    return idx;
}

ParameterSet validated_parameters(const NetworkStructure& structure,
                                  const std::vector<NodeDef>& nodes, ParameterSet params) {
    if (params.size() != nodes.size()) {
        throw ValidationError("parameters: CPT count does not match node count");
    }
    for (int v = 0; v < structure.node_count(); ++v) {
        Cpt& c = params[v];
        if (c.cardinality != static_cast<int>(nodes[v].states.size())) {
            throw ValidationError("parameters: CPT cardinality mismatch at '" + nodes[v].name + "'");
        }
        std::vector<int> declared = c.parents;
        std::sort(declared.begin(), declared.end());
        if (declared != structure.parents(v)) {
            throw ValidationError("parameters: CPT parents disagree with structure at '" +
                                  nodes[v].name + "'");
        }
        if (c.parent_cards.size() != c.parents.size()) {
            throw ValidationError("parameters: CPT parent cardinalities missing at '" +
                                  nodes[v].name + "'");
        }
        std::size_t configs = 1;
        for (std::size_t i = 0; i < c.parents.size(); ++i) {
            if (c.parent_cards[i] != static_cast<int>(nodes[c.parents[i]].states.size())) {
                throw ValidationError("parameters: CPT parent cardinality mismatch at '" +
                                      nodes[v].name + "'");
            }
            configs *= static_cast<std::size_t>(c.parent_cards[i]);
        }
        if (c.table.size() != configs * static_cast<std::size_t>(c.cardinality)) {
            throw ValidationError("parameters: CPT size mismatch at '" + nodes[v].name + "'");
        }
        for (std::size_t cfg = 0; cfg < configs; ++cfg) {
            double sum = 0.0;
            for (int k = 0; k < c.cardinality; ++k) {
                double p = c.table[cfg * c.cardinality + k];
                if (p < 0.0 || p > 1.0 + 1e-12) {
                    throw ValidationError("parameters: CPT entry out of [0,1] at '" +
                                          nodes[v].name + "'");
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw ValidationError("parameters: CPT row of '" + nodes[v].name +
                                      "' sums to " + std::to_string(sum));
            }
            for (int k = 0; k < c.cardinality; ++k) c.table[cfg * c.cardinality + k] /= sum;
        }
    }
    return params;
}

BayesianNetwork::BayesianNetwork(std::vector<NodeDef> nodes, NetworkStructure structure,
                                 ParameterSet params)
    : nodes_(std::move(nodes)), structure_(std::move(structure)), cpts_(std::move(params)) {
    if (nodes_.size() != structure_.nodes().size()) {
        throw ValidationError("network: node list does not match structure");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].name != structure_.nodes()[i]) {
            throw ValidationError("network: node order disagrees with structure");
        }
        if (nodes_[i].states.size() < 2) {
            throw ValidationError("network: node '" + nodes_[i].name + "' needs at least 2 states");
        }
    }
    cpts_ = validated_parameters(structure_, nodes_, std::move(cpts_));
    provenance_.resize(nodes_.size());
    topo_order_ = structure_.topological_order();
}

double BayesianNetwork::joint_probability(std::span<const int> assignment) const {
    if (assignment.size() != nodes_.size()) {
        throw ValidationError("joint_probability: assignment must cover every node");
    }
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
        if (assignment[v] < 0 || assignment[v] >= static_cast<int>(nodes_[v].states.size())) {
            throw ValidationError("joint_probability: invalid state for node '" + nodes_[v].name +
                                  "'");
        }
    }
    double p = 1.0;
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
        const Cpt& c = cpts_[v];
        p *= c.table[c.config_index(assignment) * c.cardinality + assignment[v]];
    }
    return p;
}

JointTable BayesianNetwork::enumerate_joint(std::size_t cell_cap) const {
    std::size_t cells = 1;
    for (const auto& n : nodes_) {
        if (cells > cell_cap / n.states.size()) {
            throw ValidationError("enumerate_joint: joint table exceeds cap of " +
                                  std::to_string(cell_cap) + " cells");
        }
        cells *= n.states.size();
    }
    JointTable t;
    for (const auto& n : nodes_) {
        t.nodes.push_back(n.name);
        t.cards.push_back(static_cast<int>(n.states.size()));
    }
    t.p.resize(cells);
    std::vector<int> a(nodes_.size(), 0);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        t.p[cell] = joint_probability(a);
        for (int v = static_cast<int>(a.size()) - 1; v >= 0; --v) {
            if (++a[v] < t.cards[v]) break;
            a[v] = 0;
        }
    }
    return t;
}

FrequencyTable BayesianNetwork::marginal(const std::vector<std::string>& attrs,
                                         std::size_t cell_cap) const {
    if (attrs.empty()) throw ValidationError("marginal: empty attribute set");
    std::vector<int> sel;
    for (const auto& a : attrs) sel.push_back(structure_.node_index(a));

    JointTable joint = enumerate_joint(cell_cap);

    std::size_t out_cells = 1;
    std::vector<int> sel_cards;
    for (int v : sel) {
        sel_cards.push_back(joint.cards[v]);
        out_cells *= static_cast<std::size_t>(joint.cards[v]);
    }
    std::vector<double> acc(out_cells, 0.0);
    std::vector<int> a(nodes_.size(), 0);
    for (std::size_t cell = 0; cell < joint.p.size(); ++cell) {
        std::size_t key = 0;
        for (std::size_t i = 0; i < sel.size(); ++i) {
            key = key * static_cast<std::size_t>(sel_cards[i]) +
                  static_cast<std::size_t>(a[sel[i]]);
        }
        acc[key] += joint.p[cell];
        for (int v = static_cast<int>(a.size()) - 1; v >= 0; --v) {
            if (++a[v] < joint.cards[v]) break;
            a[v] = 0;
        }
    }

    FrequencyTable out;
    out.attrs = attrs;
    std::vector<int> combo(sel.size(), 0);
    for (std::size_t key = 0; key < out_cells; ++key) {
        out.combos.push_back(combo);
        out.values.push_back(acc[key]);
        for (int i = static_cast<int>(combo.size()) - 1; i >= 0; --i) {
            if (++combo[i] < sel_cards[i]) break;
            combo[i] = 0;
        }
    }
    return out;
}

std::vector<std::vector<int>> BayesianNetwork::sample(std::size_t n, std::uint64_t seed,
                                                      const SampleOptions& options) const {
    if (n == 0) throw ValidationError("sample: n must be >= 1");

    std::vector<int> clamped(nodes_.size(), kMissing);   // root evidence
    std::vector<int> expected(nodes_.size(), kMissing);  // non-root evidence (rejection)
    bool needs_rejection = false;
    for (const auto& [name, state] : options.evidence) {
        int v = structure_.node_index(name);
        if (state < 0 || state >= static_cast<int>(nodes_[v].states.size())) {
            throw ValidationError("sample: invalid evidence state for '" + name + "'");
        }
        if (structure_.parents(v).empty()) {
            clamped[v] = state;
        } else {
            expected[v] = state;
            needs_rejection = true;
        }
    }

    std::vector<std::vector<int>> rows(n);
    auto draw_record = [&](std::size_t r) {
        SplitMix64 rng = SplitMix64::substream(seed, r);
        std::vector<int> a(nodes_.size(), 0);
        for (int attempt = 0;; ++attempt) {
            if (attempt >= options.max_tries_per_record) {
                throw ValidationError("sample: rejection guard exhausted after " +
                                      std::to_string(options.max_tries_per_record) +
                                      " tries per record (evidence probability too small)");
            }
            for (int v : topo_order_) {
                if (clamped[v] != kMissing) {
                    a[v] = clamped[v];
                    continue;
                }
                const Cpt& c = cpts_[v];
                auto row = c.row(c.config_index(a));
                double u = rng.next_double();
                double cum = 0.0;
                int k = c.cardinality - 1;
                for (int s = 0; s < c.cardinality; ++s) {
                    cum += row[s];
                    if (u < cum) {
                        k = s;
                        break;
                    }
                }
                a[v] = k;
            }
            if (!needs_rejection) break;
            bool ok = true;
            for (std::size_t v = 0; v < nodes_.size(); ++v) {
                if (expected[v] != kMissing && a[v] != expected[v]) {
                    ok = false;
                    break;
                }
            }
            if (ok) break;
        }
        rows[r] = a;
    };

    int threads = std::max(1, options.threads);
    if (threads == 1 || n < 2) {
        for (std::size_t r = 0; r < n; ++r) draw_record(r);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr first_error;
        std::mutex err_mutex;
        std::size_t chunk = (n + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            std::size_t lo = static_cast<std::size_t>(t) * chunk;
            std::size_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] {
                try {
                    for (std::size_t r = lo; r < hi; ++r) draw_record(r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }
    return rows;
}

void save_model(const BayesianNetwork& net, const std::string& path) {
    ordered_json j;
    j["format"] = "popsynth-model v1";
    j["nodes"] = ordered_json::array();
    for (std::size_t v = 0; v < net.nodes().size(); ++v) {
        const auto& node = net.nodes()[v];
        const Cpt& c = net.cpt(static_cast<int>(v));
        ordered_json nj;
        nj["name"] = node.name;
        nj["states"] = node.states;
        ordered_json parents = ordered_json::array();
        for (int p : c.parents) parents.push_back(net.nodes()[p].name);
        nj["parents"] = parents;
        ordered_json cpt = ordered_json::array();
        for (std::size_t cfg = 0; cfg < c.config_count(); ++cfg) {
            auto row = c.row(cfg);
            cpt.push_back(std::vector<double>(row.begin(), row.end()));
        }
        nj["cpt"] = cpt;
        const auto& prov = net.provenance()[v];
        if (!prov.source_id.empty() || !prov.method.empty()) {
            ordered_json pj;
            pj["source"] = prov.source_id;
            pj["method"] = prov.method;
            if (!prov.config_hash.empty()) pj["config_hash"] = prov.config_hash;
            nj["provenance"] = pj;
        }
        j["nodes"].push_back(nj);
    }
    ordered_json meta;
    auto edge_list = [&](const std::set<std::pair<int, int>>& edges) {
        ordered_json arr = ordered_json::array();
        for (const auto& [u, v] : edges) {
            arr.push_back({net.nodes()[u].name, net.nodes()[v].name});
        }
        return arr;
    };
    meta["required_edges"] = edge_list(net.structure().required_edges());
    meta["forbidden_edges"] = edge_list(net.structure().forbidden_edges());
    j["metadata"] = meta;

    std::ofstream out(path);
    if (!out) throw Error("model: cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

BayesianNetwork load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("model: cannot open '" + path + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model: malformed file '" + path + "': " + e.what());
    }
    try {
        if (j.value("format", std::string{}) != "popsynth-model v1") {
            throw ParseError("model: '" + path + "' has an unknown format tag");
        }
        std::vector<NodeDef> nodes;
        for (const auto& nj : j.at("nodes")) {
            nodes.push_back({nj.at("name").get<std::string>(),
                             nj.at("states").get<std::vector<std::string>>()});
        }
        std::vector<std::string> names;
        for (const auto& n : nodes) names.push_back(n.name);
        NetworkStructure structure(names);

        ParameterSet params(nodes.size());
        std::vector<NodeProvenance> provenance(nodes.size());
        int v = 0;
        for (const auto& nj : j.at("nodes")) {
            Cpt c;
            c.cardinality = static_cast<int>(nodes[v].states.size());
            for (const auto& pname : nj.at("parents")) {
                int p = structure.node_index(pname.get<std::string>());
                c.parents.push_back(p);
                c.parent_cards.push_back(static_cast<int>(nodes[p].states.size()));
                structure.add_edge(p, v);
            }
            for (const auto& row : nj.at("cpt")) {
                for (const auto& x : row) c.table.push_back(x.get<double>());
            }
            params[v] = std::move(c);
            if (nj.contains("provenance")) {
                const auto& pj = nj.at("provenance");
                provenance[v] = {pj.value("source", std::string{}),
                                 pj.value("method", std::string{}),
                                 pj.value("config_hash", std::string{})};
            }
            ++v;
        }
        if (j.contains("metadata")) {
            const auto& meta = j.at("metadata");
            for (const auto& e : meta.value("required_edges", ordered_json::array())) {
                structure.require_edge(structure.node_index(e.at(0).get<std::string>()),
                                       structure.node_index(e.at(1).get<std::string>()));
            }
            for (const auto& e : meta.value("forbidden_edges", ordered_json::array())) {
                structure.forbid_edge(structure.node_index(e.at(0).get<std::string>()),
                                      structure.node_index(e.at(1).get<std::string>()));
            }
        }
        BayesianNetwork net(std::move(nodes), std::move(structure), std::move(params));
        net.provenance() = std::move(provenance);
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model: malformed file '" + path + "': " + e.what());
    }
}

}  // namespace popsynth
