#include "popsynth/merge.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "popsynth/errors.hpp"
#include "popsynth/hash.hpp"

namespace popsynth {

SourceMode source_mode_from_string(const std::string& s) {
    if (s == "learnt") return SourceMode::Learnt;
    if (s == "crafted") return SourceMode::Crafted;
    throw ParseError("unknown source mode: '" + s + "'");
}

std::string to_string(SourceMode m) { return m == SourceMode::Learnt ? "learnt" : "crafted"; }

SourceMode MergePlan::mode_for(const DataSourceDescriptor& source) const {
    auto it = source_mode.find(source.id);
    if (it != source_mode.end()) {
        if (it->second == SourceMode::Learnt && source.kind == SourceKind::Macro) {
            throw ValidationError("merge plan: macro source '" + source.id +
                                  "' cannot use learnt mode");
        }
        return it->second;
    }
    return source.kind == SourceKind::Macro ? SourceMode::Crafted : SourceMode::Learnt;
}

namespace {

std::string config_hash(const LearnConfig& config) {
    std::ostringstream os;
    os << config.smoothing_alpha << '|' << config.em_tolerance << '|' << config.em_max_iters << '|'
       << config.hc_epsilon << '|' << config.hc_max_iters << '|' << config.seed << '|'
       << config.em_completion_cap;
    return hex64(fnv1a64(os.str()));
}

std::vector<std::string> non_core_attributes(const DataSourceDescriptor& source,
                                             const MergePlan& plan) {
    std::vector<std::string> out;
    for (const auto& a : source.attributes) {
        if (std::find(plan.core.begin(), plan.core.end(), a) == plan.core.end()) {
            out.push_back(a);
        }
    }
    return out;
}

// Restrict a micro dataset to a column subset (used to fit the core on the
// richest source without touching its other attributes).
PreparedDataset restrict_columns(const PreparedDataset& ds, const std::vector<std::string>& cols) {
    PreparedDataset out;
    out.source_id = ds.source_id;
    out.kind = ds.kind;
    out.columns = cols;
    std::vector<std::size_t> idx;
    for (const auto& c : cols) idx.push_back(ds.column_index(c));
    out.records.reserve(ds.records.size());
    for (const auto& rec : ds.records) {
        std::vector<int> row(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) row[i] = rec[idx[i]];
        out.records.push_back(std::move(row));
    }
    out.weights = ds.weights;
    return out;
}

bool columns_complete(const PreparedDataset& ds, const std::vector<std::string>& cols) {
    std::vector<std::size_t> idx;
    for (const auto& c : cols) idx.push_back(ds.column_index(c));
    for (const auto& rec : ds.records) {
        for (std::size_t i : idx) {
            if (rec[i] == kMissing) return false;
        }
    }
    return true;
}

// Nodes of a sub-network ordered by schema attribute index, so the relative
// order of shared attributes is the same in every (sub-)network.
std::vector<std::string> schema_ordered(const Schema& schema, std::vector<std::string> attrs) {
    std::sort(attrs.begin(), attrs.end(), [&](const std::string& a, const std::string& b) {
        return schema.attribute_index(a) < schema.attribute_index(b);
    });
    return attrs;
}

struct FittedSource {
    NetworkStructure structure;  // over core ∪ source attributes
    ParameterSet params;
    std::vector<NodeDef> nodes;
    std::string method;  // per non-core node fit method
};

}  // namespace

NetworkStructure craft_structure(const DataSourceDescriptor& source, const Schema& schema,
                                 const MergePlan& plan, const NetworkStructure& s_core) {
    std::vector<std::string> attrs = plan.core;
    for (const auto& a : non_core_attributes(source, plan)) attrs.push_back(a);
    attrs = schema_ordered(schema, attrs);
    NetworkStructure g(attrs);

    for (const auto& [u, v] : s_core.edges()) {
        g.add_edge(g.node_index(s_core.nodes()[u]), g.node_index(s_core.nodes()[v]));
    }

    auto territorial = schema.territorial_attribute();
    for (const auto& child : non_core_attributes(source, plan)) {
        std::vector<std::string> parents;
        auto it = plan.parent_policy.find(child);
        if (it != plan.parent_policy.end()) {
            parents = it->second;
            for (const auto& p : parents) {
                if (std::find(plan.core.begin(), plan.core.end(), p) == plan.core.end()) {
                    throw ValidationError("merge plan: crafted parent '" + p + "' of '" + child +
                                          "' is not a core attribute");
                }
                if (std::find(source.attributes.begin(), source.attributes.end(), p) ==
                    source.attributes.end()) {
                    throw ValidationError("merge plan: crafted parent '" + p + "' of '" + child +
                                          "' is absent from source '" + source.id + "'");
                }
            }
        } else {
            for (const auto& c : plan.core) {
                if (std::find(source.attributes.begin(), source.attributes.end(), c) !=
                    source.attributes.end()) {
                    parents.push_back(c);
                }
            }
        }
        if (territorial &&
            std::find(source.attributes.begin(), source.attributes.end(), *territorial) !=
                source.attributes.end() &&
            std::find(parents.begin(), parents.end(), *territorial) == parents.end() &&
            std::find(plan.core.begin(), plan.core.end(), *territorial) != plan.core.end()) {
            parents.push_back(*territorial);  // geographically rooted
        }

        std::size_t cells = schema.attribute(child).states.size();
        for (const auto& p : parents) cells *= schema.attribute(p).states.size();
        if (cells > plan.cpt_cell_cap) {
            throw ValidationError("craft_structure: CPT of '" + child + "' needs " +
                                  std::to_string(cells) + " cells, exceeding the cap of " +
                                  std::to_string(plan.cpt_cell_cap));
        }
        for (const auto& p : parents) g.add_edge(g.node_index(p), g.node_index(child));
    }
    return g;
}

Cpt macro_to_cpt(const PreparedDataset& ds, const Schema& schema, const std::string& child,
                 const std::vector<std::string>& parents, double alpha) {
    if (ds.kind != SourceKind::Macro) throw ValidationError("macro_to_cpt: needs a macro dataset");
    std::size_t child_col = ds.column_index(child);
    std::vector<std::size_t> parent_cols;
    for (const auto& p : parents) parent_cols.push_back(ds.column_index(p));

    Cpt c;
    c.cardinality = schema.attribute(child).cardinality();
    std::size_t configs = 1;
    for (std::size_t i = 0; i < parents.size(); ++i) {
        c.parents.push_back(static_cast<int>(i));
        c.parent_cards.push_back(schema.attribute(parents[i]).cardinality());
        configs *= static_cast<std::size_t>(c.parent_cards.back());
    }
    std::vector<double> counts(configs * c.cardinality, 0.0);
    for (std::size_t r = 0; r < ds.combos.size(); ++r) {
        std::size_t cfg = 0;
        for (std::size_t i = 0; i < parent_cols.size(); ++i) {
            cfg = cfg * static_cast<std::size_t>(c.parent_cards[i]) +
                  static_cast<std::size_t>(ds.combos[r][parent_cols[i]]);
        }
        counts[cfg * c.cardinality + ds.combos[r][child_col]] += ds.counts[r];
    }
    c.table.resize(counts.size());
    for (std::size_t cfg = 0; cfg < configs; ++cfg) {
        double total = 0.0;
        for (int k = 0; k < c.cardinality; ++k) total += counts[cfg * c.cardinality + k];
        double denom = total + alpha * c.cardinality;
        for (int k = 0; k < c.cardinality; ++k) {
            c.table[cfg * c.cardinality + k] =
                denom > 0.0 ? (counts[cfg * c.cardinality + k] + alpha) / denom
                            : 1.0 / c.cardinality;
        }
    }
    return c;
}

namespace {

// Learn S_ds under the core constraints: required = S_core edges, forbidden =
// core pairs outside S_core plus every non-core -> core pair.
NetworkStructure learn_source_structure(const PreparedDataset& ds, const Schema& schema,
                                        const MergePlan& plan, const LearnConfig& config,
                                        const NetworkStructure& s_core,
                                        const std::vector<std::string>& attrs) {
    EdgeConstraints constraints;
    for (const auto& [u, v] : s_core.edges()) {
        constraints.required.emplace_back(s_core.nodes()[u], s_core.nodes()[v]);
    }
    auto is_core = [&](const std::string& a) {
        return std::find(plan.core.begin(), plan.core.end(), a) != plan.core.end();
    };
    for (const auto& u : attrs) {
        for (const auto& v : attrs) {
            if (u == v) continue;
            if (is_core(u) && is_core(v)) {
                if (!s_core.has_edge(s_core.node_index(u), s_core.node_index(v))) {
                    constraints.forbidden.emplace_back(u, v);
                }
            } else if (!is_core(u) && is_core(v)) {
                constraints.forbidden.emplace_back(u, v);
            }
        }
    }
    auto nodes = nodes_from_schema(schema, attrs);
    return hill_climb(restrict_columns(ds, attrs), nodes, constraints, config);
}

}  // namespace

BayesianNetwork merge_sources(const std::vector<PreparedDataset>& datasets, const Schema& schema,
                              const MergePlan& plan, const LearnConfig& config) {
    config.validate();
    if (plan.core.empty()) throw ValidationError("merge: empty core");

    auto dataset_for = [&](const std::string& id) -> const PreparedDataset& {
        for (const auto& ds : datasets) {
            if (ds.source_id == id) return ds;
        }
        throw ValidationError("merge: no dataset for source '" + id + "'");
    };

    // Step 1: core present in every source; exclusive ownership of non-core.
    std::map<std::string, std::string> owner;
    for (const auto& src : schema.sources()) {
        const auto& ds = dataset_for(src.id);
        for (const auto& c : plan.core) {
            if (!ds.has_column(c)) {
                throw ValidationError("merge: core attribute '" + c + "' absent from source '" +
                                      src.id + "'");
            }
        }
        for (const auto& a : non_core_attributes(src, plan)) {
            auto [it, inserted] = owner.emplace(a, src.id);
            if (!inserted) {
                throw ValidationError("merge: attribute '" + a + "' appears in sources '" +
                                      it->second + "' and '" + src.id +
                                      "' (non-core ownership must be exclusive)");
            }
        }
    }

    // Step 2: the richest source.
    const auto& rich_desc = schema.source(plan.richest);
    if (rich_desc.kind != SourceKind::Micro) {
        throw ValidationError("merge: richest source '" + plan.richest + "' must be micro");
    }
    const auto& rich_ds = dataset_for(plan.richest);

    const auto core_attrs = schema_ordered(schema, plan.core);
    const auto core_nodes = nodes_from_schema(schema, core_attrs);
    const std::string hash = config_hash(config);

    // Step 3: S_core.
    NetworkStructure s_core(core_attrs);
    if (plan.mode_for(rich_desc) == SourceMode::Learnt) {
        s_core = hill_climb(restrict_columns(rich_ds, core_attrs), core_nodes, {}, config);
    } else if (!plan.crafted_core_edges.empty()) {
        for (const auto& [u, v] : plan.crafted_core_edges) {
            s_core.add_edge(s_core.node_index(u), s_core.node_index(v));
        }
    } else if (auto territorial = schema.territorial_attribute();
               territorial && std::find(core_attrs.begin(), core_attrs.end(), *territorial) !=
                                  core_attrs.end()) {
        int root = s_core.node_index(*territorial);
        for (int v = 0; v < s_core.node_count(); ++v) {
            if (v != root) s_core.add_edge(root, v);
        }
    }

    // Step 4: δ_core from ds_rich.
    auto core_data = restrict_columns(rich_ds, core_attrs);
    std::string core_method;
    ParameterSet core_params;
    if (core_data.has_missing()) {
        core_params = fit_em(s_core, core_nodes, core_data, config).params;
        core_method = "em";
    } else {
        core_params = fit_mle(s_core, core_nodes, core_data, config);
        core_method = "mle";
    }

    // Steps 5-7 per source owning non-core attributes.
    struct SourceResult {
        std::string id;
        NetworkStructure structure;
        std::vector<NodeDef> nodes;
        ParameterSet params;       // aligned with structure nodes
        std::vector<std::string> methods;  // per node
    };
    std::vector<SourceResult> fitted;

    for (const auto& src : schema.sources()) {
        auto own = non_core_attributes(src, plan);
        if (own.empty()) continue;
        const auto& ds = dataset_for(src.id);

        std::vector<std::string> attrs = plan.core;
        attrs.insert(attrs.end(), own.begin(), own.end());
        attrs = schema_ordered(schema, attrs);
        auto nodes = nodes_from_schema(schema, attrs);

        NetworkStructure s_ds = plan.mode_for(src) == SourceMode::Learnt
                                    ? learn_source_structure(ds, schema, plan, config, s_core,
                                                             attrs)
                                    : craft_structure(src, schema, plan, s_core);

        // Step 6: defensive re-check; step 5's constraints make any hit an
        // internal-consistency failure.
        auto is_core = [&](const std::string& a) {
            return std::find(plan.core.begin(), plan.core.end(), a) != plan.core.end();
        };
        for (const auto& [u, v] : s_ds.edges()) {
            const auto& un = s_ds.nodes()[u];
            const auto& vn = s_ds.nodes()[v];
            if (is_core(vn) && !is_core(un)) {
                throw Error("merge: internal consistency failure: source '" + src.id +
                            "' produced edge " + un + " -> " + vn + " into the core");
            }
            if (is_core(un) && is_core(vn) &&
                !s_core.has_edge(s_core.node_index(un), s_core.node_index(vn))) {
                throw Error("merge: internal consistency failure: source '" + src.id +
                            "' altered the core structure with edge " + un + " -> " + vn);
            }
        }

        // Step 7: δ_ds for the source's own (non-core) nodes.
        SourceResult result{src.id, s_ds, nodes, ParameterSet(nodes.size()),
                            std::vector<std::string>(nodes.size())};
        if (src.kind == SourceKind::Macro) {
            for (std::size_t v = 0; v < nodes.size(); ++v) {
                if (is_core(nodes[v].name)) continue;
                std::vector<std::string> parent_names;
                for (int p : s_ds.parents(static_cast<int>(v))) {
                    parent_names.push_back(nodes[p].name);
                }
                Cpt c = macro_to_cpt(ds, schema, nodes[v].name, parent_names,
                                     config.smoothing_alpha);
                // remap positional parent indices into this structure's numbering
                for (std::size_t i = 0; i < parent_names.size(); ++i) {
                    c.parents[i] = s_ds.node_index(parent_names[i]);
                }
                result.params[v] = std::move(c);
                result.methods[v] = "macro";
            }
        } else {
            auto sub = restrict_columns(ds, attrs);
            ParameterSet fit;
            std::string method;
            if (sub.has_missing()) {
                fit = fit_em(s_ds, nodes, sub, config).params;
                method = "em";
            } else {
                fit = fit_mle(s_ds, nodes, sub, config);
                method = "mle";
            }
            for (std::size_t v = 0; v < nodes.size(); ++v) {
                if (is_core(nodes[v].name)) continue;
                result.params[v] = std::move(fit[v]);
                result.methods[v] = method;
            }
        }
        fitted.push_back(std::move(result));
    }

    // Final assembly: union of attributes in schema order; core CPTs are the
    // ones fitted on ds_rich, untouched.
    std::set<std::string> attr_union(plan.core.begin(), plan.core.end());
    for (const auto& src : schema.sources()) {
        for (const auto& a : src.attributes) attr_union.insert(a);
    }
    auto all_attrs =
        schema_ordered(schema, std::vector<std::string>(attr_union.begin(), attr_union.end()));
    auto all_nodes = nodes_from_schema(schema, all_attrs);
    NetworkStructure structure(all_attrs);
    ParameterSet params(all_attrs.size());
    std::vector<NodeProvenance> provenance(all_attrs.size());

    auto remap_cpt = [&](Cpt c, const std::vector<std::string>& from_nodes) {
        std::vector<int> remapped;
        for (int p : c.parents) remapped.push_back(structure.node_index(from_nodes[p]));
        c.parents = std::move(remapped);
        return c;
    };

    for (const auto& [u, v] : s_core.edges()) {
        structure.add_edge(structure.node_index(s_core.nodes()[u]),
                           structure.node_index(s_core.nodes()[v]));
    }
    for (std::size_t v = 0; v < core_attrs.size(); ++v) {
        int idx = structure.node_index(core_attrs[v]);
        params[idx] = remap_cpt(core_params[v], s_core.nodes());
        provenance[idx] = {plan.richest, core_method, hash};
    }
    for (const auto& result : fitted) {
        for (const auto& [u, v] : result.structure.edges()) {
            const auto& vn = result.structure.nodes()[v];
            if (std::find(plan.core.begin(), plan.core.end(), vn) != plan.core.end()) continue;
            structure.add_edge(structure.node_index(result.structure.nodes()[u]),
                               structure.node_index(vn));
        }
        for (std::size_t v = 0; v < result.nodes.size(); ++v) {
            const auto& name = result.nodes[v].name;
            if (std::find(plan.core.begin(), plan.core.end(), name) != plan.core.end()) continue;
            int idx = structure.node_index(name);
            params[idx] = remap_cpt(result.params[v], result.structure.nodes());
            provenance[idx] = {result.id, result.methods[v], hash};
        }
    }

    BayesianNetwork net(std::move(all_nodes), std::move(structure), std::move(params));
    net.provenance() = std::move(provenance);
    return net;
}

}  // namespace popsynth
