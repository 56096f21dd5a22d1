#pragma once

#include <map>
#include <string>
#include <vector>

#include "popsynth/bayesnet.hpp"
#include "popsynth/learn.hpp"

namespace popsynth {

enum class SourceMode { Learnt, Crafted };

SourceMode source_mode_from_string(const std::string& s);
std::string to_string(SourceMode m);

// Core-anchored fusion plan: which source anchors the core, how each source's
// structure is obtained, and (crafted mode) which core attributes parent each
// non-core attribute.
struct MergePlan {
    std::vector<std::string> core;
    std::string richest;
    std::map<std::string, SourceMode> source_mode;  // default Learnt for micro, Crafted for macro
    // crafted mode: non-core attribute -> core parents (default: all core
    // attributes present in the owning source, territorial attribute included)
    std::map<std::string, std::vector<std::string>> parent_policy;
    // crafted core structure; empty means territorial-root star over the core
    std::vector<std::pair<std::string, std::string>> crafted_core_edges;
    std::size_t cpt_cell_cap = 1'000'000;

    SourceMode mode_for(const DataSourceDescriptor& source) const;
};

// Star-like knowledge-based structure over (core ∪ source attributes): each
// non-core attribute's parents come from the parent policy; core-internal
// edges are taken from `s_core`.
NetworkStructure craft_structure(const DataSourceDescriptor& source, const Schema& schema,
                                 const MergePlan& plan, const NetworkStructure& s_core);

// CPT rows for `child` given `parents` normalized from macro counts; zero
// count rows with alpha = 0 get the uniform row. The returned Cpt's parent
// indices refer to positions in the `parents` argument.
Cpt macro_to_cpt(const PreparedDataset& ds, const Schema& schema, const std::string& child,
                 const std::vector<std::string>& parents, double alpha);

// Core-anchored merge of per-source structures and parameters into one
// network: the core sub-network is fitted once on the richest source and is
// preserved bit-identically; every other source contributes structure and
// CPTs only for the non-core attributes it owns, with no edge from a
// non-core node into a core node.
BayesianNetwork merge_sources(const std::vector<PreparedDataset>& datasets, const Schema& schema,
                              const MergePlan& plan, const LearnConfig& config);

}  // namespace popsynth
