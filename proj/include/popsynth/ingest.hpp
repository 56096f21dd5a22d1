#pragma once

#include <map>
#include <string>

#include "popsynth/dataset.hpp"
#include "popsynth/schema.hpp"

namespace popsynth {

// Per-attribute translation from raw source tokens to schema state labels.
// Raw tokens not listed fall back to the identity mapping when the token is
// itself a declared state label. The sentinels map a token to "treat as
// missing" or "drop the record".
struct HarmonizationRule {
    std::map<std::string, std::string> to_state;  // raw token -> state label
    std::map<std::string, bool> special;          // raw token -> true=MISSING, false=DROP
};

struct HarmonizationMap {
    std::map<std::string, HarmonizationRule> rules;  // attribute -> rule
    std::string missing_token = "NA";                // empty cells are always missing
    char delimiter = ',';
};

enum class MissingPolicy {
    ListwiseDelete,  // drop any record with a missing declared cell
    ModeImpute,      // replace missing cells by the weighted modal state
    Keep             // retain missing cells (for EM parameter fitting)
};

MissingPolicy missing_policy_from_string(const std::string& s);
std::string to_string(MissingPolicy p);

PreparedDataset ingest_micro(const std::string& path, const DataSourceDescriptor& descriptor,
                             const Schema& schema, const HarmonizationMap& map,
                             MissingPolicy missing_policy);

// Macro file: descriptor attributes plus a "count" column; duplicate
// combinations are summed.
PreparedDataset ingest_macro(const std::string& path, const DataSourceDescriptor& descriptor,
                             const Schema& schema, const HarmonizationMap& map,
                             const std::string& count_column = "count");

}  // namespace popsynth
