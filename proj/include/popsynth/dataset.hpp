#pragma once

#include <string>
#include <vector>

#include "popsynth/schema.hpp"

namespace popsynth {

// Cell value for a declared-but-unobserved entry in a micro table.
inline constexpr int kMissing = -1;

struct IngestStats {
    long rows_read = 0;
    long rows_dropped = 0;
    long cells_imputed = 0;
    long cells_missing = 0;
};

// Harmonized table for one data source: either per-record micro rows (state
// indices, optional weights) or macro (state-index tuple, count) rows.
// Immutable after construction.
struct PreparedDataset {
    std::string source_id;
    SourceKind kind = SourceKind::Micro;
    std::vector<std::string> columns;

    // micro payload
    std::vector<std::vector<int>> records;
    std::vector<double> weights;  // empty means all-ones

    // macro payload
    std::vector<std::vector<int>> combos;
    std::vector<double> counts;

    IngestStats stats;

    std::size_t column_index(const std::string& name) const;
    bool has_column(const std::string& name) const;
    double weight(std::size_t record) const {
        return weights.empty() ? 1.0 : weights[record];
    }
    double total_weight() const;
    bool has_missing() const;

    bool operator==(const PreparedDataset& other) const {
        return source_id == other.source_id && kind == other.kind && columns == other.columns &&
               records == other.records && weights == other.weights && combos == other.combos &&
               counts == other.counts;
    }
};

// combination (state indices over `attrs`, in the requested order) -> value
struct FrequencyTable {
    std::vector<std::string> attrs;
    std::vector<std::vector<int>> combos;
    std::vector<double> values;
};

// Weight- (micro) or count- (macro) based relative frequencies over a subset
// of the dataset's attributes. Output sums to 1 within 1e-9.
FrequencyTable empirical_frequencies(const PreparedDataset& ds,
                                     const std::vector<std::string>& attrs);

void save_prepared(const PreparedDataset& ds, const Schema& schema, const std::string& path);
PreparedDataset load_prepared(const std::string& path, const Schema& schema);

}  // namespace popsynth
