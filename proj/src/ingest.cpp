#include "popsynth/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "csv.hpp"
#include "popsynth/errors.hpp"

namespace popsynth {

MissingPolicy missing_policy_from_string(const std::string& s) {
    if (s == "listwise-delete") return MissingPolicy::ListwiseDelete;
    if (s == "mode-impute") return MissingPolicy::ModeImpute;
    if (s == "keep") return MissingPolicy::Keep;
    throw ParseError("unknown missing policy: '" + s + "'");
}

std::string to_string(MissingPolicy p) {
    switch (p) {
        case MissingPolicy::ListwiseDelete: return "listwise-delete";
        case MissingPolicy::ModeImpute: return "mode-impute";
        case MissingPolicy::Keep: return "keep";
    }
    return "listwise-delete";
}

namespace {

enum class CellKind { State, Missing, Drop };

struct Cell {
    CellKind kind;
    int state = kMissing;
};

// Harmonize one raw token for one attribute. Unmapped tokens that match a
// declared state label pass through unchanged.
Cell harmonize(const std::string& raw, const std::string& attr, const Schema& schema,
               const HarmonizationMap& map) {
    if (raw.empty() || raw == map.missing_token) return {CellKind::Missing};
    auto rule_it = map.rules.find(attr);
    if (rule_it != map.rules.end()) {
        const auto& rule = rule_it->second;
        auto sp = rule.special.find(raw);
        if (sp != rule.special.end()) return {sp->second ? CellKind::Missing : CellKind::Drop};
        auto m = rule.to_state.find(raw);
        if (m != rule.to_state.end()) {
            int idx = schema.state_index(attr, m->second);
            if (idx < 0) {
                throw ValidationError("harmonization maps '" + raw + "' to undeclared state '" +
                                      m->second + "' of attribute '" + attr + "'");
            }
            return {CellKind::State, idx};
        }
    }
    int idx = schema.state_index(attr, raw);
    if (idx < 0) {
        throw ValidationError("attribute '" + attr + "': raw token '" + raw +
                              "' has no harmonization entry and is not a declared state");
    }
    return {CellKind::State, idx};
}

struct ParsedFile {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

ParsedFile read_table(const std::string& path, char delim) {
    std::ifstream in(path);
    if (!in) throw ParseError("ingest: cannot open '" + path + "'");
    ParsedFile f;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("ingest: empty file '" + path + "'");
    f.header = csv::split_line(csv::strip_cr(line), delim);
    while (std::getline(in, line)) {
        line = csv::strip_cr(line);
        if (line.empty()) continue;
        auto fields = csv::split_line(line, delim);
        if (fields.size() != f.header.size()) {
            throw ParseError("ingest: ragged row in '" + path + "' (expected " +
                             std::to_string(f.header.size()) + " fields, got " +
                             std::to_string(fields.size()) + ")");
        }
        f.rows.push_back(std::move(fields));
    }
    return f;
}

std::size_t find_column(const ParsedFile& f, const std::string& name, const std::string& path) {
    auto it = std::find(f.header.begin(), f.header.end(), name);
    if (it == f.header.end()) {
        throw ValidationError("ingest: '" + path + "' lacks column '" + name + "'");
    }
    return static_cast<std::size_t>(it - f.header.begin());
}

}  // namespace

PreparedDataset ingest_micro(const std::string& path, const DataSourceDescriptor& descriptor,
                             const Schema& schema, const HarmonizationMap& map,
                             MissingPolicy missing_policy) {
    auto file = read_table(path, map.delimiter);
    std::vector<std::size_t> cols;
    for (const auto& attr : descriptor.attributes) cols.push_back(find_column(file, attr, path));
    std::size_t weight_col = 0;
    bool weighted = descriptor.weight_column.has_value();
    if (weighted) weight_col = find_column(file, *descriptor.weight_column, path);

    PreparedDataset ds;
    ds.source_id = descriptor.id;
    ds.kind = SourceKind::Micro;
    ds.columns = descriptor.attributes;
    ds.stats.rows_read = static_cast<long>(file.rows.size());

    for (const auto& raw_row : file.rows) {
        std::vector<int> row(cols.size());
        bool drop = false, missing = false;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            Cell cell = harmonize(raw_row[cols[c]], descriptor.attributes[c], schema, map);
            if (cell.kind == CellKind::Drop) {
                drop = true;
                break;
            }
            if (cell.kind == CellKind::Missing) missing = true;
            row[c] = cell.state;
        }
        if (drop || (missing && missing_policy == MissingPolicy::ListwiseDelete)) {
            ++ds.stats.rows_dropped;
            continue;
        }
        if (missing) {
            for (int v : row) {
                if (v == kMissing) ++ds.stats.cells_missing;
            }
        }
        ds.records.push_back(std::move(row));
        if (weighted) {
            double w;
            try {
                w = std::stod(raw_row[weight_col]);
            } catch (const std::exception&) {
                throw ParseError("ingest: non-numeric weight in '" + path + "'");
            }
            if (w <= 0.0) throw ValidationError("ingest: non-positive weight in '" + path + "'");
            ds.weights.push_back(w);
        }
    }
    if (ds.records.empty()) {
        throw ValidationError("ingest: '" + path + "' yielded no records after deletion");
    }

    if (missing_policy == MissingPolicy::ModeImpute) {
        for (std::size_t c = 0; c < ds.columns.size(); ++c) {
            std::vector<double> mass(schema.attribute(ds.columns[c]).states.size(), 0.0);
            for (std::size_t r = 0; r < ds.records.size(); ++r) {
                int v = ds.records[r][c];
                if (v != kMissing) mass[v] += ds.weight(r);
            }
            // lowest state index wins ties
            int mode = static_cast<int>(std::max_element(mass.begin(), mass.end()) - mass.begin());
            for (auto& rec : ds.records) {
                if (rec[c] == kMissing) {
                    rec[c] = mode;
                    ++ds.stats.cells_imputed;
                }
            }
        }
        ds.stats.cells_missing = 0;
    }
    return ds;
}

PreparedDataset ingest_macro(const std::string& path, const DataSourceDescriptor& descriptor,
                             const Schema& schema, const HarmonizationMap& map,
                             const std::string& count_column) {
    auto file = read_table(path, map.delimiter);
    std::vector<std::size_t> cols;
    for (const auto& attr : descriptor.attributes) cols.push_back(find_column(file, attr, path));
    std::size_t count_col = find_column(file, count_column, path);

    std::map<std::vector<int>, double> acc;
    long rows_read = 0, rows_dropped = 0;
    for (const auto& raw_row : file.rows) {
        ++rows_read;
        std::vector<int> combo(cols.size());
        bool skip = false;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            Cell cell = harmonize(raw_row[cols[c]], descriptor.attributes[c], schema, map);
            if (cell.kind != CellKind::State) {
                skip = true;
                break;
            }
            combo[c] = cell.state;
        }
        if (skip) {
            ++rows_dropped;
            continue;
        }
        double count;
        try {
            count = std::stod(raw_row[count_col]);
        } catch (const std::exception&) {
            throw ParseError("ingest: non-numeric count in '" + path + "'");
        }
        if (count < 0.0) {
            throw ValidationError("ingest: negative count in '" + path + "'");
        }
        acc[combo] += count;
    }

    PreparedDataset ds;
    ds.source_id = descriptor.id;
    ds.kind = SourceKind::Macro;
    ds.columns = descriptor.attributes;
    ds.stats.rows_read = rows_read;
    ds.stats.rows_dropped = rows_dropped;
    double total = 0.0;
    for (const auto& [combo, count] : acc) {
        ds.combos.push_back(combo);
        ds.counts.push_back(count);
        total += count;
    }
    if (total <= 0.0) {
        throw ValidationError("ingest: '" + path + "' has zero total count");
    }
    return ds;
}

}  // namespace popsynth
