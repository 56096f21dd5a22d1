#include "popsynth/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "csv.hpp"
#include "popsynth/errors.hpp"

namespace popsynth {

std::size_t PreparedDataset::column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        throw ValidationError("dataset '" + source_id + "': no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - columns.begin());
}

bool PreparedDataset::has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

double PreparedDataset::total_weight() const {
    if (kind == SourceKind::Macro) {
        return std::accumulate(counts.begin(), counts.end(), 0.0);
    }
    if (weights.empty()) return static_cast<double>(records.size());
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

bool PreparedDataset::has_missing() const {
    for (const auto& r : records) {
        for (int v : r) {
            if (v == kMissing) return true;
        }
    }
    return false;
}

FrequencyTable empirical_frequencies(const PreparedDataset& ds,
                                     const std::vector<std::string>& attrs) {
    if (attrs.empty()) throw ValidationError("empirical_frequencies: empty attribute set");
    std::vector<std::size_t> cols;
    for (const auto& a : attrs) cols.push_back(ds.column_index(a));

    std::map<std::vector<int>, double> acc;
    double total = 0.0;
    auto add = [&](const std::vector<int>& row, double w) {
        std::vector<int> key(cols.size());
        for (std::size_t i = 0; i < cols.size(); ++i) {
            key[i] = row[cols[i]];
            if (key[i] == kMissing) return;  // incomplete cells carry no mass
        }
        acc[key] += w;
        total += w;
    };
    if (ds.kind == SourceKind::Micro) {
        for (std::size_t r = 0; r < ds.records.size(); ++r) add(ds.records[r], ds.weight(r));
    } else {
        for (std::size_t r = 0; r < ds.combos.size(); ++r) add(ds.combos[r], ds.counts[r]);
    }
    if (total <= 0.0) {
        throw ValidationError("empirical_frequencies: dataset '" + ds.source_id +
                              "' has no complete mass over the requested attributes");
    }

    FrequencyTable table;
    table.attrs = attrs;
    for (const auto& [combo, w] : acc) {
        table.combos.push_back(combo);
        table.values.push_back(w / total);
    }
    return table;
}

void save_prepared(const PreparedDataset& ds, const Schema& schema, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("dataset: cannot write '" + path + "'");
    out << "#popsynth-prepared v1\n";
    out << "#source=" << ds.source_id << " kind=" << to_string(ds.kind) << "\n";
    out << "#rows_read=" << ds.stats.rows_read << " rows_dropped=" << ds.stats.rows_dropped
        << " cells_imputed=" << ds.stats.cells_imputed << "\n";
    const char d = ',';
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
        if (c) out << d;
        out << csv::escape(ds.columns[c], d);
    }
    if (ds.kind == SourceKind::Micro) {
        if (!ds.weights.empty()) out << d << "__weight";
        out << '\n';
        for (std::size_t r = 0; r < ds.records.size(); ++r) {
            for (std::size_t c = 0; c < ds.columns.size(); ++c) {
                if (c) out << d;
                int v = ds.records[r][c];
                if (v != kMissing) {
                    out << csv::escape(schema.attribute(ds.columns[c]).states[v], d);
                }
            }
            if (!ds.weights.empty()) out << d << ds.weights[r];
            out << '\n';
        }
    } else {
        out << d << "__count\n";
        for (std::size_t r = 0; r < ds.combos.size(); ++r) {
            for (std::size_t c = 0; c < ds.columns.size(); ++c) {
                if (c) out << d;
                out << csv::escape(schema.attribute(ds.columns[c]).states[ds.combos[r][c]], d);
            }
            out << d << ds.counts[r] << '\n';
        }
    }
}

PreparedDataset load_prepared(const std::string& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("dataset: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || csv::strip_cr(line) != "#popsynth-prepared v1") {
        throw ParseError("dataset: '" + path + "' is not a prepared-dataset file");
    }
    PreparedDataset ds;
    if (!std::getline(in, line)) throw ParseError("dataset: truncated file '" + path + "'");
    {
        std::istringstream hdr(csv::strip_cr(line).substr(1));
        std::string tok;
        while (hdr >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            auto key = tok.substr(0, eq);
            auto val = tok.substr(eq + 1);
            if (key == "source") ds.source_id = val;
            if (key == "kind") ds.kind = source_kind_from_string(val);
        }
    }
    // Stats comment line is informational; skip comment lines before header.
    do {
        if (!std::getline(in, line)) throw ParseError("dataset: truncated file '" + path + "'");
        line = csv::strip_cr(line);
    } while (!line.empty() && line[0] == '#');

    auto header = csv::split_line(line, ',');
    bool has_weight = false, has_count = false;
    for (const auto& h : header) {
        if (h == "__weight") has_weight = true;
        else if (h == "__count") has_count = true;
        else ds.columns.push_back(h);
    }
    if (ds.kind == SourceKind::Macro && !has_count) {
        throw ParseError("dataset: macro file '" + path + "' lacks __count column");
    }

    while (std::getline(in, line)) {
        line = csv::strip_cr(line);
        if (line.empty()) continue;
        auto fields = csv::split_line(line, ',');
        if (fields.size() != header.size()) {
            throw ParseError("dataset: ragged row in '" + path + "'");
        }
        std::vector<int> row(ds.columns.size());
        for (std::size_t c = 0; c < ds.columns.size(); ++c) {
            if (fields[c].empty()) {
                row[c] = kMissing;
                continue;
            }
            int idx = schema.state_index(ds.columns[c], fields[c]);
            if (idx < 0) {
                throw ParseError("dataset: '" + path + "': state '" + fields[c] +
                                 "' not declared for attribute '" + ds.columns[c] + "'");
            }
            row[c] = idx;
        }
        if (ds.kind == SourceKind::Micro) {
            ds.records.push_back(std::move(row));
            if (has_weight) ds.weights.push_back(std::stod(fields.back()));
        } else {
            double cnt = std::stod(fields.back());
            ds.combos.push_back(std::move(row));
            ds.counts.push_back(cnt);
        }
    }
    return ds;
}

}  // namespace popsynth
