// Regenerates the bundled example scenarios under data/. The outputs are
// committed; rerun after changing the generating networks.
//
//   make_demo_data <repo-root>
//
// data/toy:           3 micro sources sharing core {A}; ground truth
//                     A->B, A->C, A->D (also saved as ground_truth_model.json).
// data/barcelona_demo: 5-source stand-in shaped like the Barcelona scenario
//                     (1 macro + 4 micro, shared core District/Gender/Age/
//                     Nationality) over the built-in schema.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "popsynth/bayesnet.hpp"
#include "popsynth/learn.hpp"
#include "popsynth/rng.hpp"
#include "popsynth/schema.hpp"

using namespace popsynth;
namespace fs = std::filesystem;

namespace {

void write_micro_csv(const std::string& path, const BayesianNetwork& net,
                     const std::vector<std::string>& columns, std::size_t n, std::uint64_t seed,
                     double missing_rate = 0.0, std::uint64_t missing_seed = 1) {
    auto rows = net.sample(n, seed);
    std::vector<int> cols;
    for (const auto& c : columns) cols.push_back(net.node_index(c));
    SplitMix64 miss(missing_seed);
    std::ofstream out(path);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) out << ',';
        out << columns[c];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out << ',';
            if (missing_rate > 0.0 && miss.next_double() < missing_rate) {
                out << "NA";
            } else {
                out << net.nodes()[cols[c]].states[row[cols[c]]];
            }
        }
        out << '\n';
    }
}

void write_macro_csv(const std::string& path, const BayesianNetwork& net,
                     const std::vector<std::string>& columns, std::size_t population,
                     std::uint64_t seed) {
    auto rows = net.sample(population, seed);
    std::vector<int> cols;
    for (const auto& c : columns) cols.push_back(net.node_index(c));
    std::map<std::vector<int>, long> counts;
    for (const auto& row : rows) {
        std::vector<int> key(cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) key[c] = row[cols[c]];
        ++counts[key];
    }
    std::ofstream out(path);
    for (const auto& c : columns) out << c << ',';
    out << "count\n";
    for (const auto& [key, count] : counts) {
        for (std::size_t c = 0; c < key.size(); ++c) {
            out << net.nodes()[cols[c]].states[key[c]] << ',';
        }
        out << count << '\n';
    }
}

BayesianNetwork toy_ground_truth() {
    std::vector<NodeDef> nodes = {{"A", {"a0", "a1", "a2"}},
                                  {"B", {"b0", "b1"}},
                                  {"C", {"c0", "c1", "c2"}},
                                  {"D", {"d0", "d1"}}};
    NetworkStructure g({"A", "B", "C", "D"});
    g.add_edge(0, 1);
    g.add_edge(0, 2);
    g.add_edge(0, 3);
    ParameterSet params(4);
    params[0] = {{}, {}, 3, {0.5, 0.3, 0.2}};
    params[1] = {{0}, {3}, 2, {0.9, 0.1, 0.2, 0.8, 0.6, 0.4}};
    params[2] = {{0}, {3}, 3, {0.7, 0.2, 0.1, 0.1, 0.8, 0.1, 0.2, 0.2, 0.6}};
    params[3] = {{0}, {3}, 2, {0.15, 0.85, 0.75, 0.25, 0.5, 0.5}};
    return BayesianNetwork(std::move(nodes), std::move(g), std::move(params));
}

void make_toy(const fs::path& dir) {
    fs::create_directories(dir);
    auto truth = toy_ground_truth();
    save_model(truth, (dir / "ground_truth_model.json").string());
    write_micro_csv((dir / "ds_rich.csv").string(), truth, {"A", "B"}, 50'000, 11);
    write_micro_csv((dir / "ds2.csv").string(), truth, {"A", "C"}, 50'000, 12);
    write_micro_csv((dir / "ds3.csv").string(), truth, {"A", "D"}, 50'000, 13);
    std::cout << "wrote " << dir << "\n";
}

// Ground-truth network for the Barcelona-shaped stand-in: crafted shape,
// every non-core attribute hanging off one or two core attributes with
// seeded pseudo-random rows.
BayesianNetwork barcelona_ground_truth(const Schema& schema) {
    std::vector<std::string> names;
    for (const auto& a : schema.attributes()) names.push_back(a.name);
    auto nodes = nodes_from_schema(schema, names);
    NetworkStructure g(names);

    const int district = g.node_index("District");
    const int age = g.node_index("Age");
    const int gender = g.node_index("Gender");
    const int nationality = g.node_index("Nationality");
    g.add_edge(district, age);
    g.add_edge(district, nationality);
    g.add_edge(age, gender);

    for (int v = 0; v < g.node_count(); ++v) {
        if (v == district || v == age || v == gender || v == nationality) continue;
        g.add_edge(age, v);
        g.add_edge(district, v);
    }

    SplitMix64 rng(777);
    ParameterSet params(names.size());
    for (int v = 0; v < g.node_count(); ++v) {
        Cpt c;
        c.parents = g.parents(v);
        std::size_t configs = 1;
        for (int p : c.parents) {
            c.parent_cards.push_back(static_cast<int>(nodes[p].states.size()));
            configs *= nodes[p].states.size();
        }
        c.cardinality = static_cast<int>(nodes[v].states.size());
        c.table.resize(configs * c.cardinality);
        for (std::size_t cfg = 0; cfg < configs; ++cfg) {
            double total = 0.0;
            for (int k = 0; k < c.cardinality; ++k) {
                double x = 0.15 + rng.next_double();
                c.table[cfg * c.cardinality + k] = x;
                total += x;
            }
            for (int k = 0; k < c.cardinality; ++k) c.table[cfg * c.cardinality + k] /= total;
        }
        params[v] = std::move(c);
    }
    return BayesianNetwork(std::move(nodes), std::move(g), std::move(params));
}

void make_barcelona(const fs::path& dir) {
    fs::create_directories(dir);
    auto schema = default_barcelona_schema();
    auto truth = barcelona_ground_truth(schema);
    write_macro_csv((dir / "ds1_opendata.csv").string(), truth,
                    schema.source("ds1").attributes, 200'000, 21);
    write_micro_csv((dir / "ds2_ipums.csv").string(), truth, schema.source("ds2").attributes,
                    5'000, 22);
    write_micro_csv((dir / "ds3_panel.csv").string(), truth, schema.source("ds3").attributes,
                    1'500, 23);
    write_micro_csv((dir / "ds4_bcn_values.csv").string(), truth, schema.source("ds4").attributes,
                    1'300, 24, 0.02, 99);
    write_micro_csv((dir / "ds5_cat_values.csv").string(), truth, schema.source("ds5").attributes,
                    3'100, 25);
    std::cout << "wrote " << dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    fs::path root = argc > 1 ? argv[1] : ".";
    make_toy(root / "data" / "toy");
    make_barcelona(root / "data" / "barcelona_demo");
    return 0;
}
