#include "popsynth/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "popsynth/errors.hpp"

namespace popsynth {

void LearnConfig::validate() const {
    if (smoothing_alpha < 0.0) throw ValidationError("learn config: smoothing_alpha must be >= 0");
    if (em_tolerance <= 0.0) throw ValidationError("learn config: em_tolerance must be > 0");
    if (em_max_iters <= 0) throw ValidationError("learn config: em_max_iters must be > 0");
    if (hc_epsilon <= 0.0) throw ValidationError("learn config: hc_epsilon must be > 0");
    if (hc_max_iters <= 0) throw ValidationError("learn config: hc_max_iters must be > 0");
    if (em_completion_cap == 0) throw ValidationError("learn config: em_completion_cap must be > 0");
}

std::vector<NodeDef> nodes_from_schema(const Schema& schema,
                                       const std::vector<std::string>& names) {
    std::vector<NodeDef> nodes;
    for (const auto& name : names) nodes.push_back({name, schema.attribute(name).states});
    return nodes;
}

namespace {

// Column of each structure node inside the dataset.
std::vector<std::size_t> node_columns(const std::vector<NodeDef>& nodes,
                                      const PreparedDataset& ds) {
    std::vector<std::size_t> cols;
    for (const auto& n : nodes) cols.push_back(ds.column_index(n.name));
    return cols;
}

void require_micro_complete(const PreparedDataset& ds, const std::vector<NodeDef>& nodes,
                            const std::vector<std::size_t>& cols, const char* op) {
    if (ds.kind != SourceKind::Micro) {
        throw ValidationError(std::string(op) + ": needs micro data, got macro source '" +
                              ds.source_id + "'");
    }
    if (ds.records.empty()) throw ValidationError(std::string(op) + ": empty dataset");
    for (const auto& rec : ds.records) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (rec[cols[i]] == kMissing) {
                throw ValidationError(std::string(op) + ": missing value in attribute '" +
                                      nodes[i].name + "'");
            }
        }
    }
}

// Weighted family counts: configs x child states, parents in given order,
// last parent fastest. Records with a missing cell in the family carry no
// count (used by available-case EM initialization).
struct FamilyCounts {
    std::size_t configs = 1;
    int card = 0;
    std::vector<double> n;  // configs * card

    double row_total(std::size_t cfg) const {
        double t = 0.0;
        for (int k = 0; k < card; ++k) t += n[cfg * card + k];
        return t;
    }
};

FamilyCounts count_family(int child, const std::vector<int>& parents,
                          const std::vector<NodeDef>& nodes, const PreparedDataset& ds,
                          const std::vector<std::size_t>& cols) {
    FamilyCounts fc;
    fc.card = static_cast<int>(nodes[child].states.size());
    for (int p : parents) fc.configs *= nodes[p].states.size();
    fc.n.assign(fc.configs * fc.card, 0.0);
    for (std::size_t r = 0; r < ds.records.size(); ++r) {
        const auto& rec = ds.records[r];
        int k = rec[cols[child]];
        if (k == kMissing) continue;
        std::size_t cfg = 0;
        bool skip = false;
        for (int p : parents) {
            int s = rec[cols[p]];
            if (s == kMissing) {
                skip = true;
                break;
            }
            cfg = cfg * nodes[p].states.size() + static_cast<std::size_t>(s);
        }
        if (skip) continue;
        fc.n[cfg * fc.card + k] += ds.weight(r);
    }
    return fc;
}

Cpt cpt_from_counts(int child, const std::vector<int>& parents,
                    const std::vector<NodeDef>& nodes, const FamilyCounts& fc, double alpha) {
    Cpt c;
    c.parents = parents;
    for (int p : parents) c.parent_cards.push_back(static_cast<int>(nodes[p].states.size()));
    c.cardinality = fc.card;
    c.table.resize(fc.n.size());
    for (std::size_t cfg = 0; cfg < fc.configs; ++cfg) {
        double denom = fc.row_total(cfg) + alpha * fc.card;
        if (denom <= 0.0) {
            for (int k = 0; k < fc.card; ++k) c.table[cfg * fc.card + k] = 1.0 / fc.card;
        } else {
            for (int k = 0; k < fc.card; ++k) {
                c.table[cfg * fc.card + k] = (fc.n[cfg * fc.card + k] + alpha) / denom;
            }
        }
    }
    return c;
}

}  // namespace

ParameterSet fit_mle(const NetworkStructure& structure, const std::vector<NodeDef>& nodes,
                     const PreparedDataset& ds, const LearnConfig& config) {
    config.validate();
    auto cols = node_columns(nodes, ds);
    require_micro_complete(ds, nodes, cols, "fit_mle");

    ParameterSet params(nodes.size());
    for (int v = 0; v < structure.node_count(); ++v) {
        const auto& parents = structure.parents(v);
        auto fc = count_family(v, parents, nodes, ds, cols);
        params[v] = cpt_from_counts(v, parents, nodes, fc, config.smoothing_alpha);
    }
    return params;
}

namespace {

double family_loglik_at_mle(const FamilyCounts& fc) {
    double ll = 0.0;
    for (std::size_t cfg = 0; cfg < fc.configs; ++cfg) {
        double total = fc.row_total(cfg);
        if (total <= 0.0) continue;
        for (int k = 0; k < fc.card; ++k) {
            double n = fc.n[cfg * fc.card + k];
            if (n > 0.0) ll += n * std::log(n / total);
        }
    }
    return ll;
}

}  // namespace

double family_bic(int child, const std::vector<int>& parents, const std::vector<NodeDef>& nodes,
                  const PreparedDataset& ds) {
    auto cols = node_columns(nodes, ds);
    require_micro_complete(ds, nodes, cols, "bic_score");
    auto fc = count_family(child, parents, nodes, ds, cols);
    double n_eff = ds.total_weight();
    double free_params = static_cast<double>(fc.configs) * (fc.card - 1);
    return family_loglik_at_mle(fc) - 0.5 * std::log(n_eff) * free_params;
}

double bic_score(const NetworkStructure& structure, const std::vector<NodeDef>& nodes,
                 const PreparedDataset& ds) {
    double score = 0.0;
    for (int v = 0; v < structure.node_count(); ++v) {
        score += family_bic(v, structure.parents(v), nodes, ds);
    }
    return score;
}

EmResult fit_em(const NetworkStructure& structure, const std::vector<NodeDef>& nodes,
                const PreparedDataset& ds, const LearnConfig& config) {
    config.validate();
    if (ds.kind != SourceKind::Micro) throw ValidationError("fit_em: needs micro data");
    if (ds.records.empty()) throw ValidationError("fit_em: empty dataset");
    auto cols = node_columns(nodes, ds);

    // Per-record missing-variable sets; validate preconditions up front.
    std::vector<std::vector<int>> missing_vars(ds.records.size());
    for (std::size_t r = 0; r < ds.records.size(); ++r) {
        std::size_t completions = 1;
        for (std::size_t v = 0; v < nodes.size(); ++v) {
            if (ds.records[r][cols[v]] == kMissing) {
                missing_vars[r].push_back(static_cast<int>(v));
                completions *= nodes[v].states.size();
                if (completions > config.em_completion_cap) {
                    throw ValidationError(
                        "fit_em: record " + std::to_string(r) + " needs more than " +
                        std::to_string(config.em_completion_cap) + " completions");
                }
            }
        }
        if (missing_vars[r].size() == nodes.size()) {
            throw ValidationError("fit_em: record " + std::to_string(r) +
                                  " observes no variable");
        }
    }

    // Deterministic initialization: available-case smoothed MLE.
    ParameterSet params(nodes.size());
    for (int v = 0; v < structure.node_count(); ++v) {
        const auto& parents = structure.parents(v);
        auto fc = count_family(v, parents, nodes, ds, cols);
        double init_alpha = config.smoothing_alpha > 0.0 ? config.smoothing_alpha : 1.0;
        params[v] = cpt_from_counts(v, parents, nodes, fc, init_alpha);
    }

    EmResult result;
    double prev_ll = -std::numeric_limits<double>::infinity();
    std::vector<int> assignment(nodes.size());

    for (int iter = 0; iter < config.em_max_iters; ++iter) {
        // E-step: expected family counts under current params.
        std::vector<FamilyCounts> counts(nodes.size());
        for (int v = 0; v < structure.node_count(); ++v) {
            counts[v].card = static_cast<int>(nodes[v].states.size());
            counts[v].configs = 1;
            for (int p : structure.parents(v)) counts[v].configs *= nodes[p].states.size();
            counts[v].n.assign(counts[v].configs * counts[v].card, 0.0);
        }
        auto accumulate = [&](double w) {
            for (int v = 0; v < structure.node_count(); ++v) {
                const Cpt& c = params[v];
                std::size_t cfg = c.config_index(assignment);
                counts[v].n[cfg * counts[v].card + assignment[v]] += w;
            }
        };

        double ll = 0.0;
        for (std::size_t r = 0; r < ds.records.size(); ++r) {
            const auto& rec = ds.records[r];
            for (std::size_t v = 0; v < nodes.size(); ++v) assignment[v] = rec[cols[v]];
            const auto& mv = missing_vars[r];
            double w = ds.weight(r);
            if (mv.empty()) {
                double p = 1.0;
                for (int v = 0; v < structure.node_count(); ++v) {
                    const Cpt& c = params[v];
                    p *= c.table[c.config_index(assignment) * c.cardinality + assignment[v]];
                }
                ll += w * std::log(p);
                accumulate(w);
                continue;
            }
            // Enumerate completions; joint per completion, then normalize.
            std::size_t n_completions = 1;
            for (int v : mv) n_completions *= nodes[v].states.size();
            std::vector<double> joint(n_completions);
            for (int v : mv) assignment[v] = 0;
            double total = 0.0;
            for (std::size_t c_idx = 0; c_idx < n_completions; ++c_idx) {
                double p = 1.0;
                for (int v = 0; v < structure.node_count(); ++v) {
                    const Cpt& c = params[v];
                    p *= c.table[c.config_index(assignment) * c.cardinality + assignment[v]];
                }
                joint[c_idx] = p;
                total += p;
                for (int i = static_cast<int>(mv.size()) - 1; i >= 0; --i) {
                    if (++assignment[mv[i]] < static_cast<int>(nodes[mv[i]].states.size())) break;
                    assignment[mv[i]] = 0;
                }
            }
            if (total <= 0.0) {
                throw ValidationError("fit_em: record " + std::to_string(r) +
                                      " has zero likelihood under current parameters");
            }
            ll += w * std::log(total);
            for (int v : mv) assignment[v] = 0;
            for (std::size_t c_idx = 0; c_idx < n_completions; ++c_idx) {
                accumulate(w * joint[c_idx] / total);
                for (int i = static_cast<int>(mv.size()) - 1; i >= 0; --i) {
                    if (++assignment[mv[i]] < static_cast<int>(nodes[mv[i]].states.size())) break;
                    assignment[mv[i]] = 0;
                }
            }
        }

        // M-step.
        for (int v = 0; v < structure.node_count(); ++v) {
            params[v] =
                cpt_from_counts(v, structure.parents(v), nodes, counts[v], config.smoothing_alpha);
        }
        result.loglik_trace.push_back(ll);
        result.iterations = iter + 1;
        if (iter > 0 && ll - prev_ll < config.em_tolerance) break;
        prev_ll = ll;
    }

    result.params = std::move(params);
    return result;
}

namespace {

enum class MoveKind { Add = 0, Delete = 1, Reverse = 2 };

struct Move {
    MoveKind kind;
    int source;
    int target;
};

// Family-score cache keyed by (child, parent set).
struct ScoreCache {
    std::map<std::pair<int, std::vector<int>>, double> cache;
    const std::vector<NodeDef>* nodes;
    const PreparedDataset* ds;

    double get(int child, std::vector<int> parents) {
        std::sort(parents.begin(), parents.end());
        auto key = std::make_pair(child, parents);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        double s = family_bic(child, key.second, *nodes, *ds);
        cache.emplace(std::move(key), s);
        return s;
    }
};

std::vector<int> with_parent(const std::vector<int>& parents, int add) {
    auto out = parents;
    out.push_back(add);
    return out;
}

std::vector<int> without_parent(const std::vector<int>& parents, int remove) {
    std::vector<int> out;
    for (int p : parents) {
        if (p != remove) out.push_back(p);
    }
    return out;
}

}  // namespace

NetworkStructure hill_climb(const PreparedDataset& ds, const std::vector<NodeDef>& nodes,
                            const EdgeConstraints& constraints, const LearnConfig& config) {
    config.validate();
    std::vector<std::string> names;
    for (const auto& n : nodes) names.push_back(n.name);
    NetworkStructure g(names);

    for (const auto& [u, v] : constraints.forbidden) g.forbid_edge(g.node_index(u), g.node_index(v));
    for (const auto& [u, v] : constraints.required) g.require_edge(g.node_index(u), g.node_index(v));

    auto cols = node_columns(nodes, ds);
    require_micro_complete(ds, nodes, cols, "hill_climb");

    ScoreCache scores{{}, &nodes, &ds};
    const int n = g.node_count();

    for (int iter = 0; iter < config.hc_max_iters; ++iter) {
        double best_gain = 0.0;
        bool have_move = false;
        Move best{};

        auto consider = [&](Move m, double gain) {
            if (gain <= config.hc_epsilon) return;
            if (have_move && gain < best_gain) return;
            if (have_move && gain == best_gain) {
                auto rank = [&](const Move& mv) {
                    return std::make_tuple(static_cast<int>(mv.kind), names[mv.source],
                                           names[mv.target]);
                };
                if (rank(m) >= rank(best)) return;
            }
            best = m;
            best_gain = gain;
            have_move = true;
        };

        for (int u = 0; u < n; ++u) {
            for (int v = 0; v < n; ++v) {
                if (u == v) continue;
                if (!g.has_edge(u, v)) {
                    // add
                    if (g.is_forbidden(u, v) || g.would_create_cycle(u, v)) continue;
                    double gain = scores.get(v, with_parent(g.parents(v), u)) -
                                  scores.get(v, g.parents(v));
                    consider({MoveKind::Add, u, v}, gain);
                } else {
                    if (!g.is_required(u, v)) {
                        // delete
                        double gain = scores.get(v, without_parent(g.parents(v), u)) -
                                      scores.get(v, g.parents(v));
                        consider({MoveKind::Delete, u, v}, gain);
                        // reverse: legal iff no forbidden v->u and no alternate u..v path
                        if (!g.is_forbidden(v, u)) {
                            NetworkStructure& mut = g;
                            mut.remove_edge(u, v);
                            bool acyclic = !mut.would_create_cycle(v, u);
                            mut.add_edge(u, v);
                            if (acyclic) {
                                double gain_rev =
                                    scores.get(v, without_parent(g.parents(v), u)) +
                                    scores.get(u, with_parent(g.parents(u), v)) -
                                    scores.get(v, g.parents(v)) - scores.get(u, g.parents(u));
                                consider({MoveKind::Reverse, u, v}, gain_rev);
                            }
                        }
                    }
                }
            }
        }

        if (!have_move) break;
        switch (best.kind) {
            case MoveKind::Add: g.add_edge(best.source, best.target); break;
            case MoveKind::Delete: g.remove_edge(best.source, best.target); break;
            case MoveKind::Reverse: g.reverse_edge(best.source, best.target); break;
        }
    }
    return g;
}

}  // namespace popsynth
