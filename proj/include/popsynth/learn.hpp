#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popsynth/bayesnet.hpp"
#include "popsynth/dataset.hpp"

namespace popsynth {

struct LearnConfig {
    double smoothing_alpha = 1.0;  // pseudo-count for sampled CPTs
    double em_tolerance = 1e-6;    // log-likelihood delta
    int em_max_iters = 100;
    double hc_epsilon = 1e-9;  // minimum score gain per move
    int hc_max_iters = 1000;
    std::uint64_t seed = 0;
    std::size_t em_completion_cap = 100'000;  // completions enumerated per record

    void validate() const;
};

std::vector<NodeDef> nodes_from_schema(const Schema& schema, const std::vector<std::string>& names);

// Weighted maximum-likelihood CPTs with Laplace-style smoothing:
// (count + alpha) / (parent count + alpha * |states|). Zero-count parent
// configurations with alpha = 0 fall back to the uniform row.
ParameterSet fit_mle(const NetworkStructure& structure, const std::vector<NodeDef>& nodes,
                     const PreparedDataset& ds, const LearnConfig& config);

struct EmResult {
    ParameterSet params;
    std::vector<double> loglik_trace;  // observed-data log-likelihood per E-step
    int iterations = 0;
};

// EM over micro data with missing cells. The E-step enumerates each record's
// missing-variable completions exactly; the M-step is the smoothed MLE
// update. Stops when the observed-data log-likelihood improves by less than
// em_tolerance or after em_max_iters.
EmResult fit_em(const NetworkStructure& structure, const std::vector<NodeDef>& nodes,
                const PreparedDataset& ds, const LearnConfig& config);

// Decomposable BIC: per-family log-likelihood at the (unsmoothed) MLE minus
// (log N_eff / 2) * free parameters, N_eff the total record weight.
double bic_score(const NetworkStructure& structure, const std::vector<NodeDef>& nodes,
                 const PreparedDataset& ds);

double family_bic(int child, const std::vector<int>& parents, const std::vector<NodeDef>& nodes,
                  const PreparedDataset& ds);

struct EdgeConstraints {
    std::vector<std::pair<std::string, std::string>> required;
    std::vector<std::pair<std::string, std::string>> forbidden;
};

// Greedy add/delete/reverse search over BIC starting from the graph holding
// exactly the required edges. Deterministic: the best move is tie-broken by
// (kind: add < delete < reverse, then source name, then target name).
NetworkStructure hill_climb(const PreparedDataset& ds, const std::vector<NodeDef>& nodes,
                            const EdgeConstraints& constraints, const LearnConfig& config);

}  // namespace popsynth
