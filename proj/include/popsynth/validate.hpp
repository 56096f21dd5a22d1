#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "popsynth/dataset.hpp"

namespace popsynth {

// ordinal = true: 1-Wasserstein with unit spacing (sum of absolute CDF
// differences); ordinal = false: total variation.
double marginal_distance(std::span<const double> p, std::span<const double> q, bool ordinal);

// Standardized RMSE over an M-cell combination space; combinations absent
// from a table count as frequency 0.
double srmse(const FrequencyTable& p, const FrequencyTable& q, std::size_t cell_count);

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::optional<double> pearson_r;  // unset when the reference is degenerate
    std::size_t points = 0;
};

// Least-squares fit of synthetic frequencies (y) on reference frequencies
// (x) over the union of observed combinations, zero-filled.
RegressionFit regression_fit(const FrequencyTable& synth_freq, const FrequencyTable& ref_freq);

struct MarginalEntry {
    std::string attribute;
    std::string reference;
    std::string metric;  // "wasserstein" or "total-variation"
    double distance = 0.0;
};

struct JointEntry {
    std::vector<std::string> attributes;
    std::string reference;
    double srmse = 0.0;
    RegressionFit fit;
};

struct ValidationReport {
    std::vector<MarginalEntry> marginals;
    std::vector<JointEntry> joints;
    std::size_t synthetic_size = 0;
    std::vector<std::string> reference_ids;
};

// Marginal distances per shared attribute against each reference plus
// SRMSE/regression per requested joint set. A joint set is evaluated against
// the first reference (in the given order) containing all its attributes.
ValidationReport validate_population(const PreparedDataset& synthetic,
                                     const std::vector<PreparedDataset>& references,
                                     const Schema& schema,
                                     const std::vector<std::vector<std::string>>& joint_sets);

void save_report_json(const ValidationReport& report, const std::string& path);
void save_report_csv(const ValidationReport& report, const std::string& path);

// (reference frequency, synthetic frequency) pairs for external plotting.
void save_regression_scatter(const PreparedDataset& synthetic, const PreparedDataset& reference,
                             const std::vector<std::string>& attrs, const std::string& path);

}  // namespace popsynth
