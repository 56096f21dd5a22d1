#include "popsynth/validate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "popsynth/errors.hpp"

namespace popsynth {

using nlohmann::ordered_json;

namespace {

void check_normalized(std::span<const double> p, const char* which) {
    double sum = 0.0;
    for (double x : p) {
        if (x < 0.0) throw ValidationError(std::string("marginal_distance: negative entry in ") + which);
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw ValidationError(std::string("marginal_distance: ") + which + " sums to " +
                              std::to_string(sum));
    }
}

std::map<std::vector<int>, double> as_map(const FrequencyTable& t) {
    std::map<std::vector<int>, double> m;
    for (std::size_t i = 0; i < t.combos.size(); ++i) m[t.combos[i]] += t.values[i];
    return m;
}

}  // namespace

double marginal_distance(std::span<const double> p, std::span<const double> q, bool ordinal) {
    if (p.size() != q.size() || p.empty()) {
        throw ValidationError("marginal_distance: mismatched state sets");
    }
    check_normalized(p, "p");
    check_normalized(q, "q");
    double d = 0.0;
    if (ordinal) {
        double cdf_diff = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            cdf_diff += p[k] - q[k];
            d += std::abs(cdf_diff);
        }
    } else {
        for (std::size_t k = 0; k < p.size(); ++k) d += std::abs(p[k] - q[k]);
        d *= 0.5;
    }
    return d;
}

double srmse(const FrequencyTable& p, const FrequencyTable& q, std::size_t cell_count) {
    if (cell_count == 0) throw ValidationError("srmse: zero cell count");
    auto pm = as_map(p);
    auto qm = as_map(q);
    double q_total = 0.0;
    for (const auto& [combo, v] : qm) q_total += v;
    if (q_total <= 0.0) throw ValidationError("srmse: reference table is all-zero");

    double sq = 0.0;
    for (const auto& [combo, pv] : pm) {
        auto it = qm.find(combo);
        double qv = it == qm.end() ? 0.0 : it->second;
        sq += (pv - qv) * (pv - qv);
    }
    for (const auto& [combo, qv] : qm) {
        if (!pm.count(combo)) sq += qv * qv;
    }
    double m = static_cast<double>(cell_count);
    return std::sqrt(sq / m) / (q_total / m);
}

RegressionFit regression_fit(const FrequencyTable& synth_freq, const FrequencyTable& ref_freq) {
    auto sm = as_map(synth_freq);
    auto rm = as_map(ref_freq);
    std::map<std::vector<int>, std::pair<double, double>> points;  // combo -> (x=ref, y=synth)
    for (const auto& [combo, v] : rm) points[combo].first = v;
    for (const auto& [combo, v] : sm) points[combo].second = v;
    if (points.size() < 2) {
        throw ValidationError("regression_fit: needs at least 2 distinct combinations");
    }

    RegressionFit fit;
    fit.points = points.size();
    double n = static_cast<double>(points.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (const auto& [combo, xy] : points) {
        sx += xy.first;
        sy += xy.second;
        sxx += xy.first * xy.first;
        syy += xy.second * xy.second;
        sxy += xy.first * xy.second;
    }
    double var_x = sxx - sx * sx / n;
    double var_y = syy - sy * sy / n;
    double cov = sxy - sx * sy / n;
    if (var_x <= 0.0) {
        // degenerate reference: slope/intercept undefined, r flagged
        fit.slope = 0.0;
        fit.intercept = sy / n;
        fit.pearson_r = std::nullopt;
        return fit;
    }
    fit.slope = cov / var_x;
    fit.intercept = (sy - fit.slope * sx) / n;
    if (var_y <= 0.0) {
        fit.pearson_r = std::nullopt;
    } else {
        fit.pearson_r = cov / std::sqrt(var_x * var_y);
    }
    return fit;
}

ValidationReport validate_population(const PreparedDataset& synthetic,
                                     const std::vector<PreparedDataset>& references,
                                     const Schema& schema,
                                     const std::vector<std::vector<std::string>>& joint_sets) {
    ValidationReport report;
    report.synthetic_size = synthetic.records.size();
    for (const auto& ref : references) report.reference_ids.push_back(ref.source_id);

    for (const auto& ref : references) {
        std::vector<std::string> shared;
        for (const auto& col : ref.columns) {
            if (synthetic.has_column(col)) shared.push_back(col);
        }
        std::sort(shared.begin(), shared.end());
        for (const auto& attr : shared) {
            const auto& def = schema.attribute(attr);
            auto pf = empirical_frequencies(synthetic, {attr});
            auto qf = empirical_frequencies(ref, {attr});
            // densify over the declared state set
            std::vector<double> p(def.states.size(), 0.0), q(def.states.size(), 0.0);
            for (std::size_t i = 0; i < pf.combos.size(); ++i) p[pf.combos[i][0]] = pf.values[i];
            for (std::size_t i = 0; i < qf.combos.size(); ++i) q[qf.combos[i][0]] = qf.values[i];
            MarginalEntry e;
            e.attribute = attr;
            e.reference = ref.source_id;
            e.metric = def.ordinal ? "wasserstein" : "total-variation";
            e.distance = marginal_distance(p, q, def.ordinal);
            report.marginals.push_back(std::move(e));
        }
    }

    for (const auto& set : joint_sets) {
        if (set.empty()) throw ValidationError("validate_population: empty joint set");
        const PreparedDataset* ref = nullptr;
        for (const auto& candidate : references) {
            bool has_all = std::all_of(set.begin(), set.end(), [&](const std::string& a) {
                return candidate.has_column(a);
            });
            if (has_all) {
                ref = &candidate;
                break;
            }
        }
        if (!ref) {
            std::string names;
            for (const auto& a : set) names += (names.empty() ? "" : ", ") + a;
            throw ValidationError("validate_population: no reference covers joint set {" + names +
                                  "}");
        }
        for (const auto& a : set) {
            if (!synthetic.has_column(a)) {
                throw ValidationError("validate_population: synthetic data lacks attribute '" + a +
                                      "'");
            }
        }
        std::size_t cells = 1;
        for (const auto& a : set) cells *= schema.attribute(a).states.size();
        JointEntry e;
        e.attributes = set;
        e.reference = ref->source_id;
        auto pf = empirical_frequencies(synthetic, set);
        auto qf = empirical_frequencies(*ref, set);
        e.srmse = srmse(pf, qf, cells);
        e.fit = regression_fit(pf, qf);
        report.joints.push_back(std::move(e));
    }
    return report;
}

void save_report_json(const ValidationReport& report, const std::string& path) {
    ordered_json j;
    j["synthetic_size"] = report.synthetic_size;
    j["references"] = report.reference_ids;
    j["marginals"] = ordered_json::array();
    for (const auto& m : report.marginals) {
        j["marginals"].push_back({{"attribute", m.attribute},
                                  {"reference", m.reference},
                                  {"metric", m.metric},
                                  {"distance", m.distance}});
    }
    j["joints"] = ordered_json::array();
    for (const auto& e : report.joints) {
        ordered_json ej;
        ej["attributes"] = e.attributes;
        ej["reference"] = e.reference;
        ej["srmse"] = e.srmse;
        ej["slope"] = e.fit.slope;
        ej["intercept"] = e.fit.intercept;
        if (e.fit.pearson_r) {
            ej["pearson_r"] = *e.fit.pearson_r;
        } else {
            ej["pearson_r_undefined"] = true;
        }
        ej["points"] = e.fit.points;
        j["joints"].push_back(ej);
    }
    std::ofstream out(path);
    if (!out) throw Error("report: cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

void save_report_csv(const ValidationReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("report: cannot write '" + path + "'");
    out << "kind,attributes,reference,metric,value\n";
    for (const auto& m : report.marginals) {
        out << "marginal," << m.attribute << ',' << m.reference << ',' << m.metric << ','
            << m.distance << '\n';
    }
    for (const auto& e : report.joints) {
        std::string attrs;
        for (const auto& a : e.attributes) attrs += (attrs.empty() ? "" : "|") + a;
        out << "joint," << attrs << ',' << e.reference << ",srmse," << e.srmse << '\n';
        out << "joint," << attrs << ',' << e.reference << ",slope," << e.fit.slope << '\n';
        out << "joint," << attrs << ',' << e.reference << ",intercept," << e.fit.intercept << '\n';
        if (e.fit.pearson_r) {
            out << "joint," << attrs << ',' << e.reference << ",pearson_r," << *e.fit.pearson_r
                << '\n';
        } else {
            out << "joint," << attrs << ',' << e.reference << ",pearson_r,undefined\n";
        }
    }
}

void save_regression_scatter(const PreparedDataset& synthetic, const PreparedDataset& reference,
                             const std::vector<std::string>& attrs, const std::string& path) {
    auto pf = empirical_frequencies(synthetic, attrs);
    auto qf = empirical_frequencies(reference, attrs);
    auto pm = as_map(pf);
    auto qm = as_map(qf);
    std::map<std::vector<int>, std::pair<double, double>> points;
    for (const auto& [combo, v] : qm) points[combo].first = v;
    for (const auto& [combo, v] : pm) points[combo].second = v;
    std::ofstream out(path);
    if (!out) throw Error("scatter: cannot write '" + path + "'");
    out << "reference_freq,synthetic_freq\n";
    for (const auto& [combo, xy] : points) {
        out << xy.first << ',' << xy.second << '\n';
    }
}

}  // namespace popsynth
