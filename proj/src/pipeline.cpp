#include "popsynth/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "csv.hpp"
#include "popsynth/errors.hpp"
#include "popsynth/hash.hpp"

namespace popsynth {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

Stage stage_from_string(const std::string& s) {
    if (s == "all" || s == "run") return Stage::All;
    if (s == "ingest") return Stage::Ingest;
    if (s == "merge") return Stage::Merge;
    if (s == "sample") return Stage::Sample;
    if (s == "validate") return Stage::Validate;
    throw ConfigError("unknown stage: '" + s + "'");
}

namespace {

std::string resolve_path(const std::string& base_config, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return p;
    return (fs::path(base_config).parent_path() / path).string();
}

HarmonizationMap harmonization_from_json(const ordered_json& j) {
    HarmonizationMap map;
    map.missing_token = j.value("missing_token", std::string("NA"));
    std::string delim = j.value("delimiter", std::string(","));
    if (delim.size() != 1) throw ConfigError("config: delimiter must be a single character");
    map.delimiter = delim[0];
    if (j.contains("harmonization")) {
        for (const auto& [attr, rj] : j.at("harmonization").items()) {
            HarmonizationRule rule;
            if (rj.contains("map")) {
                for (const auto& [raw, state] : rj.at("map").items()) {
                    rule.to_state[raw] = state.get<std::string>();
                }
            }
            for (const auto& tok : rj.value("missing", std::vector<std::string>{})) {
                rule.special[tok] = true;
            }
            for (const auto& tok : rj.value("drop", std::vector<std::string>{})) {
                rule.special[tok] = false;
            }
            map.rules[attr] = std::move(rule);
        }
    }
    return map;
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: malformed file '" + path + "': " + e.what());
    }

    PipelineConfig cfg;
    cfg.config_path = path;
    try {
        cfg.schema_path = j.at("schema").get<std::string>();
        if (cfg.schema_path.rfind("builtin:", 0) != 0) {
            cfg.schema_path = resolve_path(path, cfg.schema_path);
        }
        cfg.out_dir = resolve_path(path, j.value("out_dir", std::string("out")));
        for (const auto& sj : j.at("sources")) {
            SourceConfig sc;
            sc.id = sj.at("id").get<std::string>();
            sc.path = resolve_path(path, sj.at("path").get<std::string>());
            sc.missing_policy = missing_policy_from_string(
                sj.value("missing_policy", std::string("listwise-delete")));
            sc.harmonization = harmonization_from_json(sj);
            sc.count_column = sj.value("count_column", std::string("count"));
            cfg.sources.push_back(std::move(sc));
        }
        if (j.contains("merge")) {
            const auto& mj = j.at("merge");
            cfg.merge.richest = mj.value("richest", std::string{});
            cfg.merge.core = mj.value("core", std::vector<std::string>{});
            if (mj.contains("source_mode")) {
                for (const auto& [id, mode] : mj.at("source_mode").items()) {
                    cfg.merge.source_mode[id] = source_mode_from_string(mode.get<std::string>());
                }
            }
            if (mj.contains("parent_policy")) {
                for (const auto& [attr, parents] : mj.at("parent_policy").items()) {
                    cfg.merge.parent_policy[attr] = parents.get<std::vector<std::string>>();
                }
            }
            for (const auto& e : mj.value("crafted_core_edges",
                                          std::vector<std::vector<std::string>>{})) {
                if (e.size() != 2) throw ConfigError("config: crafted_core_edges entries are pairs");
                cfg.merge.crafted_core_edges.emplace_back(e[0], e[1]);
            }
            cfg.merge.cpt_cell_cap = mj.value("cpt_cell_cap", cfg.merge.cpt_cell_cap);
        }
        if (j.contains("learn")) {
            const auto& lj = j.at("learn");
            cfg.learn.smoothing_alpha = lj.value("smoothing_alpha", cfg.learn.smoothing_alpha);
            cfg.learn.em_tolerance = lj.value("em_tolerance", cfg.learn.em_tolerance);
            cfg.learn.em_max_iters = lj.value("em_max_iters", cfg.learn.em_max_iters);
            cfg.learn.hc_epsilon = lj.value("hc_epsilon", cfg.learn.hc_epsilon);
            cfg.learn.hc_max_iters = lj.value("hc_max_iters", cfg.learn.hc_max_iters);
            cfg.learn.seed = lj.value("seed", cfg.learn.seed);
            cfg.learn.em_completion_cap =
                lj.value("em_completion_cap", cfg.learn.em_completion_cap);
        }
        if (j.contains("sample")) {
            const auto& sj = j.at("sample");
            cfg.sample.n = sj.value("n", cfg.sample.n);
            cfg.sample.seed = sj.value("seed", cfg.sample.seed);
            cfg.sample.threads = sj.value("threads", cfg.sample.threads);
            if (sj.contains("evidence")) {
                for (const auto& [attr, state] : sj.at("evidence").items()) {
                    cfg.sample.evidence[attr] = state.get<std::string>();
                }
            }
        }
        if (j.contains("validate")) {
            const auto& vj = j.at("validate");
            cfg.validate.joint_sets =
                vj.value("joint_sets", std::vector<std::vector<std::string>>{});
            cfg.validate.references = vj.value("references", std::vector<std::string>{});
            cfg.validate.joint_cell_cap = vj.value("joint_cell_cap", cfg.validate.joint_cell_cap);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: malformed file '" + path + "': " + e.what());
    }
    return cfg;
}

Schema load_config_schema(const PipelineConfig& config) {
    if (config.schema_path == "builtin:barcelona") return default_barcelona_schema();
    if (config.schema_path.rfind("builtin:", 0) == 0) {
        throw ConfigError("config: unknown builtin schema '" + config.schema_path + "'");
    }
    return load_schema(config.schema_path);
}

namespace {

std::string prepared_path(const PipelineConfig& cfg, const std::string& id) {
    return (fs::path(cfg.out_dir) / ("prepared_" + id + ".csv")).string();
}

std::string model_path(const PipelineConfig& cfg) {
    return (fs::path(cfg.out_dir) / "model.json").string();
}

std::string population_path(const PipelineConfig& cfg) {
    return (fs::path(cfg.out_dir) / "population.csv").string();
}

void cross_validate(const PipelineConfig& cfg, const Schema& schema) {
    for (const auto& sc : cfg.sources) {
        if (!schema.has_source(sc.id)) {
            throw ConfigError("config: source '" + sc.id + "' is not declared in the schema");
        }
        if (!fs::exists(sc.path)) {
            throw ConfigError("config: source file '" + sc.path + "' does not exist");
        }
    }
    for (const auto& ds : schema.sources()) {
        bool found = std::any_of(cfg.sources.begin(), cfg.sources.end(),
                                 [&](const SourceConfig& sc) { return sc.id == ds.id; });
        if (!found) {
            throw ConfigError("config: schema source '" + ds.id + "' has no configured file");
        }
    }
    for (const auto& [attr, state] : cfg.sample.evidence) {
        if (schema.state_index(attr, state) < 0) {
            throw ConfigError("config: evidence state '" + state + "' not declared for '" + attr +
                              "'");
        }
    }
    for (const auto& ref : cfg.validate.references) {
        if (!schema.has_source(ref)) {
            throw ConfigError("config: validation reference '" + ref + "' is not a schema source");
        }
    }
}

MergePlan effective_plan(const PipelineConfig& cfg, const Schema& schema) {
    MergePlan plan = cfg.merge;
    if (plan.core.empty()) plan.core = schema.core().core_attributes;
    if (plan.richest.empty()) plan.richest = schema.richest_source().id;
    return plan;
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream buf;
    buf << in.rdbuf();
    return hex64(fnv1a64(buf.str()));
}

void write_manifest(const PipelineConfig& cfg, const std::string& stage_name,
                    const StageOverrides& overrides, const SampleSpec& sample) {
    ordered_json j;
    j["tool"] = "popsynth 1.0";
    j["stage"] = stage_name;
    j["config_path"] = cfg.config_path;
    j["config_hash"] = file_hash(cfg.config_path);
    j["schema"] = cfg.schema_path;
    j["out_dir"] = cfg.out_dir;
    j["learn"] = {{"smoothing_alpha", cfg.learn.smoothing_alpha},
                  {"em_tolerance", cfg.learn.em_tolerance},
                  {"em_max_iters", cfg.learn.em_max_iters},
                  {"hc_epsilon", cfg.learn.hc_epsilon},
                  {"hc_max_iters", cfg.learn.hc_max_iters},
                  {"seed", cfg.learn.seed},
                  {"em_completion_cap", cfg.learn.em_completion_cap}};
    j["sample"] = {{"n", sample.n}, {"seed", sample.seed}, {"threads", sample.threads}};
    ordered_json ev = ordered_json::object();
    for (const auto& [k, v] : sample.evidence) ev[k] = v;
    j["sample"]["evidence"] = ev;
    j["overrides"] = {{"seed", overrides.seed ? ordered_json(*overrides.seed) : ordered_json()},
                      {"n", overrides.n ? ordered_json(*overrides.n) : ordered_json()}};
    std::ofstream out((fs::path(cfg.out_dir) / "manifest.json").string());
    out << j.dump(2) << '\n';
}

void stage_ingest(const PipelineConfig& cfg, const Schema& schema, std::ostream& log) {
    ordered_json stats = ordered_json::object();
    for (const auto& sc : cfg.sources) {
        const auto& desc = schema.source(sc.id);
        PreparedDataset ds =
            desc.kind == SourceKind::Micro
                ? ingest_micro(sc.path, desc, schema, sc.harmonization, sc.missing_policy)
                : ingest_macro(sc.path, desc, schema, sc.harmonization, sc.count_column);
        save_prepared(ds, schema, prepared_path(cfg, sc.id));
        stats[sc.id] = {{"rows_read", ds.stats.rows_read},
                        {"rows_dropped", ds.stats.rows_dropped},
                        {"cells_imputed", ds.stats.cells_imputed},
                        {"cells_missing", ds.stats.cells_missing}};
        log << "[ingest] " << sc.id << ": read " << ds.stats.rows_read << ", dropped "
            << ds.stats.rows_dropped << ", imputed " << ds.stats.cells_imputed << "\n";
    }
    std::ofstream out((fs::path(cfg.out_dir) / "ingest_report.json").string());
    out << stats.dump(2) << '\n';
}

std::vector<PreparedDataset> load_all_prepared(const PipelineConfig& cfg, const Schema& schema) {
    std::vector<PreparedDataset> datasets;
    for (const auto& sc : cfg.sources) {
        auto path = prepared_path(cfg, sc.id);
        if (!fs::exists(path)) {
            throw ConfigError("stage dependency missing: '" + path +
                              "' (run the ingest stage first)");
        }
        datasets.push_back(load_prepared(path, schema));
    }
    return datasets;
}

void stage_merge(const PipelineConfig& cfg, const Schema& schema, std::ostream& log) {
    auto datasets = load_all_prepared(cfg, schema);
    auto plan = effective_plan(cfg, schema);
    auto net = merge_sources(datasets, schema, plan, cfg.learn);
    save_model(net, model_path(cfg));
    log << "[merge] model with " << net.nodes().size() << " nodes, "
        << net.structure().edge_count() << " edges -> " << model_path(cfg) << "\n";
}

void stage_sample(const PipelineConfig& cfg, const Schema& schema, const SampleSpec& spec,
                  std::ostream& log) {
    if (!fs::exists(model_path(cfg))) {
        throw ConfigError("stage dependency missing: '" + model_path(cfg) +
                          "' (run the merge stage first)");
    }
    auto net = load_model(model_path(cfg));
    SampleOptions options;
    options.threads = spec.threads;
    for (const auto& [attr, state] : spec.evidence) {
        int idx = schema.state_index(attr, state);
        if (idx < 0) throw ConfigError("sample: evidence state '" + state + "' unknown");
        options.evidence[attr] = idx;
    }
    auto rows = net.sample(spec.n, spec.seed, options);

    std::ofstream out(population_path(cfg));
    if (!out) throw Error("sample: cannot write '" + population_path(cfg) + "'");
    for (std::size_t v = 0; v < net.nodes().size(); ++v) {
        if (v) out << ',';
        out << csv::escape(net.nodes()[v].name, ',');
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t v = 0; v < row.size(); ++v) {
            if (v) out << ',';
            out << csv::escape(net.nodes()[v].states[row[v]], ',');
        }
        out << '\n';
    }
    log << "[sample] " << spec.n << " individuals (seed " << spec.seed << ") -> "
        << population_path(cfg) << "\n";
}

std::vector<std::vector<std::string>> default_joint_sets(const Schema& schema,
                                                         std::size_t cell_cap) {
    std::vector<std::vector<std::string>> sets;
    for (const auto& src : schema.sources()) {
        const auto& attrs = src.attributes;
        for (std::size_t i = 0; i < attrs.size(); ++i) {
            for (std::size_t k = i + 1; k < attrs.size(); ++k) {
                sets.push_back({attrs[i], attrs[k]});
            }
        }
        std::size_t cells = 1;
        bool fits = true;
        for (const auto& a : attrs) {
            std::size_t card = schema.attribute(a).states.size();
            if (cells > cell_cap / card) {
                fits = false;
                break;
            }
            cells *= card;
        }
        if (fits && attrs.size() > 2) sets.push_back(attrs);
    }
    std::sort(sets.begin(), sets.end());
    sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
    return sets;
}

void stage_validate(const PipelineConfig& cfg, const Schema& schema, std::ostream& log) {
    if (!fs::exists(population_path(cfg))) {
        throw ConfigError("stage dependency missing: '" + population_path(cfg) +
                          "' (run the sample stage first)");
    }
    // Read the population back as a micro dataset.
    PreparedDataset synth;
    synth.source_id = "synthetic";
    synth.kind = SourceKind::Micro;
    {
        std::ifstream in(population_path(cfg));
        std::string line;
        if (!std::getline(in, line)) throw ParseError("validate: empty population file");
        synth.columns = csv::split_line(csv::strip_cr(line), ',');
        while (std::getline(in, line)) {
            line = csv::strip_cr(line);
            if (line.empty()) continue;
            auto fields = csv::split_line(line, ',');
            std::vector<int> row(fields.size());
            for (std::size_t c = 0; c < fields.size(); ++c) {
                int idx = schema.state_index(synth.columns[c], fields[c]);
                if (idx < 0) {
                    throw ParseError("validate: population state '" + fields[c] +
                                     "' not declared for '" + synth.columns[c] + "'");
                }
                row[c] = idx;
            }
            synth.records.push_back(std::move(row));
        }
    }

    std::vector<std::string> ref_ids = cfg.validate.references;
    if (ref_ids.empty()) {
        ref_ids.push_back(schema.richest_source().id);
        for (const auto& src : schema.sources()) {
            if (src.id != ref_ids.front()) ref_ids.push_back(src.id);
        }
    }
    std::vector<PreparedDataset> references;
    for (const auto& id : ref_ids) {
        auto path = prepared_path(cfg, id);
        if (!fs::exists(path)) {
            throw ConfigError("stage dependency missing: '" + path +
                              "' (run the ingest stage first)");
        }
        references.push_back(load_prepared(path, schema));
    }

    auto joint_sets = cfg.validate.joint_sets.empty()
                          ? default_joint_sets(schema, cfg.validate.joint_cell_cap)
                          : cfg.validate.joint_sets;
    auto report = validate_population(synth, references, schema, joint_sets);
    save_report_json(report, (fs::path(cfg.out_dir) / "report.json").string());
    save_report_csv(report, (fs::path(cfg.out_dir) / "report.csv").string());
    log << "[validate] " << report.marginals.size() << " marginal checks, "
        << report.joints.size() << " joint checks -> report.json\n";
}

}  // namespace

void run_pipeline(const PipelineConfig& config, Stage stage, const StageOverrides& overrides,
                  std::ostream& log) {
    Schema schema = load_config_schema(config);
    cross_validate(config, schema);
    fs::create_directories(config.out_dir);

    SampleSpec sample_spec = config.sample;
    if (overrides.seed) sample_spec.seed = *overrides.seed;
    if (overrides.n) sample_spec.n = *overrides.n;

    if (stage == Stage::All || stage == Stage::Ingest) stage_ingest(config, schema, log);
    if (stage == Stage::All || stage == Stage::Merge) stage_merge(config, schema, log);
    if (stage == Stage::All || stage == Stage::Sample) {
        stage_sample(config, schema, sample_spec, log);
    }
    if (stage == Stage::All || stage == Stage::Validate) stage_validate(config, schema, log);

    const char* names[] = {"all", "ingest", "merge", "sample", "validate"};
    write_manifest(config, names[static_cast<int>(stage)], overrides, sample_spec);
}

void inspect_model(const std::string& model_path, const Schema* schema, std::ostream& out,
                   const std::string& dot_path) {
    auto net = load_model(model_path);

    auto layer_of = [&](const std::string& name) -> std::string {
        if (schema && schema->has_attribute(name)) {
            return to_string(schema->attribute(name).layer);
        }
        return "unclassified";
    };
    auto type_of = [&](const std::string& name) -> std::string {
        if (schema && schema->has_attribute(name)) {
            return to_string(schema->attribute(name).attr_type);
        }
        return "unclassified";
    };

    out << "Model: " << model_path << "\n";
    out << "Nodes (" << net.nodes().size() << "):\n";
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& n : net.nodes()) {
        groups[layer_of(n.name) + " / " + type_of(n.name)].push_back(n.name);
    }
    for (const auto& [group, names] : groups) {
        out << "  [" << group << "]";
        for (const auto& n : names) out << " " << n;
        out << "\n";
    }

    auto edges = net.structure().edges();
    std::vector<std::string> inter, outer, other;
    for (const auto& [u, v] : edges) {
        const auto& un = net.nodes()[u].name;
        const auto& vn = net.nodes()[v].name;
        std::string lu = layer_of(un), lv = layer_of(vn);
        std::string text = un + " -> " + vn;
        if (lu == lv && lu != "unclassified") {
            inter.push_back("(" + lu + ") " + text);
        } else if (lu == "socio-demographic" && lv == "motivational") {
            outer.push_back(text);
        } else {
            other.push_back(text);
        }
    }
    out << "Interdependencies (" << inter.size() << "):\n";
    for (const auto& e : inter) out << "  " << e << "\n";
    out << "Outer dependencies (" << outer.size() << "):\n";
    for (const auto& e : outer) out << "  " << e << "\n";
    if (!other.empty()) {
        out << "Other edges (" << other.size() << "):\n";
        for (const auto& e : other) out << "  " << e << "\n";
    }

    if (!dot_path.empty()) {
        std::ofstream dot(dot_path);
        if (!dot) throw Error("inspect: cannot write '" + dot_path + "'");
        dot << "digraph model {\n";
        for (const auto& n : net.nodes()) {
            dot << "  \"" << n.name << "\";\n";
        }
        for (const auto& [u, v] : edges) {
            dot << "  \"" << net.nodes()[u].name << "\" -> \"" << net.nodes()[v].name << "\";\n";
        }
        dot << "}\n";
    }
}

}  // namespace popsynth
