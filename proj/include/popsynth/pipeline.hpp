#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "popsynth/ingest.hpp"
#include "popsynth/learn.hpp"
#include "popsynth/merge.hpp"
#include "popsynth/validate.hpp"

namespace popsynth {

struct SourceConfig {
    std::string id;
    std::string path;
    MissingPolicy missing_policy = MissingPolicy::ListwiseDelete;
    HarmonizationMap harmonization;
    std::string count_column = "count";  // macro sources
};

struct SampleSpec {
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    int threads = 1;
    std::map<std::string, std::string> evidence;  // attribute -> state label
};

struct ValidateSpec {
    std::vector<std::vector<std::string>> joint_sets;  // empty: per-source defaults
    std::vector<std::string> references;               // empty: all micro sources, richest first
    std::size_t joint_cell_cap = 1'000'000;
};

// One declarative configuration drives every stage.
struct PipelineConfig {
    std::string config_path;  // where this config was loaded from
    std::string schema_path;  // or "builtin:barcelona"
    std::string out_dir = "out";
    std::vector<SourceConfig> sources;
    MergePlan merge;
    LearnConfig learn;
    SampleSpec sample;
    ValidateSpec validate;
};

PipelineConfig load_pipeline_config(const std::string& path);
Schema load_config_schema(const PipelineConfig& config);

enum class Stage { All, Ingest, Merge, Sample, Validate };
Stage stage_from_string(const std::string& s);

struct StageOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    bool quiet = false;
};

// Executes the requested stage(s) in order, writing each stage's artifact
// plus a run manifest under the configured output directory. Stages resume
// from on-disk artifacts; a missing dependency is a ConfigError.
void run_pipeline(const PipelineConfig& config, Stage stage, const StageOverrides& overrides,
                  std::ostream& log);

// Human-readable structure summary grouped by layer/type, with
// interdependencies (within a layer) and outer dependencies
// (socio-demographic -> motivational); also emits a DOT graph file.
void inspect_model(const std::string& model_path, const Schema* schema, std::ostream& out,
                   const std::string& dot_path = {});

}  // namespace popsynth
