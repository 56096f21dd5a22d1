#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "popsynth/errors.hpp"
#include "popsynth/pipeline.hpp"

namespace {

struct NullBuf : std::streambuf {
    int overflow(int c) override { return c; }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"popsynth - multi-source synthetic population generator"};
    app.require_subcommand(1);

    std::string config_path;
    const char* env_config = std::getenv("POPSYNTH_CONFIG");
    if (env_config) config_path = env_config;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::size_t> n_override;
    bool quiet = false, verbose = false;

    app.add_option("--config", config_path, "Pipeline configuration file")
        ->envname("POPSYNTH_CONFIG");
    app.add_option("--out", out_dir, "Override the output directory");
    app.add_option("--seed", seed_override, "Override the sampling seed");
    app.add_option("--n", n_override, "Override the synthetic population size");
    app.add_flag("--quiet", quiet, "Suppress progress output");
    app.add_flag("--verbose", verbose, "Verbose progress output");

    auto* run = app.add_subcommand("run", "Run the full pipeline (ingest, merge, sample, validate)");
    auto* ingest = app.add_subcommand("ingest", "Ingest and harmonize the configured data sources");
    auto* merge = app.add_subcommand("merge", "Learn/craft per-source structures and merge them");
    auto* sample = app.add_subcommand("sample", "Sample a synthetic population from the model");
    auto* validate = app.add_subcommand("validate", "Validate the population against the sources");

    auto* inspect = app.add_subcommand("inspect", "Summarize a model file");
    std::string model_path, dot_path;
    inspect->add_option("model", model_path, "Model file to inspect")->required();
    inspect->add_option("--dot", dot_path, "Write a DOT graph description here");

    CLI11_PARSE(app, argc, argv);

    NullBuf null_buf;
    std::ostream null_stream(&null_buf);
    std::ostream& log = quiet ? null_stream : std::cout;

    try {
        if (inspect->parsed()) {
            const popsynth::Schema* schema_ptr = nullptr;
            popsynth::Schema schema({}, {}, {});
            if (!config_path.empty()) {
                auto cfg = popsynth::load_pipeline_config(config_path);
                schema = popsynth::load_config_schema(cfg);
                schema_ptr = &schema;
            }
            popsynth::inspect_model(model_path, schema_ptr, std::cout, dot_path);
            return 0;
        }

        if (config_path.empty()) {
            std::cerr << "error: no configuration file (use --config or POPSYNTH_CONFIG)\n";
            return 2;
        }
        auto cfg = popsynth::load_pipeline_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;

        popsynth::Stage stage = popsynth::Stage::All;
        if (ingest->parsed()) stage = popsynth::Stage::Ingest;
        else if (merge->parsed()) stage = popsynth::Stage::Merge;
        else if (sample->parsed()) stage = popsynth::Stage::Sample;
        else if (validate->parsed()) stage = popsynth::Stage::Validate;
        else if (!run->parsed()) {
            std::cerr << "error: unknown subcommand\n";
            return 2;
        }

        popsynth::StageOverrides overrides;
        overrides.seed = seed_override;
        overrides.n = n_override;
        overrides.quiet = quiet;
        popsynth::run_pipeline(cfg, stage, overrides, log);
        return 0;
    } catch (const popsynth::ConfigError& e) {
        std::cerr << "{\"error\":\"config\",\"message\":\"" << e.what() << "\"}\n";
        return 3;
    } catch (const popsynth::ParseError& e) {
        std::cerr << "{\"error\":\"parse\",\"message\":\"" << e.what() << "\"}\n";
        return 4;
    } catch (const popsynth::ValidationError& e) {
        std::cerr << "{\"error\":\"validation\",\"message\":\"" << e.what() << "\"}\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"internal\",\"message\":\"" << e.what() << "\"}\n";
        return 1;
    }
}
