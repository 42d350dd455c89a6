// tabprompt: command-line driver for the describe -> encode -> finetune ->
// generate -> evaluate pipeline.
//
// Exit codes: 0 success, 2 validation error, 3 runtime error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "tabprompt/errors.hpp"
#include "tabprompt/pipeline.hpp"

namespace {

using namespace tabprompt;
namespace fs = std::filesystem;

struct CommonOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

PipelineConfig load(const CommonOptions& opts) {
    if (opts.config.empty()) throw ConfigError("--config is required");
    auto cfg = load_pipeline_config(opts.config);
    if (!opts.out.empty()) cfg.out_dir = opts.out;
    if (opts.seed) cfg.override_seeds(*opts.seed);
    return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& opts, bool config_required = true) {
    auto* c = cmd->add_option("--config", opts.config, "pipeline config file");
    if (config_required) c->required();
    cmd->add_option("--out", opts.out, "run directory (overrides output.dir)");
    cmd->add_option("--seed", opts.seed, "replace every configured seed with this value");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tabular synthesis pipeline: describe, encode, finetune, generate, evaluate"};
    app.require_subcommand(1);

    CommonOptions opts;
    auto* describe = app.add_subcommand("describe", "build column descriptors with the configured protocol");
    auto* encode = app.add_subcommand("encode", "split the dataset and write the encoded training corpus");
    auto* finetune = app.add_subcommand("finetune", "train the configured backend on the corpus");
    auto* generate = app.add_subcommand("generate", "sample synthetic rows from the trained backend");
    auto* evaluate = app.add_subcommand("evaluate", "score synthetic data with decision trees and random forests");
    auto* run = app.add_subcommand("run", "execute every stage and write a run manifest");
    for (auto* cmd : {describe, encode, finetune, generate, run}) add_common(cmd, opts);
    add_common(evaluate, opts, false);

    std::string synthetic_csv, real_test_csv, target, task, schema_from;
    int folds = 5;
    std::uint64_t forest_seed = 0;
    evaluate->add_option("--synthetic", synthetic_csv, "synthetic CSV (standalone mode)");
    evaluate->add_option("--real-test", real_test_csv, "real test CSV (standalone mode)");
    evaluate->add_option("--target", target, "target column (standalone mode)");
    evaluate->add_option("--task", task, "classification or regression (standalone mode)");
    evaluate->add_option("--schema-from", schema_from, "CSV to infer the schema from (default: real test CSV)");
    evaluate->add_option("--folds", folds, "cross-validation folds (standalone mode)");
    evaluate->add_option("--forest-seed", forest_seed, "random forest seed (standalone mode)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    try {
        auto out_dir = [&](const PipelineConfig& cfg) {
            fs::create_directories(cfg.out_dir);
            return cfg.out_dir;
        };
        if (*describe) {
            auto cfg = load(opts);
            auto set = cmd_describe(cfg, out_dir(cfg));
            for (const auto& e : set.entries()) std::cout << e.column << ": " << e.descriptor << "\n";
        } else if (*encode) {
            auto cfg = load(opts);
            cmd_encode(cfg, out_dir(cfg));
        } else if (*finetune) {
            auto cfg = load(opts);
            std::cout << cmd_finetune(cfg, out_dir(cfg)).status << "\n";
        } else if (*generate) {
            auto cfg = load(opts);
            auto synth = cmd_generate(cfg, out_dir(cfg));
            std::cout << "accepted " << synth.stats.accepted << " of " << synth.stats.attempts << " attempts\n";
        } else if (*evaluate) {
            if (!synthetic_csv.empty() || !real_test_csv.empty()) {
                if (synthetic_csv.empty() || real_test_csv.empty())
                    throw ConfigError("standalone evaluate needs both --synthetic and --real-test");
                TableSchema schema;
                std::uint64_t cv_seed = opts.seed.value_or(0);
                if (!opts.config.empty()) {
                    auto cfg = load(opts);
                    schema = load_dataset(cfg).schema;
                    cv_seed = cfg.cv_seed;
                    forest_seed = cfg.forest_seed;
                    folds = cfg.folds;
                } else {
                    if (target.empty()) throw ConfigError("standalone evaluate needs --target or --config");
                    std::optional<Task> hint;
                    if (!task.empty()) hint = parse_task(task);
                    schema = infer_schema(load_csv(schema_from.empty() ? real_test_csv : schema_from), target, hint);
                    if (opts.seed) forest_seed = *opts.seed;
                }
                auto report = cmd_evaluate(synthetic_csv, real_test_csv, schema,
                                           MleGrids::defaults(schema.task, forest_seed), folds, cv_seed);
                if (!opts.out.empty()) {
                    fs::create_directories(opts.out);
                    std::ofstream(fs::path(opts.out) / artifacts::kMleReport) << report.to_json();
                }
                std::cout << report.to_json();
            } else {
                auto cfg = load(opts);
                std::cout << cmd_evaluate(cfg, out_dir(cfg)).to_json();
            }
        } else if (*run) {
            auto cfg = load(opts);
            auto manifest = cmd_run(cfg, out_dir(cfg));
            if (!manifest.ok) {
                std::cerr << "run failed at stage " << manifest.failed_stage << ": " << manifest.error << "\n";
                return manifest.exit_code == 0 ? kExitRuntime : manifest.exit_code;
            }
            std::cout << "run complete: " << (cfg.out_dir / artifacts::kManifest).string() << "\n";
        }
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
