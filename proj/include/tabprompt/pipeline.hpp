#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "tabprompt/backend.hpp"
#include "tabprompt/codec.hpp"
#include "tabprompt/config.hpp"
#include "tabprompt/mle.hpp"
#include "tabprompt/synthesizer.hpp"

namespace tabprompt {

/// Fixed artifact names inside a run directory.
namespace artifacts {
inline constexpr const char* kDescriptors = "descriptors.json";
inline constexpr const char* kDescriptorCache = "descriptor_cache";
inline constexpr const char* kTrain = "train.csv";
inline constexpr const char* kTest = "test.csv";
inline constexpr const char* kCorpus = "corpus.txt";
inline constexpr const char* kNGramModel = "model.ngram.json";
inline constexpr const char* kFinetuneReport = "finetune.json";
inline constexpr const char* kSynthetic = "synthetic.csv";
inline constexpr const char* kSyntheticSidecar = "synthetic.json";
inline constexpr const char* kMleReport = "mle_report.json";
inline constexpr const char* kLog = "run.log";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace artifacts

/// Dataset + schema exactly as every stage sees them.
struct LoadedData {
    Table table;
    TableSchema schema;
};
LoadedData load_dataset(const PipelineConfig& config);

void save_descriptors(const std::filesystem::path& path, const DescriptorSet& descriptors);
DescriptorSet load_descriptors(const std::filesystem::path& path);

/// Each stage reads its declared inputs from `out_dir` (plus the dataset) and
/// writes its declared outputs there.
DescriptorSet cmd_describe(const PipelineConfig& config, const std::filesystem::path& out_dir);
void cmd_encode(const PipelineConfig& config, const std::filesystem::path& out_dir);
TrainingReport cmd_finetune(const PipelineConfig& config, const std::filesystem::path& out_dir);
SyntheticTable cmd_generate(const PipelineConfig& config, const std::filesystem::path& out_dir);
MleReport cmd_evaluate(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// Standalone evaluation of a synthetic CSV against a real test CSV. Header
/// mismatches raise SchemaError listing missing and unexpected columns.
MleReport cmd_evaluate(const std::filesystem::path& synthetic_csv, const std::filesystem::path& real_test_csv,
                       const TableSchema& schema, const MleGrids& grids, int folds, std::uint64_t cv_seed);

struct RunManifest {
    bool ok = false;
    std::string failed_stage;
    std::string error;
    int exit_code = 0;
    std::string json;  // manifest.json contents
};

/// describe -> encode -> finetune -> generate -> evaluate. Never throws for
/// stage failures: the manifest records the failing stage and keeps earlier
/// artifacts.
RunManifest cmd_run(const PipelineConfig& config, const std::filesystem::path& out_dir);

}  // namespace tabprompt
