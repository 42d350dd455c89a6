#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "tabprompt/backend.hpp"
#include "tabprompt/codec.hpp"
#include "tabprompt/ngram.hpp"
#include "tabprompt/protocols.hpp"
#include "tabprompt/remote.hpp"
#include "tabprompt/synthesizer.hpp"
#include "tabprompt/table.hpp"

namespace tabprompt {

/// Minimal TOML-style document: `[section]` headers and `key = value` lines,
/// where a value is a double-quoted string, true/false, or a number. `#`
/// starts a comment outside strings.
class KeyValueDoc {
public:
    static KeyValueDoc parse(std::string_view text);

    bool has(std::string_view section, std::string_view key) const;
    std::optional<std::string> get_string(std::string_view section, std::string_view key) const;
    std::optional<std::int64_t> get_int(std::string_view section, std::string_view key) const;
    std::optional<double> get_double(std::string_view section, std::string_view key) const;
    std::optional<bool> get_bool(std::string_view section, std::string_view key) const;

    /// "section.key" -> raw value text, for snapshots.
    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

private:
    std::map<std::string, std::string> entries_;  // values keep their quotes
};

enum class BackendKind { ngram, remote };

struct PipelineConfig {
    // [data]
    std::filesystem::path dataset;
    bool has_header = true;
    std::string target;
    std::optional<Task> task;
    std::optional<std::filesystem::path> schema_overrides;
    std::string dataset_name;

    // [split]
    double split_ratio = 0.9;
    std::uint64_t split_seed = 0;

    // [protocol]
    ProtocolTag protocol = ProtocolTag::baseline;
    std::filesystem::path descriptor_file;  // expert
    std::string field_name;                 // novel_mapping

    // [endpoint]
    ChatEndpointConfig chat;

    // [encode]
    ColumnOrder order = ColumnOrder::fixed;
    std::uint64_t encode_seed = 0;

    // [backend]
    BackendKind backend = BackendKind::ngram;
    int ngram_order = 3;
    Granularity granularity = Granularity::word;
    RemoteEndpoint remote;
    bool checkpoint_eval = false;

    // [finetune]
    FinetuneConfig finetune;

    // [generate]
    GenParams gen;
    bool auto_max_new_tokens = true;  // 4 x longest corpus line, in tokens

    // [sampling]
    std::optional<std::size_t> n_target;      // default: train rows
    std::optional<std::size_t> max_attempts;  // default: 100 x n_target
    Bounds bounds = Bounds::none;
    std::uint64_t sampling_seed = 0;

    // [evaluate]
    int folds = 5;
    std::uint64_t cv_seed = 0;
    std::uint64_t forest_seed = 0;

    // [output]
    std::filesystem::path out_dir = "run";

    std::string source_text;  // the config file as read

    /// Replaces every seed with `seed`.
    void override_seeds(std::uint64_t seed);
    std::map<std::string, std::uint64_t> seeds() const;
};

/// Relative paths resolve against `base_dir`. Throws ConfigError on missing
/// required keys (every seed is required), bad values, or missing files.
PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

}  // namespace tabprompt
