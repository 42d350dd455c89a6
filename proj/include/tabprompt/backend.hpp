#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tabprompt {

enum class FinetuneMode { full, low_rank };

std::string_view to_string(FinetuneMode mode);
FinetuneMode parse_finetune_mode(std::string_view text);

/// Training knobs. Defaults follow the reference setup: AdamW at 5e-5 for 400
/// epochs, and rank 16 / alpha 32 when training a low-rank adapter.
struct FinetuneConfig {
    int epochs = 400;
    double learning_rate = 5e-5;
    FinetuneMode mode = FinetuneMode::full;
    int rank_r = 16;
    double alpha = 32.0;
    std::string base_model_id = "distilgpt2";

    void validate() const;  // throws ConfigError
};

struct GenParams {
    int max_new_tokens = 64;
    double temperature = 0.7;
    int count = 1;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

struct TrainingReport {
    std::string status;  // "trained" on success
    std::string job_id;  // remote only
    std::vector<double> losses;              // per-epoch mean loss (remote)
    std::vector<std::string> checkpoints;    // remote checkpoint tags
    std::map<std::string, double> stats;     // token statistics (n-gram)
};

/// A text generator that can be trained on encoded corpus lines and asked for
/// continuations of a prompt prefix.
class Backend {
public:
    virtual ~Backend() = default;

    /// Throws TrainError on an empty corpus.
    virtual TrainingReport finetune(std::span<const std::string> corpus, const FinetuneConfig& config) = 0;

    /// Returns params.count texts, each starting with `prefix`. Throws
    /// StateError before training.
    virtual std::vector<std::string> generate(std::string_view prefix, const GenParams& params) const = 0;

    virtual std::string id() const = 0;
};

}  // namespace tabprompt
