#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tabprompt/backend.hpp"

namespace tabprompt {

enum class Granularity { word, character };

std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view text);

/// Word granularity: each token is "," or a run of non-space, non-comma
/// characters, carrying any whitespace that precedes it; trailing whitespace is
/// its own token. Concatenating the tokens always reproduces the input, so
/// "a is 1, b is 2" becomes ["a", " is", " 1", ",", " b", " is", " 2"].
std::vector<std::string> tokenize(std::string_view text, Granularity granularity);

using TokenId = std::int32_t;

/// Order-k count model over token windows. Immutable once trained.
class NGramModel {
public:
    static constexpr TokenId kLineStart = 0;
    static constexpr TokenId kLineEnd = 1;
    static constexpr TokenId kUnknown = 2;

    using Context = std::vector<TokenId>;
    using NextCounts = std::map<TokenId, std::uint64_t>;

    NGramModel() = default;

    int order() const noexcept { return order_; }
    Granularity granularity() const noexcept { return granularity_; }
    /// Token text by id; ids 0-2 are the sentinels.
    const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
    const std::map<Context, NextCounts>& counts() const noexcept { return counts_; }
    bool empty() const noexcept { return counts_.empty(); }

    TokenId token_id(std::string_view token) const;
    /// The k-token context that follows `prefix` at the start of a line.
    Context context_after(std::string_view prefix) const;
    const NextCounts* next_counts(std::span<const TokenId> context) const;

    std::string to_json() const;
    static NGramModel from_json(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static NGramModel load(const std::filesystem::path& path);

    bool operator==(const NGramModel& other) const {
        return order_ == other.order_ && granularity_ == other.granularity_ &&
               vocabulary_ == other.vocabulary_ && counts_ == other.counts_;
    }

private:
    friend NGramModel ngram_finetune(std::span<const std::string>, int, Granularity);

    TokenId intern(const std::string& token);

    int order_ = 1;
    Granularity granularity_ = Granularity::word;
    std::vector<std::string> vocabulary_;
    std::unordered_map<std::string, TokenId> ids_;
    std::map<Context, NextCounts> counts_;
};

/// Throws ConfigError for order_k < 1 and TrainError for an empty corpus.
NGramModel ngram_finetune(std::span<const std::string> corpus, int order_k,
                          Granularity granularity = Granularity::word);

/// Next-token probabilities for a context: normalized counts raised to
/// 1/temperature and renormalized. Temperature 0 puts all mass on the most
/// frequent token (lowest id on ties). Empty for an unseen context.
std::vector<std::pair<TokenId, double>> next_distribution(const NGramModel& model,
                                                          std::span<const TokenId> context, double temperature);

/// Draws the next token; kLineEnd for an unseen context.
TokenId sample_next(const NGramModel& model, std::span<const TokenId> context, double temperature,
                    std::mt19937_64& rng);

/// One continuation of `prefix` using params.seed (params.count is ignored).
std::string ngram_generate(const NGramModel& model, std::string_view prefix, const GenParams& params);

class NGramBackend final : public Backend {
public:
    explicit NGramBackend(int order_k, Granularity granularity = Granularity::word);
    explicit NGramBackend(NGramModel model);

    TrainingReport finetune(std::span<const std::string> corpus, const FinetuneConfig& config) override;
    std::vector<std::string> generate(std::string_view prefix, const GenParams& params) const override;
    std::string id() const override;

    bool trained() const noexcept { return trained_; }
    const NGramModel& model() const;

private:
    int order_;
    Granularity granularity_;
    NGramModel model_;
    bool trained_ = false;
};

}  // namespace tabprompt
