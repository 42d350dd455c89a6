#include "tabprompt/backend.hpp"

#include "tabprompt/errors.hpp"

namespace tabprompt {

std::string_view to_string(FinetuneMode mode) {
    return mode == FinetuneMode::full ? "full" : "low_rank";
}

FinetuneMode parse_finetune_mode(std::string_view text) {
    if (text == "full") return FinetuneMode::full;
    if (text == "low_rank") return FinetuneMode::low_rank;
    throw ConfigError("unknown finetune mode '" + std::string(text) + "'");
}

void FinetuneConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (mode == FinetuneMode::low_rank && rank_r < 1) throw ConfigError("rank_r must be >= 1 in low_rank mode");
    if (base_model_id.empty()) throw ConfigError("base_model_id is empty");
}

void GenParams::validate() const {
    if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (count < 1) throw ConfigError("count must be >= 1");
}

}  // namespace tabprompt
