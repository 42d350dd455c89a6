#include "tabprompt/synthesizer.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "tabprompt/rng.hpp"

namespace tabprompt {

std::string_view to_string(Bounds bounds) { return bounds == Bounds::none ? "none" : "strict"; }

Bounds parse_bounds(std::string_view text) {
    if (text == "none") return Bounds::none;
    if (text == "strict") return Bounds::strict;
    throw ConfigError("unknown bounds policy '" + std::string(text) + "'");
}

SamplingPolicy SamplingPolicy::with_default_attempts(std::size_t n_target, std::uint64_t seed, Bounds bounds) {
    return SamplingPolicy{n_target, 100 * n_target, bounds, seed};
}

void SamplingPolicy::validate() const {
    if (n_target < 1) throw ConfigError("n_target must be >= 1");
    if (max_attempts < n_target) throw ConfigError("max_attempts must be >= n_target");
}

std::size_t SamplingStats::rejected() const {
    std::size_t total = 0;
    for (const auto& [reason, n] : rejected_by_reason) total += n;
    return total;
}

SamplingExhausted::SamplingExhausted(SyntheticTable partial)
    : Error("SamplingExhausted: accepted " + std::to_string(partial.stats.accepted) + " of " +
                std::to_string(partial.provenance.policy.n_target) + " rows in " +
                std::to_string(partial.stats.attempts) + " attempts",
            kExitRuntime),
      partial_(std::move(partial)) {}

std::optional<RejectReason> validate_row(const ParsedRow& parsed, const TableSchema& schema, Bounds bounds) {
    if (!parsed.complete) return parsed.reason.value_or(RejectReason::malformed_segment);
    if (parsed.values.size() != schema.specs.size()) return RejectReason::missing_column;
    if (bounds == Bounds::none) return std::nullopt;

    for (std::size_t c = 0; c < schema.specs.size(); ++c) {
        const auto& spec = schema.specs[c];
        const auto& value = *parsed.values[c];
        if (spec.kind == ColumnKind::numeric) {
            auto v = parse_decimal(value);
            if (!v) return RejectReason::non_numeric_value;
            const auto [lo, hi] = spec.numeric_range.value();
            if (*v < lo || *v > hi) return RejectReason::out_of_range;
        } else if (!std::binary_search(spec.levels.begin(), spec.levels.end(), value)) {
            return RejectReason::unknown_level;
        }
    }
    return std::nullopt;
}

SyntheticTable generate_synthetic(const Backend& backend, const TableSchema& schema,
                                  const DescriptorSet& descriptors, const SamplingPolicy& policy,
                                  const GenParams& gen, std::optional<FinetuneConfig> finetune) {
    policy.validate();
    gen.validate();
    descriptors.check_matches(schema);

    SyntheticTable out;
    out.provenance = Provenance{descriptors.protocol_tag(), backend.id(), std::move(finetune), gen, policy};

    std::vector<Record> rows;
    auto& stats = out.stats;
    for (std::uint64_t batch = 0; stats.accepted < policy.n_target && stats.attempts < policy.max_attempts;
         ++batch) {
        const auto prompt = make_test_prompt(descriptors, mix_seed(policy.seed, batch));
        GenParams params = gen;
        params.seed = mix_seed(gen.seed, batch);
        params.count = static_cast<int>(
            std::min<std::size_t>(static_cast<std::size_t>(gen.count), policy.max_attempts - stats.attempts));

        // A backend that returns fewer texts than asked still uses up the
        // attempts; the missing ones count as empty texts.
        const auto texts = backend.generate(prompt, params);
        for (std::size_t i = 0; i < static_cast<std::size_t>(params.count); ++i) {
            if (stats.accepted == policy.n_target || stats.attempts == policy.max_attempts) break;
            ++stats.attempts;
            auto parsed = parse_row(i < texts.size() ? std::string_view(texts[i]) : std::string_view{}, schema,
                                    descriptors);
            if (auto reason = validate_row(parsed, schema, policy.bounds)) {
                ++stats.rejected_by_reason[std::string(to_string(*reason))];
                continue;
            }
            ++stats.accepted;
            rows.push_back(parsed.record());
        }
    }

    out.table = Table(schema.column_names(), std::move(rows));
    if (stats.accepted < policy.n_target) throw SamplingExhausted(std::move(out));
    return out;
}

std::string provenance_json(const SyntheticTable& synth) {
    using json = nlohmann::json;
    const auto& p = synth.provenance;
    json prov = {{"protocol_tag", to_string(p.protocol_tag)},
                 {"backend_id", p.backend_id},
                 {"gen_params",
                  {{"max_new_tokens", p.gen.max_new_tokens},
                   {"temperature", p.gen.temperature},
                   {"count", p.gen.count},
                   {"seed", p.gen.seed}}},
                 {"policy",
                  {{"n_target", p.policy.n_target},
                   {"max_attempts", p.policy.max_attempts},
                   {"bounds", to_string(p.policy.bounds)},
                   {"seed", p.policy.seed}}}};
    if (p.finetune) {
        prov["finetune"] = {{"epochs", p.finetune->epochs},
                            {"learning_rate", p.finetune->learning_rate},
                            {"mode", to_string(p.finetune->mode)},
                            {"rank_r", p.finetune->rank_r},
                            {"alpha", p.finetune->alpha},
                            {"base_model_id", p.finetune->base_model_id}};
    }
    json stats = {{"attempts", synth.stats.attempts},
                  {"accepted", synth.stats.accepted},
                  {"rejected_by_reason", synth.stats.rejected_by_reason}};
    return json{{"provenance", prov}, {"stats", stats}}.dump(2) + "\n";
}

}  // namespace tabprompt
