#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "tabprompt/backend.hpp"
#include "tabprompt/codec.hpp"
#include "tabprompt/errors.hpp"
#include "tabprompt/table.hpp"

namespace tabprompt {

enum class Bounds { none, strict };

std::string_view to_string(Bounds bounds);
Bounds parse_bounds(std::string_view text);

struct SamplingPolicy {
    std::size_t n_target = 1;
    std::size_t max_attempts = 100;
    Bounds bounds = Bounds::none;
    std::uint64_t seed = 0;

    /// max_attempts defaults to 100 x n_target.
    static SamplingPolicy with_default_attempts(std::size_t n_target, std::uint64_t seed,
                                                Bounds bounds = Bounds::none);
    void validate() const;  // throws ConfigError
};

struct SamplingStats {
    std::size_t attempts = 0;
    std::size_t accepted = 0;
    std::map<std::string, std::size_t> rejected_by_reason;

    std::size_t rejected() const;
};

struct Provenance {
    ProtocolTag protocol_tag = ProtocolTag::baseline;
    std::string backend_id;
    std::optional<FinetuneConfig> finetune;
    GenParams gen;
    SamplingPolicy policy;
};

struct SyntheticTable {
    Table table;
    Provenance provenance;
    SamplingStats stats;
};

/// Thrown when max_attempts is reached before n_target rows were accepted.
/// Carries everything accepted so far.
class SamplingExhausted : public Error {
public:
    explicit SamplingExhausted(SyntheticTable partial);
    const SyntheticTable& partial() const noexcept { return partial_; }

private:
    SyntheticTable partial_;
};

/// nullopt means accept; otherwise the rejection reason.
std::optional<RejectReason> validate_row(const ParsedRow& parsed, const TableSchema& schema, Bounds bounds);

/// Rejection-sampling loop: one test prompt per batch of gen.count attempts,
/// parse, validate, repeat until n_target rows are accepted or max_attempts
/// texts have been examined.
SyntheticTable generate_synthetic(const Backend& backend, const TableSchema& schema,
                                  const DescriptorSet& descriptors, const SamplingPolicy& policy,
                                  const GenParams& gen, std::optional<FinetuneConfig> finetune = std::nullopt);

/// Sidecar document: {"provenance": {...}, "stats": {...}}.
std::string provenance_json(const SyntheticTable& synth);

}  // namespace tabprompt
