#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tabprompt/table.hpp"

namespace tabprompt {

enum class ProtocolTag { baseline, expert, llm_guided, novel_mapping };

std::string_view to_string(ProtocolTag tag);
ProtocolTag parse_protocol_tag(std::string_view text);

/// Strips commas, collapses whitespace runs to one space, trims, and rewrites
/// every internal " is " as " is-" so descriptors cannot collide with the
/// row encoding separators.
std::string sanitize_descriptor(std::string_view raw);

struct DescriptorEntry {
    std::string column;
    std::string descriptor;
    bool operator==(const DescriptorEntry&) const = default;
};

/// The subject text used for each column in the row encoding. Entries are
/// sanitized on construction; construction throws CodecError if a descriptor is
/// empty after sanitization or two descriptors coincide.
class DescriptorSet {
public:
    DescriptorSet() = default;
    DescriptorSet(std::vector<DescriptorEntry> entries, ProtocolTag tag);

    const std::vector<DescriptorEntry>& entries() const noexcept { return entries_; }
    ProtocolTag protocol_tag() const noexcept { return tag_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::string& descriptor(std::size_t i) const { return entries_.at(i).descriptor; }

    /// Throws CodecError unless the entries name the schema's columns in order.
    void check_matches(const TableSchema& schema) const;

    bool operator==(const DescriptorSet&) const = default;

private:
    std::vector<DescriptorEntry> entries_;
    ProtocolTag tag_ = ProtocolTag::baseline;
};

struct EncodedRow {
    std::string text;
    std::optional<std::size_t> source_row_index;
};

enum class ColumnOrder { fixed, permuted };

/// Reason a generated text failed to parse or validate.
enum class RejectReason {
    empty_text,
    malformed_segment,
    unknown_descriptor,
    duplicate_column,
    missing_column,
    empty_value,
    non_numeric_value,
    out_of_range,
    unknown_level,
};

std::string_view to_string(RejectReason reason);

struct ParsedRow {
    std::vector<std::optional<std::string>> values;  // indexed by schema column
    bool complete = false;
    std::optional<RejectReason> reason;
    std::string detail;

    /// Cells in schema order; only meaningful when complete.
    Record record() const;
};

EncodedRow encode_row(std::span<const std::string> row, const DescriptorSet& descriptors);

/// Encodes the entries of `row` in the given column order (a permutation of
/// column indices).
EncodedRow encode_row(std::span<const std::string> row, const DescriptorSet& descriptors,
                      std::span<const std::size_t> column_order);

std::vector<EncodedRow> encode_corpus(const Table& table, const DescriptorSet& descriptors,
                                      ColumnOrder order = ColumnOrder::fixed, std::uint64_t seed = 0);

/// "<descriptor> is" for a seeded-uniformly chosen descriptor.
std::string make_test_prompt(const DescriptorSet& descriptors, std::uint64_t seed);

/// Total: never throws on malformed text.
ParsedRow parse_row(std::string_view text, const TableSchema& schema, const DescriptorSet& descriptors);

}  // namespace tabprompt
