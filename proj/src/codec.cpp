#include "tabprompt/codec.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <random>
#include <set>

#include "tabprompt/errors.hpp"
#include "tabprompt/rng.hpp"

namespace tabprompt {

namespace {

constexpr std::string_view kEntrySeparator = ", ";
constexpr std::string_view kQualifier = " is ";

}  // namespace

std::string_view to_string(ProtocolTag tag) {
    switch (tag) {
        case ProtocolTag::baseline: return "baseline";
        case ProtocolTag::expert: return "expert";
        case ProtocolTag::llm_guided: return "llm_guided";
        case ProtocolTag::novel_mapping: return "novel_mapping";
    }
    return "baseline";
}

ProtocolTag parse_protocol_tag(std::string_view text) {
    if (text == "baseline") return ProtocolTag::baseline;
    if (text == "expert") return ProtocolTag::expert;
    if (text == "llm_guided") return ProtocolTag::llm_guided;
    if (text == "novel_mapping") return ProtocolTag::novel_mapping;
    throw CodecError("unknown protocol tag '" + std::string(text) + "'");
}

std::string_view to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::empty_text: return "empty_text";
        case RejectReason::malformed_segment: return "malformed_segment";
        case RejectReason::unknown_descriptor: return "unknown_descriptor";
        case RejectReason::duplicate_column: return "duplicate_column";
        case RejectReason::missing_column: return "missing_column";
        case RejectReason::empty_value: return "empty_value";
        case RejectReason::non_numeric_value: return "non_numeric_value";
        case RejectReason::out_of_range: return "out_of_range";
        case RejectReason::unknown_level: return "unknown_level";
    }
    return "malformed_segment";
}

std::string sanitize_descriptor(std::string_view raw) {
    std::string collapsed;
    collapsed.reserve(raw.size());
    bool pending_space = false;
    for (char c : raw) {
        if (c == ',') continue;
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !collapsed.empty();
            continue;
        }
        if (pending_space) collapsed.push_back(' ');
        pending_space = false;
        collapsed.push_back(c);
    }
    std::string out;
    out.reserve(collapsed.size());
    std::size_t pos = 0;
    while (true) {
        auto hit = collapsed.find(kQualifier, pos);
        if (hit == std::string::npos) {
            out.append(collapsed, pos, std::string::npos);
            break;
        }
        out.append(collapsed, pos, hit - pos);
        out.append(" is-");
        pos = hit + kQualifier.size();
    }
    return out;
}

DescriptorSet::DescriptorSet(std::vector<DescriptorEntry> entries, ProtocolTag tag)
    : entries_(std::move(entries)), tag_(tag) {
    std::set<std::string> seen_text;
    std::set<std::string> seen_column;
    for (auto& e : entries_) {
        e.descriptor = sanitize_descriptor(e.descriptor);
        if (e.descriptor.empty()) throw CodecError("descriptor for column '" + e.column + "' is empty");
        if (!seen_text.insert(e.descriptor).second)
            throw CodecError("duplicate descriptor '" + e.descriptor + "'");
        if (!seen_column.insert(e.column).second)
            throw CodecError("column '" + e.column + "' has more than one descriptor");
    }
}

void DescriptorSet::check_matches(const TableSchema& schema) const {
    if (entries_.size() != schema.specs.size())
        throw CodecError("descriptor count " + std::to_string(entries_.size()) + " does not match " +
                         std::to_string(schema.specs.size()) + " schema columns");
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].column != schema.specs[i].name)
            throw CodecError("descriptor " + std::to_string(i) + " is for column '" + entries_[i].column +
                             "', schema has '" + schema.specs[i].name + "'");
}

Record ParsedRow::record() const {
    Record out;
    out.reserve(values.size());
    for (const auto& v : values) out.push_back(v.value_or(std::string{}));
    return out;
}

EncodedRow encode_row(std::span<const std::string> row, const DescriptorSet& descriptors,
                      std::span<const std::size_t> column_order) {
    if (row.size() != descriptors.size())
        throw CodecError("row has " + std::to_string(row.size()) + " cells but there are " +
                         std::to_string(descriptors.size()) + " descriptors");
    if (column_order.size() != row.size()) throw CodecError("column order has the wrong length");
    EncodedRow out;
    for (std::size_t i = 0; i < column_order.size(); ++i) {
        const auto c = column_order[i];
        if (c >= row.size()) throw CodecError("column order index out of range");
        if (i) out.text.append(kEntrySeparator);
        out.text.append(descriptors.descriptor(c));
        out.text.append(kQualifier);
        out.text.append(row[c]);
    }
    return out;
}

EncodedRow encode_row(std::span<const std::string> row, const DescriptorSet& descriptors) {
    std::vector<std::size_t> order(row.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    return encode_row(row, descriptors, order);
}

std::vector<EncodedRow> encode_corpus(const Table& table, const DescriptorSet& descriptors, ColumnOrder order,
                                      std::uint64_t seed) {
    if (descriptors.size() != table.n_cols())
        throw CodecError("descriptor count does not match table width");
    for (std::size_t c = 0; c < table.n_cols(); ++c)
        if (descriptors.entries()[c].column != table.columns()[c])
            throw CodecError("descriptor columns do not match table columns");

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> perm(table.n_cols());
    std::vector<EncodedRow> out;
    out.reserve(table.n_rows());
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        if (order == ColumnOrder::permuted) std::shuffle(perm.begin(), perm.end(), rng);
        auto encoded = encode_row(table.rows()[r], descriptors, perm);
        encoded.source_row_index = r;
        out.push_back(std::move(encoded));
    }
    return out;
}

std::string make_test_prompt(const DescriptorSet& descriptors, std::uint64_t seed) {
    if (descriptors.empty()) throw CodecError("cannot build a test prompt from an empty descriptor set");
    std::mt19937_64 rng(mix_seed(seed, 0));
    std::uniform_int_distribution<std::size_t> pick(0, descriptors.size() - 1);
    return descriptors.descriptor(pick(rng)) + " is";
}

ParsedRow parse_row(std::string_view text, const TableSchema& schema, const DescriptorSet& descriptors) {
    ParsedRow out;
    out.values.assign(schema.specs.size(), std::nullopt);

    auto fail = [&](RejectReason reason, std::string detail) {
        out.complete = false;
        out.reason = reason;
        out.detail = std::move(detail);
        return out;
    };

    if (descriptors.size() != schema.specs.size())
        return fail(RejectReason::unknown_descriptor, "descriptor set does not match schema");

    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.remove_suffix(1);
    if (text.empty()) return fail(RejectReason::empty_text, {});

    // Longest descriptor first so that a descriptor which is a prefix of another
    // never steals its segment.
    std::vector<std::size_t> by_length(descriptors.size());
    std::iota(by_length.begin(), by_length.end(), std::size_t{0});
    std::stable_sort(by_length.begin(), by_length.end(), [&](std::size_t a, std::size_t b) {
        return descriptors.descriptor(a).size() > descriptors.descriptor(b).size();
    });

    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto next = text.find(kEntrySeparator, pos);
        std::string_view segment =
            text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);

        std::optional<std::size_t> column;
        for (auto c : by_length) {
            const auto& d = descriptors.descriptor(c);
            if (segment.size() >= d.size() + kQualifier.size() && segment.substr(0, d.size()) == d &&
                segment.substr(d.size(), kQualifier.size()) == kQualifier) {
                column = c;
                break;
            }
        }
        if (!column) {
            if (segment.find(kQualifier) != std::string_view::npos)
                return fail(RejectReason::unknown_descriptor, std::string(segment));
            return fail(RejectReason::malformed_segment, std::string(segment));
        }
        auto value = segment.substr(descriptors.descriptor(*column).size() + kQualifier.size());
        if (value.empty()) return fail(RejectReason::empty_value, schema.specs[*column].name);
        if (out.values[*column]) return fail(RejectReason::duplicate_column, schema.specs[*column].name);
        out.values[*column] = std::string(value);

        if (next == std::string_view::npos) break;
        pos = next + kEntrySeparator.size();
    }

    for (std::size_t c = 0; c < schema.specs.size(); ++c)
        if (!out.values[c]) return fail(RejectReason::missing_column, schema.specs[c].name);
    for (std::size_t c = 0; c < schema.specs.size(); ++c)
        if (schema.specs[c].kind == ColumnKind::numeric && !parse_decimal(*out.values[c]))
            return fail(RejectReason::non_numeric_value, schema.specs[c].name + "=" + *out.values[c]);

    out.complete = true;
    return out;
}

}  // namespace tabprompt
