#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tabprompt {

using Record = std::vector<std::string>;

/// A rectangular table of cell lexemes. Cells keep the exact text that was read;
/// typed views are computed on demand.
class Table {
public:
    Table() = default;
    /// Throws SchemaError when a row is ragged or column names are empty/duplicated.
    Table(std::vector<std::string> columns, std::vector<Record> rows);

    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<Record>& rows() const noexcept { return rows_; }
    std::size_t n_rows() const noexcept { return rows_.size(); }
    std::size_t n_cols() const noexcept { return columns_.size(); }

    std::optional<std::size_t> column_index(std::string_view name) const;
    std::vector<std::string> column(std::size_t index) const;

    bool operator==(const Table&) const = default;

private:
    std::vector<std::string> columns_;
    std::vector<Record> rows_;
};

enum class ColumnKind { numeric, categorical };
enum class Task { classification, regression };

std::string_view to_string(ColumnKind kind);
std::string_view to_string(Task task);
ColumnKind parse_column_kind(std::string_view text);
Task parse_task(std::string_view text);

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::categorical;
    std::optional<std::pair<double, double>> numeric_range;  // numeric only
    std::vector<std::string> levels;                          // categorical only, sorted
    bool is_target = false;

    bool operator==(const ColumnSpec&) const = default;
};

struct TableSchema {
    std::vector<ColumnSpec> specs;
    Task task = Task::classification;

    std::size_t target_index() const;
    const ColumnSpec& target() const { return specs[target_index()]; }
    std::optional<std::size_t> index_of(std::string_view name) const;
    std::vector<std::string> column_names() const;

    bool operator==(const TableSchema&) const = default;
};

/// One line of a schema override file: `name,kind,is_target`.
struct ColumnOverride {
    std::string name;
    ColumnKind kind = ColumnKind::categorical;
    bool is_target = false;
};

struct SplitPair {
    Table train;
    Table test;
    std::vector<std::size_t> train_indices;  // row indices into the source table
    std::vector<std::size_t> test_indices;
    std::uint64_t seed = 0;
    double ratio = 0.0;
};

/// Parses a finite decimal number (the same rule used for numeric detection).
std::optional<double> parse_decimal(std::string_view lexeme);

/// Shortest round-trip rendering of a double ("30" for 3e1, "1.5" for 1.5).
std::string format_decimal(double value);

Table read_csv(std::string_view text, bool has_header = true);
Table load_csv(const std::filesystem::path& path, bool has_header = true);
std::string to_csv(const Table& table);
void write_csv(const std::filesystem::path& path, const Table& table);

std::vector<ColumnOverride> parse_schema_overrides(std::string_view text);
std::vector<ColumnOverride> load_schema_overrides(const std::filesystem::path& path);

TableSchema infer_schema(const Table& table, std::string_view target,
                         std::optional<Task> task_hint = std::nullopt,
                         const std::vector<ColumnOverride>& overrides = {});

/// Throws SchemaError unless the table's header and cells conform to the schema
/// kinds (numeric cells parse). Levels and ranges are not enforced.
void check_conforms(const Table& table, const TableSchema& schema);

SplitPair split(const Table& table, double ratio, std::uint64_t seed);

/// Per-column range descriptions: "[min, max]" for numeric, "{a, b}" for categorical.
std::vector<std::string> column_ranges(const Table& table, const TableSchema& schema);

}  // namespace tabprompt
