#include "tabprompt/table.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "tabprompt/errors.hpp"

namespace tabprompt {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Splits CSV text into records. Quoted fields may contain separators and
// doubled quotes; a trailing newline does not produce an empty record.
std::vector<Record> parse_records(std::string_view text) {
    std::vector<Record> records;
    Record current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t i = 0;

    auto end_field = [&] {
        current.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // A line holding nothing at all is skipped (blank lines, trailing newline).
        if (!(current.size() == 1 && current[0].empty())) records.push_back(std::move(current));
        current.clear();
    };

    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                    continue;
                }
                in_quotes = false;
            } else {
                field.push_back(c);
            }
            ++i;
            continue;
        }
        if (c == '"' && !field_started && field.empty()) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            // CRLF handled at the '\n'
        } else if (c == '\n') {
            end_record();
        } else {
            field.push_back(c);
            field_started = true;
        }
        ++i;
    }
    if (in_quotes) throw IngestError("unterminated quoted field");
    if (!field.empty() || field_started || !current.empty()) end_record();
    return records;
}

bool needs_quotes(std::string_view cell) {
    return cell.find_first_of(",\"\r\n") != std::string_view::npos;
}

void append_cell(std::string& out, std::string_view cell) {
    if (!needs_quotes(cell)) {
        out.append(cell);
        return;
    }
    out.push_back('"');
    for (char c : cell) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

void validate_names(const std::vector<std::string>& columns) {
    std::set<std::string_view> seen;
    for (const auto& name : columns) {
        if (name.empty()) throw SchemaError("empty column name");
        if (!seen.insert(name).second) throw SchemaError("duplicate column name '" + name + "'");
    }
}

}  // namespace

Table::Table(std::vector<std::string> columns, std::vector<Record> rows)
    : columns_(std::move(columns)), rows_(std::move(rows)) {
    validate_names(columns_);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].size() != columns_.size()) {
            throw SchemaError("row " + std::to_string(r) + " has " + std::to_string(rows_[r].size()) +
                              " cells, expected " + std::to_string(columns_.size()));
        }
    }
}

std::optional<std::size_t> Table::column_index(std::string_view name) const {
    auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - columns_.begin());
}

std::vector<std::string> Table::column(std::size_t index) const {
    std::vector<std::string> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_) out.push_back(row.at(index));
    return out;
}

std::string_view to_string(ColumnKind kind) {
    return kind == ColumnKind::numeric ? "numeric" : "categorical";
}

std::string_view to_string(Task task) {
    return task == Task::classification ? "classification" : "regression";
}

ColumnKind parse_column_kind(std::string_view text) {
    if (text == "numeric") return ColumnKind::numeric;
    if (text == "categorical") return ColumnKind::categorical;
    throw SchemaError("unknown column kind '" + std::string(text) + "'");
}

Task parse_task(std::string_view text) {
    if (text == "classification") return Task::classification;
    if (text == "regression") return Task::regression;
    throw SchemaError("unknown task '" + std::string(text) + "'");
}

std::size_t TableSchema::target_index() const {
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (specs[i].is_target) return i;
    throw SchemaError("schema has no target column");
}

std::optional<std::size_t> TableSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (specs[i].name == name) return i;
    return std::nullopt;
}

std::vector<std::string> TableSchema::column_names() const {
    std::vector<std::string> names;
    names.reserve(specs.size());
    for (const auto& s : specs) names.push_back(s.name);
    return names;
}

std::optional<double> parse_decimal(std::string_view lexeme) {
    if (lexeme.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = lexeme.data();
    const char* last = first + lexeme.size();
    auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
    return value;
}

std::string format_decimal(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

Table read_csv(std::string_view text, bool has_header) {
    auto records = parse_records(text);
    if (records.empty()) throw IngestError("empty input");

    const std::size_t width = records.front().size();
    for (std::size_t r = 0; r < records.size(); ++r) {
        if (records[r].size() != width) {
            throw IngestError("record " + std::to_string(r + 1) + " has " +
                                  std::to_string(records[r].size()) + " fields, expected " +
                                  std::to_string(width),
                              r + 1);
        }
    }

    std::vector<std::string> columns;
    std::size_t first_data = 0;
    if (has_header) {
        columns = std::move(records.front());
        first_data = 1;
        std::set<std::string_view> seen;
        for (const auto& name : columns) {
            if (trim(name).empty()) throw IngestError("empty header name", 1);
            if (!seen.insert(name).second) throw IngestError("duplicate header name '" + name + "'", 1);
        }
    } else {
        for (std::size_t c = 0; c < width; ++c) columns.push_back("c" + std::to_string(c + 1));
    }

    std::vector<Record> rows;
    rows.reserve(records.size() - first_data);
    for (std::size_t r = first_data; r < records.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const std::string& cell = records[r][c];
            const std::string where = "record " + std::to_string(r + 1) + ", column '" + columns[c] + "'";
            if (cell.empty()) throw IngestError("empty cell at " + where, r + 1);
            if (cell.find(", ") != std::string::npos || cell.find(" is ") != std::string::npos)
                throw IngestError("cell '" + cell + "' at " + where +
                                      " contains a reserved separator (\", \" or \" is \")",
                                  r + 1);
            if (cell.find_first_of("\r\n") != std::string::npos)
                throw IngestError("line break inside cell at " + where, r + 1);
        }
        rows.push_back(std::move(records[r]));
    }
    return Table(std::move(columns), std::move(rows));
}

Table load_csv(const std::filesystem::path& path, bool has_header) {
    return read_csv(read_file(path), has_header);
}

std::string to_csv(const Table& table) {
    std::string out;
    auto append_record = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out.push_back(',');
            append_cell(out, cells[c]);
        }
        out.push_back('\n');
    };
    append_record(table.columns());
    for (const auto& row : table.rows()) append_record(row);
    return out;
}

void write_csv(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write " + path.string());
    out << to_csv(table);
}

std::vector<ColumnOverride> parse_schema_overrides(std::string_view text) {
    std::vector<ColumnOverride> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
            auto pos = body.find(',', start);
            parts.emplace_back(trim(body.substr(start, pos - start)));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        if (parts.size() != 3 || parts[0].empty())
            throw SchemaError("override line " + std::to_string(lineno) + ": expected name,kind,is_target");
        ColumnOverride o;
        o.name = parts[0];
        o.kind = parse_column_kind(parts[1]);
        if (parts[2] == "true" || parts[2] == "1") o.is_target = true;
        else if (parts[2] == "false" || parts[2] == "0") o.is_target = false;
        else throw SchemaError("override line " + std::to_string(lineno) + ": bad is_target '" + parts[2] + "'");
        out.push_back(std::move(o));
    }
    return out;
}

std::vector<ColumnOverride> load_schema_overrides(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open override file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_schema_overrides(buf.str());
}

namespace {

ColumnSpec describe_column(const Table& table, std::size_t c, std::optional<ColumnKind> forced) {
    ColumnSpec spec;
    spec.name = table.columns()[c];

    bool all_numeric = table.n_rows() > 0;
    double lo = 0.0, hi = 0.0;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        auto v = parse_decimal(table.rows()[r][c]);
        if (!v) {
            all_numeric = false;
            break;
        }
        if (r == 0 || *v < lo) lo = *v;
        if (r == 0 || *v > hi) hi = *v;
    }

    ColumnKind kind = forced.value_or(all_numeric ? ColumnKind::numeric : ColumnKind::categorical);
    if (kind == ColumnKind::numeric && !all_numeric)
        throw SchemaError("column '" + spec.name + "' is declared numeric but has non-numeric cells");
    spec.kind = kind;
    if (kind == ColumnKind::numeric) {
        spec.numeric_range = std::make_pair(lo, hi);
    } else {
        std::set<std::string> levels;
        for (const auto& row : table.rows()) levels.insert(row[c]);
        spec.levels.assign(levels.begin(), levels.end());
    }
    return spec;
}

}  // namespace

TableSchema infer_schema(const Table& table, std::string_view target, std::optional<Task> task_hint,
                         const std::vector<ColumnOverride>& overrides) {
    std::map<std::string, const ColumnOverride*, std::less<>> by_name;
    std::string override_target;
    for (const auto& o : overrides) {
        if (!table.column_index(o.name)) throw SchemaError("override names unknown column '" + o.name + "'");
        by_name[o.name] = &o;
        if (o.is_target) {
            if (!override_target.empty()) throw SchemaError("override file marks more than one target");
            override_target = o.name;
        }
    }

    std::string target_name(target);
    if (target_name.empty()) target_name = override_target;
    if (target_name.empty()) throw SchemaError("no target column given");
    if (!override_target.empty() && override_target != target_name)
        throw SchemaError("target '" + target_name + "' conflicts with override target '" + override_target + "'");
    auto target_idx = table.column_index(target_name);
    if (!target_idx) throw SchemaError("unknown target column '" + target_name + "'");

    TableSchema schema;
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
        std::optional<ColumnKind> forced;
        if (auto it = by_name.find(table.columns()[c]); it != by_name.end()) forced = it->second->kind;
        if (c == *target_idx && task_hint)
            forced = *task_hint == Task::classification ? ColumnKind::categorical : ColumnKind::numeric;
        auto spec = describe_column(table, c, forced);
        spec.is_target = c == *target_idx;
        schema.specs.push_back(std::move(spec));
    }
    schema.task = schema.specs[*target_idx].kind == ColumnKind::categorical ? Task::classification
                                                                            : Task::regression;
    return schema;
}

void check_conforms(const Table& table, const TableSchema& schema) {
    if (table.columns() != schema.column_names()) {
        std::string msg = "header mismatch: expected [";
        for (std::size_t i = 0; i < schema.specs.size(); ++i) msg += (i ? ", " : "") + schema.specs[i].name;
        msg += "] got [";
        for (std::size_t i = 0; i < table.n_cols(); ++i) msg += (i ? ", " : "") + table.columns()[i];
        throw SchemaError(msg + "]");
    }
    for (std::size_t c = 0; c < schema.specs.size(); ++c) {
        if (schema.specs[c].kind != ColumnKind::numeric) continue;
        for (std::size_t r = 0; r < table.n_rows(); ++r)
            if (!parse_decimal(table.rows()[r][c]))
                throw SchemaError("non-numeric cell '" + table.rows()[r][c] + "' in numeric column '" +
                                  schema.specs[c].name + "'");
    }
}

SplitPair split(const Table& table, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw SplitError("ratio must lie in (0, 1)");
    if (table.n_rows() < 2) throw SplitError("need at least 2 rows to split");

    std::vector<std::size_t> order(table.n_rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(table.n_rows())));

    SplitPair out;
    out.seed = seed;
    out.ratio = ratio;
    out.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

    auto gather = [&](const std::vector<std::size_t>& idx) {
        std::vector<Record> rows;
        rows.reserve(idx.size());
        for (auto i : idx) rows.push_back(table.rows()[i]);
        return Table(table.columns(), std::move(rows));
    };
    out.train = gather(out.train_indices);
    out.test = gather(out.test_indices);
    return out;
}

std::vector<std::string> column_ranges(const Table& table, const TableSchema& schema) {
    if (table.columns() != schema.column_names()) throw SchemaError("schema does not match table columns");
    std::vector<std::string> out;
    out.reserve(schema.specs.size());
    for (const auto& spec : schema.specs) {
        if (spec.kind == ColumnKind::numeric) {
            const auto [lo, hi] = spec.numeric_range.value();
            out.push_back("[" + format_decimal(lo) + ", " + format_decimal(hi) + "]");
        } else {
            std::string s = "{";
            for (std::size_t i = 0; i < spec.levels.size(); ++i) {
                if (i) s += ", ";
                s += spec.levels[i];
            }
            out.push_back(s + "}");
        }
    }
    return out;
}

}  // namespace tabprompt
