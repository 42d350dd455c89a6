#include "tabprompt/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "tabprompt/errors.hpp"

namespace tabprompt {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string key_of(std::string_view section, std::string_view key) {
    return std::string(section) + "." + std::string(key);
}

// Cuts a trailing comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && quoted) {
            ++i;
        } else if (line[i] == '"') {
            quoted = !quoted;
        } else if (line[i] == '#' && !quoted) {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string unquote(std::string_view raw, const std::string& where) {
    if (raw.size() < 2 || raw.back() != '"') throw ConfigError(where + ": unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        char c = raw[i];
        if (c == '\\') {
            if (i + 2 >= raw.size()) throw ConfigError(where + ": dangling escape");
            char e = raw[++i];
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default: throw ConfigError(where + ": unknown escape \\" + std::string(1, e));
            }
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::uint64_t require_seed(const KeyValueDoc& doc, std::string_view section, std::string_view key = "seed") {
    auto v = doc.get_int(section, key);
    if (!v) throw ConfigError("missing required seed " + key_of(section, key));
    if (*v < 0) throw ConfigError(key_of(section, key) + " must be non-negative");
    return static_cast<std::uint64_t>(*v);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

KeyValueDoc KeyValueDoc::parse(std::string_view text) {
    KeyValueDoc doc;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = "config line " + std::to_string(lineno);
        auto body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') throw ConfigError(where + ": malformed section header");
            section = std::string(trim(body.substr(1, body.size() - 2)));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            continue;
        }
        auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
        auto key = trim(body.substr(0, eq));
        auto value = trim(body.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError(where + ": expected key = value");
        if (value.front() == '"') unquote(value, where);  // validate now
        auto full = key_of(section, key);
        if (!doc.entries_.emplace(full, std::string(value)).second)
            throw ConfigError(where + ": duplicate key " + full);
    }
    return doc;
}

bool KeyValueDoc::has(std::string_view section, std::string_view key) const {
    return entries_.count(key_of(section, key)) != 0;
}

std::optional<std::string> KeyValueDoc::get_string(std::string_view section, std::string_view key) const {
    auto it = entries_.find(key_of(section, key));
    if (it == entries_.end()) return std::nullopt;
    const auto& raw = it->second;
    if (raw.front() == '"') return unquote(raw, it->first);
    return raw;  // bare words are accepted as strings
}

std::optional<std::int64_t> KeyValueDoc::get_int(std::string_view section, std::string_view key) const {
    auto it = entries_.find(key_of(section, key));
    if (it == entries_.end()) return std::nullopt;
    std::int64_t v = 0;
    const auto& raw = it->second;
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc() || ptr != raw.data() + raw.size())
        throw ConfigError(it->first + ": expected an integer, got " + raw);
    return v;
}

std::optional<double> KeyValueDoc::get_double(std::string_view section, std::string_view key) const {
    auto it = entries_.find(key_of(section, key));
    if (it == entries_.end()) return std::nullopt;
    auto v = parse_decimal(it->second);
    if (!v) throw ConfigError(it->first + ": expected a number, got " + it->second);
    return v;
}

std::optional<bool> KeyValueDoc::get_bool(std::string_view section, std::string_view key) const {
    auto it = entries_.find(key_of(section, key));
    if (it == entries_.end()) return std::nullopt;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw ConfigError(it->first + ": expected true or false, got " + it->second);
}

void PipelineConfig::override_seeds(std::uint64_t seed) {
    split_seed = encode_seed = sampling_seed = cv_seed = forest_seed = seed;
    gen.seed = seed;
}

std::map<std::string, std::uint64_t> PipelineConfig::seeds() const {
    return {{"split", split_seed},   {"encode", encode_seed}, {"generate", gen.seed},
            {"sampling", sampling_seed}, {"cv", cv_seed},     {"forest", forest_seed}};
}

PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir) {
    const auto doc = KeyValueDoc::parse(text);
    PipelineConfig cfg;
    cfg.source_text = std::string(text);

    auto required_string = [&](std::string_view section, std::string_view key) {
        auto v = doc.get_string(section, key);
        if (!v || v->empty()) throw ConfigError("missing required key " + key_of(section, key));
        return *v;
    };
    auto existing_file = [&](const std::string& p, std::string_view what) {
        auto path = resolve(base_dir, p);
        if (!std::filesystem::is_regular_file(path))
            throw ConfigError(std::string(what) + " not found: " + path.string());
        return path;
    };

    // [data]
    cfg.dataset = existing_file(required_string("data", "path"), "dataset");
    cfg.target = required_string("data", "target");
    cfg.has_header = doc.get_bool("data", "has_header").value_or(true);
    try {
        if (auto t = doc.get_string("data", "task")) cfg.task = parse_task(*t);
    } catch (const SchemaError& e) {
        throw ConfigError(e.what());
    }
    if (auto p = doc.get_string("data", "schema_overrides")) cfg.schema_overrides = existing_file(*p, "schema override file");
    cfg.dataset_name = doc.get_string("data", "name").value_or(cfg.dataset.stem().string());

    // [split]
    cfg.split_ratio = doc.get_double("split", "ratio").value_or(0.9);
    if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0)) throw ConfigError("split.ratio must lie in (0, 1)");
    cfg.split_seed = require_seed(doc, "split");

    // [protocol]
    const auto protocol = doc.get_string("protocol", "kind").value_or("baseline");
    try {
        cfg.protocol = parse_protocol_tag(protocol);
    } catch (const CodecError&) {
        throw ConfigError("unknown protocol.kind '" + protocol + "'");
    }
    if (cfg.protocol == ProtocolTag::expert)
        cfg.descriptor_file = existing_file(required_string("protocol", "descriptor_file"), "descriptor file");
    if (cfg.protocol == ProtocolTag::novel_mapping) cfg.field_name = required_string("protocol", "field_name");

    // [endpoint]
    if (cfg.protocol == ProtocolTag::llm_guided || cfg.protocol == ProtocolTag::novel_mapping) {
        cfg.chat.base_url = required_string("endpoint", "url");
        cfg.chat.model_id = doc.get_string("endpoint", "model").value_or("gpt-3.5-turbo");
    }
    if (auto v = doc.get_string("endpoint", "auth_token_env")) cfg.chat.auth_token_env = *v;
    if (auto v = doc.get_double("endpoint", "timeout")) cfg.chat.timeout_seconds = *v;
    if (auto v = doc.get_int("endpoint", "max_retries")) cfg.chat.max_retries = static_cast<int>(*v);
    if (auto v = doc.get_int("endpoint", "backoff_ms")) cfg.chat.backoff_ms = static_cast<int>(*v);
    if (cfg.protocol == ProtocolTag::llm_guided || cfg.protocol == ProtocolTag::novel_mapping) cfg.chat.validate();

    // [encode]
    const auto order = doc.get_string("encode", "order").value_or("fixed");
    if (order == "fixed") cfg.order = ColumnOrder::fixed;
    else if (order == "permuted") cfg.order = ColumnOrder::permuted;
    else throw ConfigError("encode.order must be fixed or permuted");
    cfg.encode_seed = require_seed(doc, "encode");

    // [backend]
    const auto backend = doc.get_string("backend", "kind").value_or("ngram");
    if (backend == "ngram") {
        cfg.backend = BackendKind::ngram;
        cfg.ngram_order = static_cast<int>(doc.get_int("backend", "order").value_or(3));
        if (cfg.ngram_order < 1) throw ConfigError("backend.order must be >= 1");
        cfg.granularity = parse_granularity(doc.get_string("backend", "granularity").value_or("word"));
    } else if (backend == "remote") {
        cfg.backend = BackendKind::remote;
        cfg.remote.base_url = required_string("backend", "url");
        if (auto v = doc.get_double("backend", "timeout")) cfg.remote.timeout_seconds = *v;
        if (auto v = doc.get_int("backend", "poll_interval_ms")) cfg.remote.poll_interval_ms = static_cast<int>(*v);
        if (auto v = doc.get_double("backend", "max_wait")) cfg.remote.max_wait_seconds = *v;
        if (auto v = doc.get_string("backend", "auth_token_env")) cfg.remote.auth_token_env = *v;
        cfg.checkpoint_eval = doc.get_bool("backend", "checkpoint_eval").value_or(false);
    } else {
        throw ConfigError("backend.kind must be ngram or remote");
    }

    // [finetune]
    if (auto v = doc.get_int("finetune", "epochs")) cfg.finetune.epochs = static_cast<int>(*v);
    if (auto v = doc.get_double("finetune", "learning_rate")) cfg.finetune.learning_rate = *v;
    if (auto v = doc.get_string("finetune", "mode")) cfg.finetune.mode = parse_finetune_mode(*v);
    if (auto v = doc.get_int("finetune", "rank_r")) cfg.finetune.rank_r = static_cast<int>(*v);
    if (auto v = doc.get_double("finetune", "alpha")) cfg.finetune.alpha = *v;
    if (auto v = doc.get_string("finetune", "base_model")) cfg.finetune.base_model_id = *v;
    cfg.finetune.validate();

    // [generate]
    if (auto v = doc.get_int("generate", "max_new_tokens")) {
        cfg.gen.max_new_tokens = static_cast<int>(*v);
        cfg.auto_max_new_tokens = false;
    }
    cfg.gen.temperature = doc.get_double("generate", "temperature").value_or(0.7);
    cfg.gen.count = static_cast<int>(doc.get_int("generate", "batch").value_or(1));
    cfg.gen.seed = require_seed(doc, "generate");
    cfg.gen.validate();

    // [sampling]
    if (auto v = doc.get_int("sampling", "n_target")) {
        if (*v < 1) throw ConfigError("sampling.n_target must be >= 1");
        cfg.n_target = static_cast<std::size_t>(*v);
    }
    if (auto v = doc.get_int("sampling", "max_attempts")) {
        if (*v < 1) throw ConfigError("sampling.max_attempts must be >= 1");
        cfg.max_attempts = static_cast<std::size_t>(*v);
    }
    cfg.bounds = parse_bounds(doc.get_string("sampling", "bounds").value_or("none"));
    cfg.sampling_seed = require_seed(doc, "sampling");

    // [evaluate]
    cfg.folds = static_cast<int>(doc.get_int("evaluate", "folds").value_or(5));
    if (cfg.folds < 2) throw ConfigError("evaluate.folds must be >= 2");
    cfg.cv_seed = require_seed(doc, "evaluate", "cv_seed");
    cfg.forest_seed = require_seed(doc, "evaluate", "forest_seed");

    // [output]
    if (auto v = doc.get_string("output", "dir")) cfg.out_dir = resolve(base_dir, *v);
    else cfg.out_dir = base_dir / "run";
    return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return parse_pipeline_config(buf.str(), base);
}

}  // namespace tabprompt
