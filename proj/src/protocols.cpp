#include "tabprompt/protocols.hpp"

#include <httplib.h>

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <thread>

#include "tabprompt/errors.hpp"
#include "tabprompt/http_util.hpp"

namespace tabprompt {

namespace {

using json = nlohmann::json;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        out.push_back(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return out;
}

// Drops a leading "12. " or "12) " enumeration marker.
std::string_view strip_index(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) return trim(line.substr(i + 1));
    return line;
}

std::string join(std::span<const std::string> items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out.append(sep);
        out.append(items[i]);
    }
    return out;
}

// Builds the set, reporting invariant breaches as ProtocolError.
DescriptorSet make_checked_set(std::vector<DescriptorEntry> entries, ProtocolTag tag) {
    std::map<std::string, std::string> owner;
    for (const auto& e : entries) {
        auto clean = sanitize_descriptor(e.descriptor);
        if (clean.empty()) throw ProtocolError("empty descriptor for column '" + e.column + "'");
        auto [it, inserted] = owner.emplace(clean, e.column);
        if (!inserted)
            throw ProtocolError("duplicate descriptor '" + clean + "' for columns '" + it->second + "' and '" +
                                e.column + "'");
    }
    return DescriptorSet(std::move(entries), tag);
}

// Matches "<name>: <text>" against the known names, longest name first.
std::optional<std::pair<std::size_t, std::string>> match_named_line(std::string_view line,
                                                                     std::span<const std::string> names) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& n = names[i];
        if (line.size() > n.size() && line.substr(0, n.size()) == n && line[n.size()] == ':' &&
            (!best || n.size() > names[*best].size()))
            best = i;
    }
    if (!best) return std::nullopt;
    return std::make_pair(*best, std::string(trim(line.substr(names[*best].size() + 1))));
}

DescriptorSet parse_named_lines(std::string_view text, std::span<const std::string> names, ProtocolTag tag,
                                bool allow_index) {
    std::vector<std::optional<std::string>> found(names.size());
    for (auto raw : lines_of(text)) {
        auto line = trim(raw);
        if (allow_index) line = strip_index(line);
        if (line.empty()) continue;
        auto hit = match_named_line(line, names);
        if (!hit || found[hit->first]) continue;
        found[hit->first] = std::move(hit->second);
    }
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < names.size(); ++i)
        if (!found[i]) missing.push_back(names[i]);
    if (!missing.empty()) throw ProtocolError("missing descriptors for columns: [" + join(missing, ", ") + "]");

    std::vector<DescriptorEntry> entries;
    for (std::size_t i = 0; i < names.size(); ++i) entries.push_back({names[i], *found[i]});
    return make_checked_set(std::move(entries), tag);
}

}  // namespace

void ChatEndpointConfig::validate() const {
    if (base_url.empty()) throw ConfigError("chat endpoint base_url is empty");
    if (!(timeout_seconds > 0.0)) throw ConfigError("chat endpoint timeout must be positive");
    if (max_retries < 0) throw ConfigError("chat endpoint max_retries must be >= 0");
    if (backoff_ms < 0) throw ConfigError("chat endpoint backoff must be >= 0");
}

DescriptorSet baseline_descriptors(const TableSchema& schema) {
    std::vector<DescriptorEntry> entries;
    for (const auto& spec : schema.specs) entries.push_back({spec.name, spec.name});
    return make_checked_set(std::move(entries), ProtocolTag::baseline);
}

DescriptorSet expert_descriptors(const TableSchema& schema, std::string_view file_text) {
    auto names = schema.column_names();
    return parse_named_lines(file_text, names, ProtocolTag::expert, false);
}

DescriptorSet expert_descriptors(const TableSchema& schema, const std::filesystem::path& descriptor_file) {
    std::ifstream in(descriptor_file);
    if (!in) throw ProtocolError("cannot open descriptor file " + descriptor_file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return expert_descriptors(schema, std::string_view(buf.str()));
}

DescriptorQuery build_llm_guided_query(std::string_view dataset_name, std::span<const std::string> column_names) {
    if (dataset_name.empty()) throw ProtocolError("empty dataset name");
    if (column_names.empty()) throw ProtocolError("empty column list");
    DescriptorQuery q;
    q.kind = QueryKind::llm_guided;
    q.expected_count = column_names.size();
    q.text = "For a dataset named " + std::string(dataset_name) + ", the given column names are " +
             join(column_names, ", ") +
             ". You need to provide a short one-line description of each feature.";
    return q;
}

DescriptorQuery build_novel_mapping_query(std::span<const std::string> ranges, std::string_view field_name) {
    if (ranges.empty()) throw ProtocolError("empty range list");
    if (field_name.empty()) throw ProtocolError("empty field name");
    DescriptorQuery q;
    q.kind = QueryKind::novel_mapping;
    q.expected_count = ranges.size();
    q.text =
        "I have a dataset that does not have meaningful names for features. Given the ranges of the columns are " +
        join(ranges, ", ") + ", suggest a term/phenomenon from " + std::string(field_name) +
        " that can take values in each of the given ranges. Rules are: (i) the terms/phenomenon should be from "
        "the same field, (ii) no two suggestions can be identical.";
    return q;
}

std::string request_descriptors(const ChatEndpointConfig& config, const DescriptorQuery& query) {
    config.validate();
    const char* token = std::getenv(config.auth_token_env.c_str());
    if (token == nullptr || *token == '\0')
        throw ConfigError("auth token variable " + config.auth_token_env + " is not set");

    const auto url = split_url(config.base_url);
    httplib::Client client(url.origin);
    const auto secs = static_cast<time_t>(config.timeout_seconds);
    const auto usecs = static_cast<time_t>((config.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    client.set_bearer_token_auth(token);

    json body = {{"model", config.model_id},
                 {"messages", json::array({{{"role", "user"}, {"content", query.text}}})}};
    const auto payload = body.dump();

    std::string last_failure;
    int last_status = 0;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long long>(config.backoff_ms)
                                                                  << (attempt - 1)));
        auto res = client.Post(url.path, payload, "application/json");
        if (!res) {
            last_failure = "transport failure: " + httplib::to_string(res.error());
            last_status = 0;
            continue;
        }
        if (res->status >= 500 || res->status == 429) {
            last_failure = "HTTP " + std::to_string(res->status);
            last_status = res->status;
            continue;
        }
        if (res->status < 200 || res->status >= 300)
            throw EndpointError("HTTP " + std::to_string(res->status), res->status, res->body);
        try {
            auto doc = json::parse(res->body);
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw EndpointError(std::string("malformed chat response: ") + e.what(), res->status, res->body);
        }
    }
    throw EndpointError("retries exhausted after " + std::to_string(config.max_retries + 1) +
                            " attempts; last: " + last_failure,
                        last_status);
}

DescriptorSet parse_descriptor_response(std::string_view response, std::span<const std::string> column_names) {
    return parse_named_lines(response, column_names, ProtocolTag::llm_guided, true);
}

DescriptorSet parse_mapping_response(std::string_view response, std::span<const std::string> column_names) {
    if (column_names.empty()) throw ProtocolError("no columns to map");
    std::vector<std::string> suggestions;
    for (auto raw : lines_of(response)) {
        auto line = strip_index(trim(raw));
        if (!line.empty()) suggestions.emplace_back(line);
    }
    if (suggestions.size() != column_names.size())
        throw ProtocolError("expected " + std::to_string(column_names.size()) + " suggestions, got " +
                            std::to_string(suggestions.size()));
    std::vector<DescriptorEntry> entries;
    for (std::size_t i = 0; i < column_names.size(); ++i) entries.push_back({column_names[i], suggestions[i]});
    return make_checked_set(std::move(entries), ProtocolTag::novel_mapping);
}

DescriptorSet describe_via_endpoint(
    const ChatEndpointConfig& config, const DescriptorQuery& query,
    const std::function<DescriptorSet(std::string_view)>& parse,
    const std::function<void(const std::string&, const std::string&)>& on_response) {
    DescriptorQuery current = query;
    for (int attempt = 0;; ++attempt) {
        auto response = request_descriptors(config, current);
        if (on_response) on_response(current.text, response);
        try {
            return parse(response);
        } catch (const ProtocolError&) {
            if (attempt >= config.max_retries) throw;
            current.text = query.text + "\n" + std::string(kRequeryInstruction);
        }
    }
}

}  // namespace tabprompt
