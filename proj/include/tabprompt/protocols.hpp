#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabprompt/codec.hpp"
#include "tabprompt/table.hpp"

namespace tabprompt {

enum class QueryKind { llm_guided, novel_mapping };

struct DescriptorQuery {
    QueryKind kind = QueryKind::llm_guided;
    std::string text;
    std::size_t expected_count = 0;
};

struct ChatEndpointConfig {
    std::string base_url;  // full URL of the chat-completions route
    std::string model_id;
    std::string auth_token_env = "OPENAI_API_KEY";
    double timeout_seconds = 60.0;
    int max_retries = 2;
    int backoff_ms = 500;  // first retry delay; doubles per attempt

    void validate() const;
};

DescriptorSet baseline_descriptors(const TableSchema& schema);

/// Expert file lines: "column_name: descriptor text".
DescriptorSet expert_descriptors(const TableSchema& schema, std::string_view file_text);
DescriptorSet expert_descriptors(const TableSchema& schema, const std::filesystem::path& descriptor_file);

DescriptorQuery build_llm_guided_query(std::string_view dataset_name, std::span<const std::string> column_names);
DescriptorQuery build_novel_mapping_query(std::span<const std::string> ranges, std::string_view field_name);

/// Sends one user message and returns choices[0].message.content. Retries
/// transport failures and 5xx/429 responses with exponential backoff.
std::string request_descriptors(const ChatEndpointConfig& config, const DescriptorQuery& query);

DescriptorSet parse_descriptor_response(std::string_view response, std::span<const std::string> column_names);

/// One suggestion per line, optionally "index. suggestion"; assigned to
/// `column_names` positionally.
DescriptorSet parse_mapping_response(std::string_view response, std::span<const std::string> column_names);

inline constexpr std::string_view kRequeryInstruction = "Answer with exactly one line per feature.";

/// Queries the endpoint and parses the answer. On ProtocolError the query is
/// re-sent with kRequeryInstruction appended, up to config.max_retries times.
/// `on_response` sees every raw response (for logging and caching).
DescriptorSet describe_via_endpoint(
    const ChatEndpointConfig& config, const DescriptorQuery& query,
    const std::function<DescriptorSet(std::string_view)>& parse,
    const std::function<void(const std::string& query_text, const std::string& response)>& on_response = {});

}  // namespace tabprompt
