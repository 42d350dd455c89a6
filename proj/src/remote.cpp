#include "tabprompt/remote.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <thread>

#include "tabprompt/errors.hpp"
#include "tabprompt/http_util.hpp"

namespace tabprompt {

namespace {

using json = nlohmann::json;

struct Connection {
    httplib::Client client;
    std::string path_prefix;
};

std::unique_ptr<Connection> connect(const RemoteEndpoint& endpoint) {
    if (endpoint.base_url.empty()) throw ConfigError("remote endpoint URL is empty");
    if (!(endpoint.timeout_seconds > 0.0)) throw ConfigError("remote timeout must be positive");
    auto url = split_url(endpoint.base_url);
    auto conn = std::make_unique<Connection>(Connection{httplib::Client(url.origin), url.path});
    while (!conn->path_prefix.empty() && conn->path_prefix.back() == '/') conn->path_prefix.pop_back();

    const auto secs = static_cast<time_t>(endpoint.timeout_seconds);
    const auto usecs = static_cast<time_t>((endpoint.timeout_seconds - static_cast<double>(secs)) * 1e6);
    conn->client.set_connection_timeout(secs, usecs);
    conn->client.set_read_timeout(secs, usecs);
    conn->client.set_write_timeout(secs, usecs);
    if (!endpoint.auth_token_env.empty()) {
        if (const char* token = std::getenv(endpoint.auth_token_env.c_str()); token && *token)
            conn->client.set_bearer_token_auth(token);
    }
    return conn;
}

json expect_ok(const httplib::Result& res, std::string_view what) {
    if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
        throw EndpointError(std::string(what) + ": " + (timed_out ? "timeout" : httplib::to_string(err)));
    }
    if (res->status < 200 || res->status >= 300)
        throw EndpointError(std::string(what) + ": HTTP " + std::to_string(res->status), res->status, res->body);
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw EndpointError(std::string(what) + ": malformed JSON response", res->status, res->body);
    }
}

json config_json(const FinetuneConfig& config) {
    json j = {{"epochs", config.epochs},
              {"learning_rate", config.learning_rate},
              {"mode", to_string(config.mode)},
              {"base_model_id", config.base_model_id}};
    if (config.mode == FinetuneMode::low_rank) {
        j["rank_r"] = config.rank_r;
        j["alpha"] = config.alpha;
    }
    return j;
}

JobStatus status_from_json(const json& doc) {
    JobStatus s;
    s.job_id = doc.value("job_id", std::string{});
    s.state = parse_job_state(doc.at("state").get<std::string>());
    if (doc.contains("losses")) s.losses = doc.at("losses").get<std::vector<double>>();
    if (doc.contains("checkpoints")) {
        for (const auto& c : doc.at("checkpoints")) s.checkpoints.push_back(c.is_string() ? c.get<std::string>() : c.dump());
    }
    if (doc.contains("error") && doc.at("error").is_string()) s.error = doc.at("error").get<std::string>();
    return s;
}

}  // namespace

std::string_view to_string(JobState state) {
    switch (state) {
        case JobState::queued: return "queued";
        case JobState::running: return "running";
        case JobState::done: return "done";
        case JobState::failed: return "failed";
    }
    return "queued";
}

JobState parse_job_state(std::string_view text) {
    if (text == "queued") return JobState::queued;
    if (text == "running") return JobState::running;
    if (text == "done") return JobState::done;
    if (text == "failed") return JobState::failed;
    throw EndpointError("unknown job state '" + std::string(text) + "'");
}

std::string remote_finetune(const RemoteEndpoint& endpoint, std::span<const std::string> corpus,
                            const FinetuneConfig& config) {
    if (corpus.empty()) throw TrainError("empty corpus");
    config.validate();
    auto conn = connect(endpoint);
    json body = {{"corpus", std::vector<std::string>(corpus.begin(), corpus.end())}, {"config", config_json(config)}};
    auto doc = expect_ok(conn->client.Post(conn->path_prefix + "/finetune", body.dump(), "application/json"),
                         "POST /finetune");
    if (!doc.contains("job_id")) throw EndpointError("POST /finetune: response lacks job_id", 0, doc.dump());
    const auto& id = doc.at("job_id");
    return id.is_string() ? id.get<std::string>() : id.dump();
}

JobStatus remote_status(const RemoteEndpoint& endpoint, std::string_view job_id) {
    auto conn = connect(endpoint);
    auto doc = expect_ok(conn->client.Get(conn->path_prefix + "/status/" + std::string(job_id)), "GET /status");
    try {
        auto s = status_from_json(doc);
        if (s.job_id.empty()) s.job_id = std::string(job_id);
        return s;
    } catch (const json::exception& e) {
        throw EndpointError(std::string("GET /status: unexpected body: ") + e.what(), 200, doc.dump());
    }
}

JobStatus wait_for_job(const RemoteEndpoint& endpoint, std::string_view job_id) {
    const auto start = std::chrono::steady_clock::now();
    while (true) {
        auto s = remote_status(endpoint, job_id);
        if (s.state == JobState::done) return s;
        if (s.state == JobState::failed)
            throw TrainError("remote job " + s.job_id + " failed" + (s.error.empty() ? "" : ": " + s.error));
        if (endpoint.max_wait_seconds > 0.0) {
            std::chrono::duration<double> waited = std::chrono::steady_clock::now() - start;
            if (waited.count() > endpoint.max_wait_seconds)
                throw EndpointError("timeout waiting for job " + std::string(job_id));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(endpoint.poll_interval_ms));
    }
}

std::vector<std::string> remote_generate(const RemoteEndpoint& endpoint, std::string_view prefix,
                                         const GenParams& params, const std::optional<std::string>& checkpoint) {
    params.validate();
    auto conn = connect(endpoint);
    json body = {{"prompt_prefix", prefix},
                 {"params",
                  {{"max_new_tokens", params.max_new_tokens},
                   {"temperature", params.temperature},
                   {"count", params.count},
                   {"seed", params.seed}}}};
    if (checkpoint) body["checkpoint"] = *checkpoint;
    auto doc = expect_ok(conn->client.Post(conn->path_prefix + "/generate", body.dump(), "application/json"),
                         "POST /generate");
    try {
        return doc.at("texts").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw EndpointError(std::string("POST /generate: unexpected body: ") + e.what(), 200, doc.dump());
    }
}

RemoteBackend::RemoteBackend(RemoteEndpoint endpoint, std::optional<std::string> job_id)
    : endpoint_(std::move(endpoint)), job_id_(std::move(job_id)) {}

TrainingReport RemoteBackend::finetune(std::span<const std::string> corpus, const FinetuneConfig& config) {
    std::lock_guard lock(finetune_mutex_);
    auto id = remote_finetune(endpoint_, corpus, config);
    job_id_ = id;
    auto status = wait_for_job(endpoint_, id);
    TrainingReport report;
    report.status = "trained";
    report.job_id = id;
    report.losses = std::move(status.losses);
    report.checkpoints = std::move(status.checkpoints);
    return report;
}

std::vector<std::string> RemoteBackend::generate(std::string_view prefix, const GenParams& params) const {
    if (!job_id_) throw StateError("remote backend has no fine-tuning job");
    return remote_generate(endpoint_, prefix, params, checkpoint_);
}

std::string RemoteBackend::id() const { return "remote:" + endpoint_.base_url; }

}  // namespace tabprompt
