#pragma once

#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabprompt/backend.hpp"

namespace tabprompt {

/// Where the fine-tuning server lives and how patiently to talk to it.
struct RemoteEndpoint {
    std::string base_url;               // e.g. "http://127.0.0.1:8000"
    double timeout_seconds = 30.0;      // per HTTP request
    int poll_interval_ms = 1000;        // /status polling while a job runs
    double max_wait_seconds = 0.0;      // 0 waits indefinitely
    std::string auth_token_env;         // optional bearer token variable
};

enum class JobState { queued, running, done, failed };

std::string_view to_string(JobState state);
JobState parse_job_state(std::string_view text);

struct JobStatus {
    std::string job_id;
    JobState state = JobState::queued;
    std::vector<double> losses;
    std::vector<std::string> checkpoints;
    std::string error;  // server-reported failure message, if any
};

/// POST /finetune. Returns the job id. Non-2xx responses raise
/// EndpointError(status, body); 409 means another job is active.
std::string remote_finetune(const RemoteEndpoint& endpoint, std::span<const std::string> corpus,
                            const FinetuneConfig& config);

/// GET /status/{job_id}.
JobStatus remote_status(const RemoteEndpoint& endpoint, std::string_view job_id);

/// Polls /status until the job is done or failed. Throws TrainError when the
/// job fails and EndpointError when max_wait_seconds elapses.
JobStatus wait_for_job(const RemoteEndpoint& endpoint, std::string_view job_id);

/// POST /generate. 409 (not trained yet) surfaces as EndpointError(409).
std::vector<std::string> remote_generate(const RemoteEndpoint& endpoint, std::string_view prefix,
                                         const GenParams& params,
                                         const std::optional<std::string>& checkpoint = std::nullopt);

class RemoteBackend final : public Backend {
public:
    explicit RemoteBackend(RemoteEndpoint endpoint, std::optional<std::string> job_id = std::nullopt);

    /// Submits the corpus, then blocks until the job finishes. One job at a
    /// time per client.
    TrainingReport finetune(std::span<const std::string> corpus, const FinetuneConfig& config) override;
    std::vector<std::string> generate(std::string_view prefix, const GenParams& params) const override;
    std::string id() const override;

    /// Generate from an intermediate snapshot instead of the final model.
    void use_checkpoint(std::optional<std::string> tag) { checkpoint_ = std::move(tag); }
    const std::optional<std::string>& job_id() const noexcept { return job_id_; }

private:
    RemoteEndpoint endpoint_;
    std::optional<std::string> job_id_;
    std::optional<std::string> checkpoint_;
    std::mutex finetune_mutex_;
};

}  // namespace tabprompt
