#pragma once

// Shared test fixtures: in-process HTTP servers, random tables, temp dirs.

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "tabprompt/table.hpp"

namespace testing {

/// httplib server on an ephemeral localhost port, stopped on destruction.
class LocalServer {
public:
    explicit LocalServer(const std::function<void(httplib::Server&)>& routes) {
        routes(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    LocalServer(const LocalServer&) = delete;
    LocalServer& operator=(const LocalServer&) = delete;

    int port() const { return port_; }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

/// A port nothing listens on (bound then released).
inline int unused_port() {
    httplib::Server probe;
    int port = probe.bind_to_any_port("127.0.0.1");
    return port;
}

/// Minimal stand-in for the fine-tuning service: one job at a time, training
/// finishes after `polls_until_done` status calls, generation replays corpus
/// lines that start with the requested prefix.
class FakeFinetuneServer {
public:
    explicit FakeFinetuneServer(int polls_until_done = 2)
        : polls_until_done_(polls_until_done), server_([this](httplib::Server& s) { install(s); }) {}

    std::string url() const { return server_.url(); }
    int finetune_calls() const { return finetune_calls_; }
    nlohmann::json last_finetune_body() const {
        std::lock_guard lock(mutex_);
        return last_body_;
    }
    nlohmann::json last_generate_body() const {
        std::lock_guard lock(mutex_);
        return last_generate_;
    }

private:
    void install(httplib::Server& s) {
        using nlohmann::json;
        s.Post("/finetune", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex_);
            ++finetune_calls_;
            auto body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.contains("corpus") || body["corpus"].empty() ||
                body["config"].value("epochs", 0) < 1) {
                res.status = 400;
                res.set_content(R"({"error":"invalid request"})", "application/json");
                return;
            }
            if (!job_id_.empty() && state_ != "done" && state_ != "failed") {
                res.status = 409;
                res.set_content(R"({"error":"job already active"})", "application/json");
                return;
            }
            last_body_ = body;
            corpus_ = body["corpus"].get<std::vector<std::string>>();
            epochs_ = body["config"]["epochs"].get<int>();
            job_id_ = "job-" + std::to_string(finetune_calls_);
            state_ = "running";
            polls_ = 0;
            res.status = 202;
            res.set_content(json{{"job_id", job_id_}}.dump(), "application/json");
        });
        s.Get(R"(/status/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex_);
            if (req.matches[1] != job_id_) {
                res.status = 404;
                res.set_content(R"({"error":"unknown job"})", "application/json");
                return;
            }
            if (state_ == "running" && ++polls_ >= polls_until_done_) state_ = "done";
            json losses = json::array();
            const int n = state_ == "done" ? epochs_ : std::min(polls_, epochs_);
            for (int e = 0; e < n; ++e) losses.push_back(2.0 / (e + 1));
            json checkpoints = json::array();
            if (state_ == "done")
                for (int e = 1; e <= epochs_; ++e) checkpoints.push_back("epoch-" + std::to_string(e));
            res.set_content(json{{"job_id", job_id_}, {"state", state_}, {"losses", losses},
                                 {"checkpoints", checkpoints}}
                                .dump(),
                            "application/json");
        });
        s.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex_);
            auto body = json::parse(req.body, nullptr, false);
            last_generate_ = body;
            if (state_ != "done") {
                res.status = 409;
                res.set_content(R"({"error":"not trained"})", "application/json");
                return;
            }
            const auto prefix = body["prompt_prefix"].get<std::string>();
            const int count = body["params"]["count"].get<int>();
            const auto seed = body["params"]["seed"].get<std::uint64_t>();
            std::vector<std::string> matching;
            for (const auto& line : corpus_)
                if (line.rfind(prefix, 0) == 0) matching.push_back(line);
            std::mt19937_64 rng(seed);
            json texts = json::array();
            for (int i = 0; i < count; ++i) {
                if (matching.empty()) {
                    texts.push_back(prefix);
                } else {
                    std::uniform_int_distribution<std::size_t> pick(0, matching.size() - 1);
                    texts.push_back(matching[pick(rng)]);
                }
            }
            res.set_content(json{{"texts", texts}}.dump(), "application/json");
        });
    }

    mutable std::mutex mutex_;
    int polls_until_done_;
    int finetune_calls_ = 0;
    std::string job_id_;
    std::string state_;
    int polls_ = 0;
    int epochs_ = 0;
    std::vector<std::string> corpus_;
    nlohmann::json last_body_;
    nlohmann::json last_generate_;
    LocalServer server_;
};

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("tabprompt_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Random lexeme drawn from a mix of integers, decimals, exponents and words.
inline std::string random_numeric_lexeme(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> style(0, 3);
    std::uniform_int_distribution<int> small(-500, 500);
    switch (style(rng)) {
        case 0: return std::to_string(small(rng));
        case 1: return std::to_string(small(rng)) + "." + std::to_string(std::abs(small(rng)) % 100);
        case 2: return std::to_string(std::abs(small(rng)) % 9 + 1) + "e" + std::to_string(small(rng) % 4);
        default: return "0.00" + std::to_string(std::abs(small(rng)));
    }
}

inline std::string random_word(std::mt19937_64& rng) {
    static const std::vector<std::string> parts = {"alpha", "beta", "gamma", "is", "x", "red", "blue",
                                                   "this", "isle", "north", "south", "-", "q7", "zeta"};
    std::uniform_int_distribution<std::size_t> pick(0, parts.size() - 1);
    std::uniform_int_distribution<int> len(1, 3);
    std::string w;
    int n = len(rng);
    for (int i = 0; i < n; ++i) {
        if (i) w += (rng() % 2 ? " " : "_");
        w += parts[pick(rng)];
    }
    // A cell may not contain " is " (reserved separator).
    while (w.find(" is ") != std::string::npos) w.replace(w.find(" is "), 4, "_is_");
    return w;
}

struct RandomTable {
    tabprompt::Table table;
    std::vector<bool> numeric;  // per column
};

/// Random table with `cols` columns of mixed kinds and random column names.
inline RandomTable random_table(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    RandomTable out;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < cols; ++c) {
        names.push_back("col" + std::to_string(c) + (rng() % 3 == 0 ? " is size" : "") + (rng() % 4 == 0 ? "_x" : ""));
        out.numeric.push_back(rng() % 2 == 0);
    }
    std::vector<tabprompt::Record> data;
    for (std::size_t r = 0; r < rows; ++r) {
        tabprompt::Record rec;
        for (std::size_t c = 0; c < cols; ++c)
            rec.push_back(out.numeric[c] ? random_numeric_lexeme(rng) : random_word(rng));
        data.push_back(std::move(rec));
    }
    out.table = tabprompt::Table(std::move(names), std::move(data));
    return out;
}

/// Deterministic 500-row style regression table: x1 numeric, x2 categorical,
/// x3 numeric, y = 3 x1 + level effect - x3 + noise.
inline tabprompt::Table toy_regression(std::size_t rows, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> x1(0, 9);
    std::uniform_int_distribution<int> x3(0, 4);
    std::uniform_int_distribution<int> lvl(0, 2);
    std::normal_distribution<double> noise(0.0, 0.5);
    const std::vector<std::string> levels = {"low", "mid", "high"};
    std::vector<tabprompt::Record> data;
    for (std::size_t r = 0; r < rows; ++r) {
        int a = x1(rng), c = x3(rng), l = lvl(rng);
        double y = 3.0 * a + 2.0 * l - c + noise(rng);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", y);
        data.push_back({std::to_string(a), levels[static_cast<std::size_t>(l)], std::to_string(c), buf});
    }
    return tabprompt::Table({"x1", "x2", "x3", "y"}, std::move(data));
}

/// Small classification table: two numeric features and a 3-level label
/// mostly determined by the first feature.
inline tabprompt::Table toy_classification(std::size_t rows, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> a(0, 29);
    std::uniform_int_distribution<int> b(0, 9);
    std::uniform_int_distribution<int> flip(0, 9);
    const std::vector<std::string> labels = {"g", "h", "k"};
    std::vector<tabprompt::Record> data;
    for (std::size_t r = 0; r < rows; ++r) {
        int x = a(rng), z = b(rng);
        std::size_t label = static_cast<std::size_t>(x / 10);
        if (flip(rng) == 0) label = (label + 1) % 3;
        data.push_back({std::to_string(x), std::to_string(z), labels[label]});
    }
    return tabprompt::Table({"fA", "fB", "class"}, std::move(data));
}

}  // namespace testing
