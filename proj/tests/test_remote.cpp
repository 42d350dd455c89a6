#include <doctest.h>

#include "support.hpp"
#include "tabprompt/errors.hpp"
#include "tabprompt/remote.hpp"

using namespace tabprompt;

namespace {

RemoteEndpoint endpoint_for(const std::string& url) {
    RemoteEndpoint e;
    e.base_url = url;
    e.timeout_seconds = 5;
    e.poll_interval_ms = 5;
    e.max_wait_seconds = 10;
    return e;
}

std::vector<std::string> small_corpus() {
    std::vector<std::string> c;
    for (int i = 0; i < 100; ++i) c.push_back("age is " + std::to_string(20 + i % 40) + ", job is j" + std::to_string(i % 5));
    return c;
}

FinetuneConfig quick() {
    FinetuneConfig f;
    f.epochs = 5;
    return f;
}

}  // namespace

TEST_CASE("finetune, poll and generate against a fake service") {
    testing::FakeFinetuneServer server(3);
    auto ep = endpoint_for(server.url());
    auto corpus = small_corpus();

    CHECK_THROWS_AS(remote_generate(ep, "age is", GenParams{}), EndpointError);

    auto id = remote_finetune(ep, corpus, quick());
    CHECK_FALSE(id.empty());
    auto body = server.last_finetune_body();
    CHECK(body["corpus"].size() == 100);
    CHECK(body["config"]["epochs"] == 5);
    CHECK(body["config"]["mode"] == "full");
    CHECK_FALSE(body["config"].contains("rank_r"));

    auto first = remote_status(ep, id);
    CHECK(first.state == JobState::running);
    CHECK(first.losses.size() <= 5);

    try {
        remote_finetune(ep, corpus, quick());
        FAIL("expected 409");
    } catch (const EndpointError& e) {
        CHECK(e.status() == 409);
    }

    auto done = wait_for_job(ep, id);
    CHECK(done.state == JobState::done);
    CHECK(done.losses.size() == 5);
    CHECK(done.checkpoints.size() == 5);

    GenParams g;
    g.count = 3;
    g.seed = 8;
    auto texts = remote_generate(ep, "age is", g);
    REQUIRE(texts.size() == 3);
    for (const auto& t : texts) CHECK(t.rfind("age is", 0) == 0);
    auto gen_body = server.last_generate_body();
    CHECK(gen_body["params"]["seed"] == 8);
    CHECK_FALSE(gen_body.contains("checkpoint"));
    remote_generate(ep, "age is", g, std::string("epoch-2"));
    CHECK(server.last_generate_body()["checkpoint"] == "epoch-2");

    try {
        remote_status(ep, "no-such-job");
        FAIL("expected 404");
    } catch (const EndpointError& e) {
        CHECK(e.status() == 404);
    }
}

TEST_CASE("low-rank settings travel with the request") {
    testing::FakeFinetuneServer server(1);
    auto cfg = quick();
    cfg.mode = FinetuneMode::low_rank;
    remote_finetune(endpoint_for(server.url()), small_corpus(), cfg);
    auto body = server.last_finetune_body();
    CHECK(body["config"]["mode"] == "low_rank");
    CHECK(body["config"]["rank_r"] == 16);
    CHECK(body["config"]["alpha"] == 32.0);
}

TEST_CASE("RemoteBackend contract") {
    testing::FakeFinetuneServer server(2);
    RemoteBackend backend(endpoint_for(server.url()));
    CHECK_THROWS_AS(backend.generate("age is", GenParams{}), StateError);
    std::vector<std::string> empty;
    CHECK_THROWS_AS(backend.finetune(empty, quick()), TrainError);

    auto report = backend.finetune(small_corpus(), quick());
    CHECK(report.status == "trained");
    CHECK(report.losses.size() == 5);
    CHECK(report.losses.back() <= report.losses.front());
    CHECK(backend.job_id() == report.job_id);

    GenParams g;
    g.count = 4;
    auto texts = backend.generate("job is", g);
    CHECK(texts.size() == 4);
    backend.use_checkpoint("epoch-1");
    backend.generate("age is", g);
    CHECK(server.last_generate_body()["checkpoint"] == "epoch-1");
    CHECK(backend.id() == "remote:" + server.url());
}

TEST_CASE("server down surfaces as EndpointError") {
    auto ep = endpoint_for("http://127.0.0.1:" + std::to_string(testing::unused_port()));
    ep.timeout_seconds = 1;
    CHECK_THROWS_AS(remote_finetune(ep, small_corpus(), quick()), EndpointError);
    RemoteBackend backend(ep);
    CHECK_THROWS_AS(backend.finetune(small_corpus(), quick()), EndpointError);
}

TEST_CASE("slow responses time out") {
    testing::LocalServer server([](httplib::Server& s) {
        s.Get(R"(/status/(.+))", [](const httplib::Request&, httplib::Response& res) {
            std::this_thread::sleep_for(std::chrono::milliseconds(1500));
            res.set_content(R"({"state":"running"})", "application/json");
        });
    });
    auto ep = endpoint_for(server.url());
    ep.timeout_seconds = 0.2;
    try {
        remote_status(ep, "j");
        FAIL("expected timeout");
    } catch (const EndpointError& e) {
        CHECK(std::string(e.what()).find("timeout") != std::string::npos);
    }
}

TEST_CASE("failed jobs and stalled jobs") {
    testing::LocalServer server([](httplib::Server& s) {
        s.Get("/status/bad", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"job_id":"bad","state":"failed","error":"out of memory"})", "application/json");
        });
        s.Get("/status/slow", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"job_id":"slow","state":"running","losses":[1.0]})", "application/json");
        });
    });
    auto ep = endpoint_for(server.url());
    try {
        wait_for_job(ep, "bad");
        FAIL("expected TrainError");
    } catch (const TrainError& e) {
        CHECK(std::string(e.what()).find("out of memory") != std::string::npos);
    }
    ep.max_wait_seconds = 0.05;
    CHECK_THROWS_AS(wait_for_job(ep, "slow"), EndpointError);
}
