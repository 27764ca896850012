#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pragmabench/providers.hpp"

using namespace pragmabench;
using namespace pragmabench::llm;
using nlohmann::json;

namespace {

CompletionRequest sample_request(const std::string& provider) {
    CompletionRequest request;
    request.provider_id = provider;
    request.model = "test-model";
    request.temperature = 0.0;
    request.max_tokens = 128;
    request.messages.push_back(ChatMessage{Role::System, "Be brief."});
    request.messages.push_back(ChatMessage{Role::User, "Is this sarcastic?"});
    return request;
}

// Starts an httplib server on a free port and stops it on destruction.
class StubServer {
public:
    explicit StubServer(const std::function<void(httplib::Server&)>& configure) {
        configure(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST_CASE("request bodies follow the provider dialects") {
    const CompletionRequest request = sample_request("any");

    const json openai = json::parse(build_provider_body(Dialect::OpenAiChat, request));
    CHECK(openai.at("model") == "test-model");
    CHECK(openai.at("messages").size() == 2);
    CHECK(openai.at("messages")[0].at("role") == "system");
    CHECK(openai.at("max_tokens") == 128);
    CHECK_FALSE(openai.contains("stop"));

    const json anthropic = json::parse(build_provider_body(Dialect::AnthropicMessages, request));
    CHECK(anthropic.at("system") == "Be brief.");
    CHECK(anthropic.at("messages").size() == 1);
    CHECK(anthropic.at("messages")[0].at("role") == "user");

    CompletionRequest stopped = request;
    stopped.stop = {"END"};
    const json with_stop = json::parse(build_provider_body(Dialect::AnthropicMessages, stopped));
    CHECK(with_stop.at("stop_sequences")[0] == "END");
}

TEST_CASE("responses parse assistant text and token usage") {
    const std::string openai_body = R"({
        "id": "chatcmpl-1",
        "choices": [{"message": {"role": "assistant", "content": "VERDICT: SARCASTIC"}}],
        "usage": {"prompt_tokens": 42, "completion_tokens": 7}
    })";
    const CompletionResponse openai = parse_provider_response(Dialect::OpenAiChat, openai_body);
    CHECK(openai.text == "VERDICT: SARCASTIC");
    CHECK(openai.prompt_tokens == 42);
    CHECK(openai.completion_tokens == 7);
    CHECK(openai.provider_meta.at("response_id") == "chatcmpl-1");

    const std::string anthropic_body = R"({
        "id": "msg-1",
        "content": [{"type": "text", "text": "not sarcastic"}],
        "usage": {"input_tokens": 99, "output_tokens": 3}
    })";
    const CompletionResponse anthropic =
        parse_provider_response(Dialect::AnthropicMessages, anthropic_body);
    CHECK(anthropic.text == "not sarcastic");
    CHECK(anthropic.prompt_tokens == 99);
    CHECK(anthropic.completion_tokens == 3);

    CHECK_THROWS_AS(parse_provider_response(Dialect::OpenAiChat, "{not json"), ProviderError);
    CHECK_THROWS_AS(parse_provider_response(Dialect::OpenAiChat, "{\"choices\": []}"),
                    ProviderError);
}

TEST_CASE("status classification") {
    CHECK(classify_status(401) == ProviderErrorClass::AuthError);
    CHECK(classify_status(403) == ProviderErrorClass::AuthError);
    CHECK(classify_status(400) == ProviderErrorClass::BadRequest);
    CHECK(classify_status(404) == ProviderErrorClass::BadRequest);
    CHECK(classify_status(408) == ProviderErrorClass::Timeout);
    CHECK(classify_status(429) == ProviderErrorClass::RateLimited);
    CHECK(classify_status(500) == ProviderErrorClass::Transient);
    CHECK(classify_status(529) == ProviderErrorClass::Transient);
}

TEST_CASE("openai-compatible endpoint round trip") {
    std::string seen_auth;
    json seen_body;
    StubServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
            seen_auth = req.get_header_value("Authorization");
            seen_body = json::parse(req.body);
            res.set_content(R"({
                "id": "chatcmpl-2",
                "choices": [{"message": {"content": "VERDICT: NOT SARCASTIC"}}],
                "usage": {"prompt_tokens": 10, "completion_tokens": 4}
            })", "application/json");
        });
    });

    ProviderConfig config;
    config.id = "local";
    config.dialect = Dialect::OpenAiChat;
    config.base_url = server.base_url();
    config.api_key = "sk-test";
    HttpCompletionClient client(config);

    const CompletionResponse response = client.complete(sample_request("local"));
    CHECK(response.text == "VERDICT: NOT SARCASTIC");
    CHECK(response.prompt_tokens == 10);
    CHECK(seen_auth == "Bearer sk-test");
    CHECK(seen_body.at("model") == "test-model");
    CHECK(seen_body.at("messages").size() == 2);
    CHECK(seen_body.at("temperature") == 0.0);
}

TEST_CASE("anthropic-compatible endpoint round trip") {
    std::string seen_key;
    std::string seen_version;
    json seen_body;
    StubServer server([&](httplib::Server& s) {
        s.Post("/v1/messages", [&](const httplib::Request& req, httplib::Response& res) {
            seen_key = req.get_header_value("x-api-key");
            seen_version = req.get_header_value("anthropic-version");
            seen_body = json::parse(req.body);
            res.set_content(R"({
                "id": "msg-2",
                "content": [{"type": "text", "text": "VERDICT: SARCASTIC"}],
                "usage": {"input_tokens": 20, "output_tokens": 5}
            })", "application/json");
        });
    });

    ProviderConfig config;
    config.id = "claude-local";
    config.dialect = Dialect::AnthropicMessages;
    config.base_url = server.base_url();
    config.api_key = "ak-test";
    HttpCompletionClient client(config);

    const CompletionResponse response = client.complete(sample_request("claude-local"));
    CHECK(response.text == "VERDICT: SARCASTIC");
    CHECK(response.completion_tokens == 5);
    CHECK(seen_key == "ak-test");
    CHECK(seen_version == "2023-06-01");
    CHECK(seen_body.at("system") == "Be brief.");
    CHECK(seen_body.at("messages").size() == 1);
}

TEST_CASE("http failures classify by status") {
    std::atomic<int> status{401};
    StubServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            res.status = status.load();
            res.set_content("{\"error\": \"scripted\"}", "application/json");
        });
    });

    ProviderConfig config;
    config.id = "local";
    config.dialect = Dialect::OpenAiChat;
    config.base_url = server.base_url();
    HttpCompletionClient client(config);

    auto expect_class = [&](int code, ProviderErrorClass expected) {
        status.store(code);
        try {
            client.complete(sample_request("local"));
            FAIL("expected a ProviderError for status ", code);
        } catch (const ProviderError& e) {
            CHECK(e.klass() == expected);
        }
    };
    expect_class(401, ProviderErrorClass::AuthError);
    expect_class(400, ProviderErrorClass::BadRequest);
    expect_class(429, ProviderErrorClass::RateLimited);
    expect_class(500, ProviderErrorClass::Transient);
}

TEST_CASE("retry wrapper recovers from a transient provider hiccup") {
    std::atomic<int> calls{0};
    StubServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            if (calls.fetch_add(1) == 0) {
                res.status = 429;
                res.set_content("{\"error\": \"slow down\"}", "application/json");
                return;
            }
            res.set_content(R"({
                "choices": [{"message": {"content": "ok now"}}]
            })", "application/json");
        });
    });

    ProviderConfig config;
    config.id = "local";
    config.dialect = Dialect::OpenAiChat;
    config.base_url = server.base_url();
    HttpCompletionClient client(config);

    RetryPolicy policy;
    policy.max_attempts = 3;
    policy.base_backoff_ms = 1;
    const CompletionResponse response =
        complete_with_retry(client, sample_request("local"), policy);
    CHECK(response.text == "ok now");
    CHECK(calls.load() == 2);
}

TEST_CASE("transport failures surface as retryable classes") {
    ProviderConfig config;
    config.id = "local";
    config.dialect = Dialect::OpenAiChat;
    config.base_url = "http://127.0.0.1:9"; // discard port; nothing listens
    config.connect_timeout_s = 1;
    HttpCompletionClient client(config);
    try {
        client.complete(sample_request("local"));
        FAIL("expected a transport error");
    } catch (const ProviderError& e) {
        CHECK((e.klass() == ProviderErrorClass::Transient ||
               e.klass() == ProviderErrorClass::Timeout));
    }
}

TEST_CASE("provider_from_env reads keys, URLs and dialects") {
    setenv("PRAGMABENCH_MYPROV_URL", "http://localhost:1234", 1);
    setenv("PRAGMABENCH_MYPROV_KEY", "k123", 1);
    const ProviderConfig config = provider_from_env("myprov");
    CHECK(config.base_url == "http://localhost:1234");
    CHECK(config.api_key == "k123");
    CHECK(config.dialect == Dialect::OpenAiChat);
    unsetenv("PRAGMABENCH_MYPROV_URL");
    unsetenv("PRAGMABENCH_MYPROV_KEY");

    const ProviderConfig openai = provider_from_env("openai");
    CHECK(openai.base_url == "https://api.openai.com");
    const ProviderConfig anthropic = provider_from_env("anthropic");
    CHECK(anthropic.base_url == "https://api.anthropic.com");
    CHECK(anthropic.dialect == Dialect::AnthropicMessages);

    CHECK_THROWS_AS(provider_from_env("unconfigured"), Error);
}

TEST_CASE("rate limiter bounds in-flight requests") {
    RateLimiter limiter(2, 0.0);
    std::atomic<int> concurrent{0};
    std::atomic<int> high_water{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i) {
        threads.emplace_back([&] {
            const auto token = limiter.acquire();
            const int now = concurrent.fetch_add(1) + 1;
            int expected = high_water.load();
            while (now > expected && !high_water.compare_exchange_weak(expected, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(15));
            concurrent.fetch_sub(1);
        });
    }
    for (auto& thread : threads) {
        thread.join();
    }
    CHECK(high_water.load() <= 2);
    CHECK(limiter.in_flight() == 0);
}

TEST_CASE("rate limiter paces requests per minute through the injected clock") {
    auto fake_now = std::make_shared<std::atomic<std::int64_t>>(0);
    RateLimiter limiter(0, 60.0, [fake_now]() {
        return std::chrono::steady_clock::time_point(std::chrono::milliseconds(fake_now->load()));
    });

    // First token is available immediately.
    { const auto token = limiter.acquire(); }

    // The second must wait for the clock to move.
    const auto real_start = std::chrono::steady_clock::now();
    std::thread advancer([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(80));
        fake_now->store(1000); // +1s => one token at 60 rpm
    });
    { const auto token = limiter.acquire(); }
    advancer.join();
    const auto waited = std::chrono::steady_clock::now() - real_start;
    CHECK(std::chrono::duration_cast<std::chrono::milliseconds>(waited).count() >= 50);
}
