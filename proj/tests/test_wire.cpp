// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <memory>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "clickagent/http_backends.hpp"

using namespace clickagent;
using nlohmann::json;

namespace {

/// In-process stub endpoint capturing the last request body per route.
struct StubServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::string chat_reply;
    std::string locate_reply;
    int chat_status = 200;
    int locate_status = 200;
    std::string last_chat_body;
    std::string last_chat_auth;
    std::string last_locate_body;

    StubServer() {
        server.Post("/v1/chat/completions",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        last_chat_body = req.body;
                        last_chat_auth = req.get_header_value("Authorization");
                        res.status = chat_status;
                        res.set_content(chat_reply, "application/json");
                    });
        server.Post("/locate",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        last_locate_body = req.body;
                        res.status = locate_status;
                        res.set_content(locate_reply, "application/json");
                    });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~StubServer() {
        server.stop();
        thread.join();
    }

    std::string base(const std::string& prefix = "") const {
        return "http://127.0.0.1:" + std::to_string(port) + prefix;
    }
};

EndpointConfig chat_config(const StubServer& stub) {
    EndpointConfig cfg;
    cfg.base_url = stub.base("/v1");
    cfg.api_key = "sk-test-key";
    cfg.model_name = "demo-model";
    cfg.max_retries = 0;
    return cfg;
}

} // namespace

TEST_CASE("split_url separates client base and path prefix") {
    auto p = split_url("http://localhost:8000/v1");
    CHECK(p.client_base == "http://localhost:8000");
    CHECK(p.path_prefix == "/v1");
    auto q = split_url("http://host:1");
    CHECK(q.client_base == "http://host:1");
    CHECK(q.path_prefix == "");
    CHECK_THROWS_AS(split_url("no-scheme"), GatewayError);
}

TEST_CASE("base64_encode matches known vectors") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foo") == "Zm9v");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
}

TEST_CASE("HttpChatBackend emits a valid chat-completions request") {
    StubServer stub;
    stub.chat_reply =
        R"({"choices":[{"message":{"role":"assistant","content":"ACTION: SWIPE\nDIRECTION: up"}}]})";
    HttpChatBackend backend(chat_config(stub));

    ChatRequest req;
    req.kind = ChatKind::Decision;
    req.user_text = "What next?";
    req.image = Observation{"\x89PNG-bytes", "png", 1080, 1920, 0};
    auto completion = backend.complete(req);
    CHECK(completion == "ACTION: SWIPE\nDIRECTION: up");

    CHECK(stub.last_chat_auth == "Bearer sk-test-key");
    json body = json::parse(stub.last_chat_body);
    CHECK(body.at("model") == "demo-model");
    CHECK(body.at("temperature").get<double>() == doctest::Approx(0.0));

    const json& messages = body.at("messages");
    REQUIRE(messages.size() == 1); // no system message configured
    CHECK(messages[0].at("role") == "user");
    const json& content = messages[0].at("content");
    REQUIRE(content.is_array());
    REQUIRE(content.size() == 2); // exactly one text and one image part

    CHECK(content[0].at("type") == "text");
    CHECK(content[0].at("text") == "What next?");
    CHECK(content[1].at("type") == "image_url");
    std::string url = content[1].at("image_url").at("url").get<std::string>();
    std::string expected_prefix = "data:image/png;base64,";
    REQUIRE(url.rfind(expected_prefix, 0) == 0);
    CHECK(url.substr(expected_prefix.size()) == base64_encode("\x89PNG-bytes"));
}

TEST_CASE("HttpChatBackend surfaces malformed and empty replies as typed errors") {
    StubServer stub;
    HttpChatBackend backend(chat_config(stub));
    ChatRequest req;
    req.user_text = "hello";

    stub.chat_reply = "this is not json";
    try {
        backend.complete(req);
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::Transport);
    }

    stub.chat_reply = R"({"choices":[]})"; // missing message
    try {
        backend.complete(req);
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::Transport);
    }

    stub.chat_reply = R"({"choices":[{"message":{"content":"   "}}]})";
    try {
        backend.complete(req);
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::ModelRefusal);
    }

    stub.chat_reply = R"({"choices":[{"message":{"content":"ok"}}]})";
    stub.chat_status = 500;
    try {
        backend.complete(req);
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::Transport);
    }
}

TEST_CASE("HttpLocatorBackend round-trips the normalized box schema") {
    StubServer stub;
    stub.locate_reply = R"({"x1":0.25,"y1":0.5,"x2":0.75,"y2":0.7})";
    EndpointConfig cfg;
    cfg.base_url = stub.base();
    cfg.max_retries = 0;
    HttpLocatorBackend backend(cfg);

    Observation obs{"fake-png", "png", 1080, 1920, 0};
    auto box = backend.locate(obs, "click on the Gmail icon.");
    CHECK(box == BoundingBox{0.25, 0.5, 0.75, 0.7});

    json body = json::parse(stub.last_locate_body);
    CHECK(body.at("image_b64") == base64_encode("fake-png"));
    CHECK(body.at("command") == "click on the Gmail icon.");

    stub.locate_reply = R"({"left":1,"top":2})";
    try {
        backend.locate(obs, "x");
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::MalformedBox);
    }
}

TEST_CASE("unreachable endpoints become Transport errors after retries") {
    EndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:1"; // nothing listens here
    cfg.max_retries = 1;
    cfg.timeout_ms = 500;
    HttpLocatorBackend backend(cfg);
    Observation obs{"x", "png", 10, 10, 0};
    try {
        backend.locate(obs, "y");
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::Transport);
        CHECK(std::string(e.what()).find("2 attempts") != std::string::npos);
    }
}
