// SPDX-License-Identifier: Apache-2.0
#include "clickagent/http_backends.hpp"

#include <httplib.h>
#include <json.hpp>

namespace clickagent {

using nlohmann::json;

std::string base64_encode(const std::string& bytes) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                     (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                     static_cast<unsigned char>(bytes[i + 2]);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back(alphabet[v & 63]);
        i += 3;
    }
    if (i + 1 == bytes.size()) {
        unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out += "==";
    } else if (i + 2 == bytes.size()) {
        unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                     (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

UrlParts split_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw GatewayError(GatewayError::Kind::Transport,
                           "base_url missing scheme: " + base_url);
    auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

namespace {

httplib::Client make_client(const UrlParts& parts, const EndpointConfig& cfg) {
    httplib::Client cli(parts.client_base);
    cli.set_connection_timeout(0, static_cast<time_t>(cfg.timeout_ms) * 1000);
    cli.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
    return cli;
}

// One POST with up to 1 + max_retries transport attempts.
httplib::Result post_with_retries(const EndpointConfig& cfg,
                                  const std::string& path,
                                  const httplib::Headers& headers,
                                  const std::string& body) {
    UrlParts parts = split_url(cfg.base_url);
    std::string full_path = parts.path_prefix + path;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        auto cli = make_client(parts, cfg);
        auto res = cli.Post(full_path, headers, body, "application/json");
        if (res) return res;
        last_error = httplib::to_string(res.error());
    }
    throw GatewayError(GatewayError::Kind::Transport,
                       "POST " + cfg.base_url + path + " failed after " +
                           std::to_string(cfg.max_retries + 1) +
                           " attempts: " + last_error);
}

} // namespace

std::string HttpChatBackend::complete(const ChatRequest& req) {
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", req.user_text}});
    if (req.image) {
        std::string mime = req.image->format_tag == "png" ? "image/png"
                                                          : "application/octet-stream";
        content.push_back(
            {{"type", "image_url"},
             {"image_url",
              {{"url", "data:" + mime + ";base64," +
                           base64_encode(req.image->image_bytes)}}}});
    }

    json messages = json::array();
    if (!req.system.empty())
        messages.push_back({{"role", "system"}, {"content", req.system}});
    messages.push_back({{"role", "user"}, {"content", content}});

    json body{{"model", cfg_.model_name},
              {"temperature", cfg_.temperature},
              {"messages", messages}};

    httplib::Headers headers;
    if (cfg_.api_key)
        headers.emplace("Authorization", "Bearer " + *cfg_.api_key);

    auto res = post_with_retries(cfg_, "/chat/completions", headers, body.dump());
    if (res->status != 200)
        throw GatewayError(GatewayError::Kind::Transport,
                           "chat endpoint returned HTTP " +
                               std::to_string(res->status));
    try {
        json reply = json::parse(res->body);
        std::string text =
            reply.at("choices").at(0).at("message").at("content").get<std::string>();
        if (trim(text).empty())
            throw GatewayError(GatewayError::Kind::ModelRefusal,
                               "empty completion");
        return text;
    } catch (const json::exception& e) {
        throw GatewayError(GatewayError::Kind::Transport,
                           std::string("malformed chat response: ") + e.what());
    }
}

BoundingBox HttpLocatorBackend::locate(const Observation& obs,
                                       const std::string& command) {
    json body{{"image_b64", base64_encode(obs.image_bytes)},
              {"command", command}};
    auto res = post_with_retries(cfg_, "/locate", {}, body.dump());
    if (res->status != 200)
        throw GatewayError(GatewayError::Kind::Transport,
                           "locator endpoint returned HTTP " +
                               std::to_string(res->status));
    try {
        json reply = json::parse(res->body);
        return BoundingBox{reply.at("x1").get<double>(), reply.at("y1").get<double>(),
                           reply.at("x2").get<double>(), reply.at("y2").get<double>()};
    } catch (const json::exception& e) {
        throw GatewayError(GatewayError::Kind::MalformedBox,
                           std::string("malformed locator response: ") + e.what());
    }
}

} // namespace clickagent
