// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "clickagent/gateway.hpp"

namespace clickagent {

std::string base64_encode(const std::string& bytes);

/// Splits "http://host:port/prefix" into client base and path prefix.
struct UrlParts {
    std::string client_base; // scheme://host:port
    std::string path_prefix; // "" or "/prefix"
};
UrlParts split_url(const std::string& base_url);

/// OpenAI-compatible chat-completions client. Sends one text part plus the
/// screenshot as a base64 data-url image part; reads
/// choices[0].message.content. Stateless after construction.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(EndpointConfig cfg) : cfg_(std::move(cfg)) {}
    std::string complete(const ChatRequest& req) override;

private:
    EndpointConfig cfg_;
};

/// POST {base_url}/locate with {"image_b64","command"}, expects a
/// normalized {"x1","y1","x2","y2"} object back.
class HttpLocatorBackend : public LocatorBackend {
public:
    explicit HttpLocatorBackend(EndpointConfig cfg) : cfg_(std::move(cfg)) {}
    BoundingBox locate(const Observation& obs, const std::string& command) override;

private:
    EndpointConfig cfg_;
};

} // namespace clickagent
