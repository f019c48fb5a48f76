// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clickagent/types.hpp"

namespace clickagent {

struct EndpointConfig {
    std::string base_url;
    std::optional<std::string> api_key;
    std::string model_name;
    std::int64_t timeout_ms = 30000;
    int max_retries = 2;
    double temperature = 0.0; // deterministic by default
};

struct PromptBundle {
    std::string decision_template;   // {task} {history}
    std::string reflection_template; // {task} {history}
    std::string app_select_template; // {task} {app_list}
    bool ocr_anchoring = true;
};

/// Built-in prompt text; used when no prompts file is configured.
PromptBundle default_prompts();

/// Loads a prompt bundle from a directory holding decision.txt,
/// reflection.txt and app_select.txt. Throws MissingPlaceholder if a
/// template lacks a required placeholder.
PromptBundle load_prompts(const std::string& dir, bool ocr_anchoring);

/// Validates required placeholders; throws MissingPlaceholder.
void validate_prompts(const PromptBundle& prompts);

class GatewayError : public std::runtime_error {
public:
    enum class Kind {
        Transport,
        ModelRefusal,
        UnparseableDecision,
        AppSelection,
        MalformedBox,
        ElementNotFound,
        MissingPlaceholder,
    };
    GatewayError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Which agent phase a chat request serves. HTTP backends ignore it;
/// scripted and sim-oracle backends use it to route replies.
enum class ChatKind { Decision, Reflection, AppSelect };

struct ChatRequest {
    ChatKind kind = ChatKind::Decision;
    std::string system;
    std::string user_text;
    std::optional<Observation> image;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    /// Returns the completion text. Throws GatewayError on transport
    /// failure or empty completion.
    virtual std::string complete(const ChatRequest& req) = 0;
};

class LocatorBackend {
public:
    virtual ~LocatorBackend() = default;
    /// Maps (screenshot, command) to a normalized box. Throws GatewayError
    /// on transport failure or a malformed response.
    virtual BoundingBox locate(const Observation& obs, const std::string& command) = 0;
};

/// Scripted chat mock: answers from per-kind FIFO queues, falling back to a
/// default reply. Thread-compatible, single episode use.
class ScriptedChatBackend : public ChatBackend {
public:
    void push(ChatKind kind, std::string reply);
    void set_default(ChatKind kind, std::string reply);
    std::string complete(const ChatRequest& req) override;
    int calls(ChatKind kind) const;

private:
    std::map<ChatKind, std::deque<std::string>> queues_;
    std::map<ChatKind, std::string> defaults_;
    std::map<ChatKind, int> calls_;
};

/// Scripted locator mock: fixed command -> box table.
class ScriptedLocatorBackend : public LocatorBackend {
public:
    void map(std::string command, BoundingBox box) {
        table_[std::move(command)] = box;
    }
    BoundingBox locate(const Observation&, const std::string& command) override;

private:
    std::map<std::string, BoundingBox> table_;
};

struct DecisionOutput {
    Action action;
    std::string raw;
    int attempts = 1; // prompt attempts consumed (1..3)
};

std::string render_decision_prompt(const PromptBundle& prompts,
                                   const TaskSpec& task,
                                   const std::string& history);
std::string render_reflection_prompt(const PromptBundle& prompts,
                                     const TaskSpec& task,
                                     const std::string& history);
std::string render_app_select_prompt(const PromptBundle& prompts,
                                     const TaskSpec& task,
                                     const std::vector<std::string>& app_list);

/// Decision query: prompts the MLLM with the latest screenshot, parses the
/// completion, re-prompting up to 2 extra times with a corrective
/// instruction on parse failure.
DecisionOutput decide(const TaskSpec& task, const std::string& history,
                      const Observation& obs, ChatBackend& backend,
                      const PromptBundle& prompts);

/// Reflection query. An unparseable completion after retries becomes a
/// failure verdict with rationale "unparseable"; the episode continues.
Verdict reflect(const TaskSpec& task, const std::string& history,
                const Observation& obs, ChatBackend& backend,
                const PromptBundle& prompts);

/// App-selection query: exact id echo, else unique lowercase-substring
/// match of the completion against ids.
std::string select_app(const TaskSpec& task,
                       const std::vector<std::string>& app_list,
                       ChatBackend& backend, const PromptBundle& prompts);

/// Locator query with BoundingBox invariant validation.
BoundingBox locate(const Observation& obs, const std::string& ui_command,
                   LocatorBackend& backend);

} // namespace clickagent
