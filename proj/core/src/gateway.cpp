// SPDX-License-Identifier: Apache-2.0
#include "clickagent/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace clickagent {

namespace {

constexpr const char* kAnchoringSentence =
    "When you choose CLICK, reference visible on-screen text in the target "
    "whenever possible (for example the exact label, title or subject shown), "
    "rather than positional descriptions.";

constexpr const char* kCorrectiveInstruction =
    "Your previous reply did not follow the required format. Reply with "
    "exactly one ACTION block: a line `ACTION: <CLICK|TYPE|OPEN_APP|SWIPE>` "
    "followed by its argument line (`TARGET:`, `TEXT:`, `APP:` or "
    "`DIRECTION:`).";

std::string replace_all(std::string text, const std::string& from,
                        const std::string& to) {
    std::string::size_type pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

void require_placeholder(const std::string& tmpl, const std::string& ph,
                         const std::string& which) {
    if (tmpl.find(ph) == std::string::npos)
        throw GatewayError(GatewayError::Kind::MissingPlaceholder,
                           which + " template missing placeholder " + ph);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

} // namespace

PromptBundle default_prompts() {
    PromptBundle p;
    p.decision_template =
        "You are an autonomous agent operating an Android phone.\n"
        "Task: {task}\n"
        "Action history so far:\n{history}\n"
        "Look at the attached screenshot and choose the single next action.\n"
        "Answer with exactly one block:\n"
        "ACTION: CLICK | TYPE | OPEN_APP | SWIPE\n"
        "followed by one argument line: TARGET: <natural-language click "
        "command> or TEXT: <text to type> or APP: <app to open> or "
        "DIRECTION: <up|down|left|right>.\n";
    p.reflection_template =
        "You are reviewing an autonomous agent's progress on an Android "
        "phone.\n"
        "Task: {task}\n"
        "Action history so far:\n{history}\n"
        "The attached screenshot shows the screen after the last action.\n"
        "Did the agent fully complete the task? Answer with a line "
        "`STATUS: SUCCESS` or `STATUS: FAILURE`, then a short explanation.\n";
    p.app_select_template =
        "Task: {task}\n"
        "Installed apps, one per line:\n{app_list}\n"
        "Reply with the single app id from the list that best fits the "
        "task.\n";
    p.ocr_anchoring = true;
    validate_prompts(p);
    return p;
}

void validate_prompts(const PromptBundle& p) {
    require_placeholder(p.decision_template, "{task}", "decision");
    require_placeholder(p.decision_template, "{history}", "decision");
    require_placeholder(p.reflection_template, "{task}", "reflection");
    require_placeholder(p.reflection_template, "{history}", "reflection");
    require_placeholder(p.app_select_template, "{task}", "app_select");
    require_placeholder(p.app_select_template, "{app_list}", "app_select");
}

PromptBundle load_prompts(const std::string& dir, bool ocr_anchoring) {
    PromptBundle p;
    p.decision_template = read_file(dir + "/decision.txt");
    p.reflection_template = read_file(dir + "/reflection.txt");
    p.app_select_template = read_file(dir + "/app_select.txt");
    p.ocr_anchoring = ocr_anchoring;
    validate_prompts(p);
    return p;
}

std::string render_decision_prompt(const PromptBundle& prompts,
                                   const TaskSpec& task,
                                   const std::string& history) {
    std::string out = replace_all(prompts.decision_template, "{task}", task.instruction);
    out = replace_all(out, "{history}", history);
    if (prompts.ocr_anchoring) {
        if (!out.empty() && out.back() != '\n') out += "\n";
        out += kAnchoringSentence;
        out += "\n";
    }
    return out;
}

std::string render_reflection_prompt(const PromptBundle& prompts,
                                     const TaskSpec& task,
                                     const std::string& history) {
    std::string out = replace_all(prompts.reflection_template, "{task}", task.instruction);
    return replace_all(out, "{history}", history);
}

std::string render_app_select_prompt(const PromptBundle& prompts,
                                     const TaskSpec& task,
                                     const std::vector<std::string>& app_list) {
    std::ostringstream joined;
    for (std::size_t i = 0; i < app_list.size(); ++i) {
        if (i) joined << "\n";
        joined << app_list[i];
    }
    std::string out = replace_all(prompts.app_select_template, "{task}", task.instruction);
    return replace_all(out, "{app_list}", joined.str());
}

void ScriptedChatBackend::push(ChatKind kind, std::string reply) {
    queues_[kind].push_back(std::move(reply));
}

void ScriptedChatBackend::set_default(ChatKind kind, std::string reply) {
    defaults_[kind] = std::move(reply);
}

std::string ScriptedChatBackend::complete(const ChatRequest& req) {
    ++calls_[req.kind];
    auto q = queues_.find(req.kind);
    if (q != queues_.end() && !q->second.empty()) {
        std::string reply = q->second.front();
        q->second.pop_front();
        return reply;
    }
    auto d = defaults_.find(req.kind);
    if (d != defaults_.end()) return d->second;
    throw GatewayError(GatewayError::Kind::ModelRefusal,
                       "scripted backend has no reply for this request kind");
}

int ScriptedChatBackend::calls(ChatKind kind) const {
    auto it = calls_.find(kind);
    return it == calls_.end() ? 0 : it->second;
}

BoundingBox ScriptedLocatorBackend::locate(const Observation&,
                                           const std::string& command) {
    auto it = table_.find(command);
    if (it == table_.end())
        throw GatewayError(GatewayError::Kind::MalformedBox,
                           "scripted locator has no mapping for: " + command);
    return it->second;
}

DecisionOutput decide(const TaskSpec& task, const std::string& history,
                      const Observation& obs, ChatBackend& backend,
                      const PromptBundle& prompts) {
    std::string prompt = render_decision_prompt(prompts, task, history);
    std::string last_error;
    for (int attempt = 1; attempt <= 3; ++attempt) {
        ChatRequest req;
        req.kind = ChatKind::Decision;
        req.user_text = prompt;
        req.image = obs;
        std::string completion = backend.complete(req);
        if (trim(completion).empty())
            throw GatewayError(GatewayError::Kind::ModelRefusal,
                               "empty decision completion");
        ParsedDecision parsed = parse_decision(completion);
        if (auto* action = std::get_if<Action>(&parsed))
            return DecisionOutput{*action, completion, attempt};
        last_error = to_string(std::get<ParseError>(parsed).kind);
        prompt = render_decision_prompt(prompts, task, history) + "\n" +
                 kCorrectiveInstruction;
    }
    throw GatewayError(GatewayError::Kind::UnparseableDecision,
                       "decision unparseable after 3 attempts (" + last_error + ")");
}

Verdict reflect(const TaskSpec& task, const std::string& history,
                const Observation& obs, ChatBackend& backend,
                const PromptBundle& prompts) {
    std::string prompt = render_reflection_prompt(prompts, task, history);
    for (int attempt = 1; attempt <= 3; ++attempt) {
        ChatRequest req;
        req.kind = ChatKind::Reflection;
        req.user_text = prompt;
        req.image = obs;
        std::string completion = backend.complete(req);

        std::istringstream in(completion);
        std::string line;
        std::optional<VerdictStatus> status;
        std::ostringstream rationale;
        bool first_rationale = true;
        while (std::getline(in, line)) {
            std::string u = lower(trim(line));
            if (!status && u.rfind("status:", 0) == 0) {
                std::string v = trim(u.substr(7));
                if (v == "success") status = VerdictStatus::Success;
                else if (v == "failure") status = VerdictStatus::Failure;
                continue;
            }
            if (trim(line).empty()) continue;
            if (!first_rationale) rationale << "\n";
            rationale << trim(line);
            first_rationale = false;
        }
        if (status) return Verdict{*status, rationale.str()};
        prompt = render_reflection_prompt(prompts, task, history) +
                 "\nReply with a line `STATUS: SUCCESS` or `STATUS: FAILURE` "
                 "first.";
    }
    return Verdict{VerdictStatus::Failure, "unparseable"};
}

std::string select_app(const TaskSpec& task,
                       const std::vector<std::string>& app_list,
                       ChatBackend& backend, const PromptBundle& prompts) {
    if (app_list.empty())
        throw std::invalid_argument("select_app: empty app list");
    ChatRequest req;
    req.kind = ChatKind::AppSelect;
    req.user_text = render_app_select_prompt(prompts, task, app_list);
    std::string answer = trim(backend.complete(req));

    for (const auto& id : app_list)
        if (answer == id) return id;

    // fuzzy fallback: the completion as a lowercase substring of exactly
    // one listed id
    std::string needle = lower(answer);
    std::optional<std::string> match;
    if (!needle.empty()) {
        for (const auto& id : app_list) {
            if (lower(id).find(needle) != std::string::npos) {
                if (match) {
                    match.reset();
                    break;
                }
                match = id;
            }
        }
    }
    if (match) return *match;
    throw GatewayError(GatewayError::Kind::AppSelection,
                       "no unique app match for completion: " + answer);
}

BoundingBox locate(const Observation& obs, const std::string& ui_command,
                   LocatorBackend& backend) {
    BoundingBox box = backend.locate(obs, ui_command);
    if (!box.valid())
        throw GatewayError(GatewayError::Kind::MalformedBox,
                           "locator returned out-of-range or inverted box");
    return box;
}

} // namespace clickagent
