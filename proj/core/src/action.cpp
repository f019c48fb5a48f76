// SPDX-License-Identifier: Apache-2.0
#include "clickagent/action.hpp"
#include "clickagent/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace clickagent {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return s;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur)) lines.push_back(cur);
    return lines;
}

// Matches `<TAG>: <rest>` case-insensitively on TAG, returns rest.
std::optional<std::string> tagged_value(const std::string& line, const char* tag) {
    std::string t = trim(line);
    std::string u = upper(t);
    std::string want = std::string(tag) + ":";
    if (u.rfind(want, 0) != 0) return std::nullopt;
    return trim(t.substr(want.size()));
}

} // namespace

std::string to_string(SwipeDirection d) {
    switch (d) {
        case SwipeDirection::Up: return "up";
        case SwipeDirection::Down: return "down";
        case SwipeDirection::Left: return "left";
        case SwipeDirection::Right: return "right";
    }
    return "up";
}

std::optional<SwipeDirection> parse_direction(const std::string& s) {
    std::string u = upper(trim(s));
    if (u == "UP") return SwipeDirection::Up;
    if (u == "DOWN") return SwipeDirection::Down;
    if (u == "LEFT") return SwipeDirection::Left;
    if (u == "RIGHT") return SwipeDirection::Right;
    return std::nullopt;
}

std::string to_string(ParseErrorKind k) {
    switch (k) {
        case ParseErrorKind::NoActionTag: return "no_action_tag";
        case ParseErrorKind::MissingArgument: return "missing_argument";
        case ParseErrorKind::UnknownAction: return "unknown_action";
        case ParseErrorKind::UnknownDirection: return "unknown_direction";
    }
    return "no_action_tag";
}

ParsedDecision parse_decision(const std::string& raw) {
    auto lines = split_lines(raw);
    std::optional<ParseError> first_error;
    bool saw_action_tag = false;

    auto record = [&](ParseErrorKind k, std::string detail) {
        if (!first_error) first_error = ParseError{k, std::move(detail)};
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto kw = tagged_value(lines[i], "ACTION");
        if (!kw) continue;
        saw_action_tag = true;

        // argument is the next non-empty line
        std::optional<std::string> arg_line;
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            if (!trim(lines[j]).empty()) {
                arg_line = lines[j];
                break;
            }
        }

        std::string name = upper(*kw);
        if (name == "CLICK") {
            if (!arg_line) { record(ParseErrorKind::MissingArgument, "CLICK needs TARGET"); continue; }
            auto v = tagged_value(*arg_line, "TARGET");
            if (!v || v->empty()) { record(ParseErrorKind::MissingArgument, "CLICK needs non-empty TARGET"); continue; }
            return Action{ClickAction{*v}};
        } else if (name == "TYPE") {
            if (!arg_line) { record(ParseErrorKind::MissingArgument, "TYPE needs TEXT"); continue; }
            auto v = tagged_value(*arg_line, "TEXT");
            if (!v) { record(ParseErrorKind::MissingArgument, "TYPE needs TEXT"); continue; }
            return Action{TypeAction{*v}};
        } else if (name == "OPEN_APP") {
            if (!arg_line) { record(ParseErrorKind::MissingArgument, "OPEN_APP needs APP"); continue; }
            auto v = tagged_value(*arg_line, "APP");
            if (!v || v->empty()) { record(ParseErrorKind::MissingArgument, "OPEN_APP needs non-empty APP"); continue; }
            return Action{OpenAppAction{*v}};
        } else if (name == "SWIPE") {
            if (!arg_line) { record(ParseErrorKind::MissingArgument, "SWIPE needs DIRECTION"); continue; }
            auto v = tagged_value(*arg_line, "DIRECTION");
            if (!v) { record(ParseErrorKind::MissingArgument, "SWIPE needs DIRECTION"); continue; }
            auto d = parse_direction(*v);
            if (!d) { record(ParseErrorKind::UnknownDirection, *v); continue; }
            return Action{SwipeAction{*d}};
        } else {
            record(ParseErrorKind::UnknownAction, *kw);
        }
    }

    if (!saw_action_tag) return ParseError{ParseErrorKind::NoActionTag, ""};
    return *first_error;
}

std::string render_action(const Action& a) {
    struct Renderer {
        std::string operator()(const ClickAction& c) const {
            return "ACTION: CLICK\nTARGET: " + c.ui_command;
        }
        std::string operator()(const TypeAction& t) const {
            return "ACTION: TYPE\nTEXT: " + t.text;
        }
        std::string operator()(const OpenAppAction& o) const {
            return "ACTION: OPEN_APP\nAPP: " + o.app_id;
        }
        std::string operator()(const SwipeAction& s) const {
            return "ACTION: SWIPE\nDIRECTION: " + to_string(s.direction);
        }
    };
    return std::visit(Renderer{}, a);
}

Point bbox_center(const BoundingBox& b, int screen_w, int screen_h) {
    auto clamp_to = [](long v, int dim) {
        if (v < 0) return 0;
        if (v >= dim) return dim - 1;
        return static_cast<int>(v);
    };
    long px = std::lround((b.x1 + b.x2) / 2.0 * screen_w);
    long py = std::lround((b.y1 + b.y2) / 2.0 * screen_h);
    return Point{clamp_to(px, screen_w), clamp_to(py, screen_h), screen_w, screen_h};
}

std::string summarize_history(const EpisodeTrace& t) {
    if (t.steps.empty()) return "No actions taken yet.";
    std::ostringstream out;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const Step& s = t.steps[i];
        std::string rendered = render_action(s.action);
        std::string::size_type pos;
        while ((pos = rendered.find('\n')) != std::string::npos)
            rendered.replace(pos, 1, " | ");
        out << (i + 1) << ". " << rendered << " | verdict: "
            << (s.verdict.status == VerdictStatus::Success ? "success" : "failure");
        if (i + 1 < t.steps.size()) out << "\n";
    }
    return out.str();
}

bool step_fields_consistent(const Step& s) {
    bool is_click = std::holds_alternative<ClickAction>(s.action);
    if (!is_click && (s.locator_box || s.tap_point)) return false;
    if (is_click && !s.phase_error && (!s.locator_box || !s.tap_point)) return false;
    return true;
}

} // namespace clickagent
