// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <variant>

namespace clickagent {

enum class SwipeDirection { Up, Down, Left, Right };

std::string to_string(SwipeDirection d);
std::optional<SwipeDirection> parse_direction(const std::string& s);

/// Click carries the natural-language UI command handed to the locator.
struct ClickAction {
    std::string ui_command; // non-empty after trimming
    bool operator==(const ClickAction&) const = default;
};

struct TypeAction {
    std::string text;
    bool operator==(const TypeAction&) const = default;
};

struct OpenAppAction {
    std::string app_id;
    bool operator==(const OpenAppAction&) const = default;
};

struct SwipeAction {
    SwipeDirection direction;
    bool operator==(const SwipeAction&) const = default;
};

using Action = std::variant<ClickAction, TypeAction, OpenAppAction, SwipeAction>;

enum class ParseErrorKind {
    NoActionTag,
    MissingArgument,
    UnknownAction,
    UnknownDirection,
};

struct ParseError {
    ParseErrorKind kind;
    std::string detail;
    bool operator==(const ParseError&) const = default;
};

std::string to_string(ParseErrorKind k);

using ParsedDecision = std::variant<Action, ParseError>;

/// Extracts an Action from model completion text. The grammar is a line
/// `ACTION: <CLICK|TYPE|OPEN_APP|SWIPE>` followed by one argument line
/// (`TARGET:`, `TEXT:`, `APP:` or `DIRECTION:`). Keywords match
/// case-insensitively; surrounding prose is ignored and the first
/// well-formed block wins.
ParsedDecision parse_decision(const std::string& raw);

/// Canonical grammar text; parse_decision(render_action(a)) == a.
std::string render_action(const Action& a);

std::string trim(const std::string& s);

} // namespace clickagent
