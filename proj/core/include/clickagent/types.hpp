// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "clickagent/action.hpp"

namespace clickagent {

/// Normalized locator output, all coordinates in [0,1], x1<=x2, y1<=y2.
/// Zero-area boxes are allowed.
struct BoundingBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    bool valid() const {
        auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
        return in_unit(x1) && in_unit(y1) && in_unit(x2) && in_unit(y2) &&
               x1 <= x2 && y1 <= y2;
    }
    bool operator==(const BoundingBox&) const = default;
};

/// Pixel tap target; 0 <= x < screen_w, 0 <= y < screen_h.
struct Point {
    int x = 0, y = 0;
    int screen_w = 0, screen_h = 0;

    bool valid() const {
        return screen_w > 0 && screen_h > 0 && x >= 0 && x < screen_w &&
               y >= 0 && y < screen_h;
    }
    bool operator==(const Point&) const = default;
};

/// Clamped pixel midpoint of a normalized box.
Point bbox_center(const BoundingBox& b, int screen_w, int screen_h);

struct Observation {
    std::string image_bytes; // opaque payload, non-empty
    std::string format_tag;  // "png" | "simdesc"
    int screen_w = 0, screen_h = 0;
    std::int64_t captured_at_ms = 0; // monotonic

    bool operator==(const Observation&) const = default;
};

enum class VerdictStatus { Success, Failure };

struct Verdict {
    VerdictStatus status = VerdictStatus::Failure;
    std::string rationale;
    bool operator==(const Verdict&) const = default;
};

struct TaskSpec {
    std::string id;
    std::string subset; // "General" | "WebShopping" | custom label
    std::string instruction;
    std::optional<std::string> sim_goal;
    bool operator==(const TaskSpec&) const = default;
};

struct Step {
    int index = 0;
    Observation pre_obs;
    std::string decision_raw;
    Action action;
    std::optional<BoundingBox> locator_box; // Click only
    std::optional<Point> tap_point;         // Click only
    std::optional<std::string> resolved_app; // OpenApp: id chosen by select_app
    std::optional<std::string> phase_error;  // e.g. failed locate, app selection
    Observation post_obs;
    Verdict verdict;
    std::int64_t decide_ms = 0, locate_ms = 0, execute_ms = 0, reflect_ms = 0;

    bool operator==(const Step&) const = default;
};

struct OutcomeSuccess {
    bool operator==(const OutcomeSuccess&) const = default;
};
struct OutcomeBudgetExhausted {
    bool operator==(const OutcomeBudgetExhausted&) const = default;
};
struct OutcomeError {
    std::string message;
    bool operator==(const OutcomeError&) const = default;
};
using Outcome = std::variant<OutcomeSuccess, OutcomeBudgetExhausted, OutcomeError>;

inline bool is_success(const Outcome& o) {
    return std::holds_alternative<OutcomeSuccess>(o);
}

struct EpisodeTrace {
    TaskSpec task;
    std::vector<Step> steps;
    Outcome outcome = OutcomeBudgetExhausted{};
    std::string config_fingerprint;
    std::uint64_t seed = 0;
    std::int64_t total_ms = 0;
    std::string driver; // "sim" | "adb"
    std::string world;  // world file path for sim traces, empty for adb

    bool operator==(const EpisodeTrace&) const = default;
};

/// Deterministic numbered history: one line per step with the rendered
/// action and the verdict. Empty trace yields "No actions taken yet."
std::string summarize_history(const EpisodeTrace& t);

/// Checks the Step locator-field invariant: locator_box and tap_point may
/// be present only on Click steps, and are both present on successful ones.
bool step_fields_consistent(const Step& s);

} // namespace clickagent
