// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "clickagent/gateway.hpp"
#include "clickagent/rng.hpp"
#include "clickagent/types.hpp"

namespace clickagent::sim {

enum class Role { Button, Link, TextField, Icon, ListItem };

std::string to_string(Role r);
std::optional<Role> parse_role(const std::string& s);

struct Element {
    std::string id;
    BoundingBox box;
    std::string text_label; // may be empty
    Role role = Role::Button;
};

struct ScreenNode {
    std::string id;
    std::vector<std::vector<Element>> pages; // one element list per scroll page
    std::optional<std::string> initial_focus; // text_field focused on entry

    int page_count() const { return static_cast<int>(pages.size()); }
};

/// Optional predicate on WorldState gating a transition.
struct Guard {
    std::optional<bool> cache_cleared;
};

struct TapTrigger {
    std::string screen, element;
};
struct TypeSubmitTrigger {
    std::string screen, element, expected;
};
struct SwipeTrigger {
    std::string screen;
    SwipeDirection direction;
};
struct LaunchTrigger {
    std::string app;
};
using Trigger = std::variant<TapTrigger, TypeSubmitTrigger, SwipeTrigger, LaunchTrigger>;

struct GotoScreen {
    std::string screen;
};
struct FocusElement {
    std::string element;
};
using Effect = std::variant<GotoScreen, FocusElement>;

struct TransitionRule {
    Trigger trigger;
    Guard guard;
    Effect effect;
};

struct ReachScreen {
    std::string screen;
};
struct BufferEquals {
    std::string element, text;
};
struct AppForeground {
    std::string app;
};
using GoalPredicate = std::variant<ReachScreen, BufferEquals, AppForeground>;

struct SimGoal {
    std::string id;
    GoalPredicate predicate;
};

struct World {
    std::string id;
    int screen_w = 1080, screen_h = 1920;
    std::string initial_screen;
    std::map<std::string, ScreenNode> screens;
    std::map<std::string, std::string> apps; // app id -> root screen
    std::vector<TransitionRule> rules;
    std::map<std::string, SimGoal> goals;
};

struct WorldState {
    std::string current_screen;
    int scroll_page = 0;
    std::map<std::string, std::string> buffers; // element id -> typed text
    std::optional<std::string> focused_field;
    bool cache_cleared = false;
    std::optional<std::string> foreground_app;
    std::uint64_t rng_seed = 0;
};

class WorldLoadError : public std::runtime_error {
public:
    explicit WorldLoadError(const std::string& what) : std::runtime_error(what) {}
};

/// Loads and validates a YAML world file; rejects dangling screen/element
/// references with the offending path in the message.
World load_world(const std::string& path);
void validate_world(const World& w);

WorldState initial_state(const World& w, std::uint64_t seed);

// Pure transitions. States are values; the input state is never mutated.
WorldState apply_tap(const World& w, const WorldState& s, const Point& p);
WorldState apply_swipe(const World& w, const WorldState& s, SwipeDirection d);
/// Throws DeviceError(NoFocusedField) when no field has focus.
WorldState apply_type(const World& w, const WorldState& s, const std::string& text);
/// Throws DeviceError(UnknownApp) for ids not installed.
WorldState apply_launch(const World& w, const WorldState& s, const std::string& app);
WorldState apply_reset_cache(const WorldState& s);

const ScreenNode& screen_of(const World& w, const WorldState& s);
const std::vector<Element>& visible_elements(const World& w, const WorldState& s);

/// Canonical byte-deterministic "simdesc" serialization of the visible page.
Observation render_screen(const World& w, const WorldState& s,
                          std::int64_t captured_at_ms = 0);

bool goal_check(const World& w, const WorldState& s, const SimGoal& goal);

/// Parsed view of a "simdesc" observation payload.
struct SimDesc {
    std::string screen;
    int page = 0, page_count = 1;
    std::optional<std::string> focus;
    std::vector<Element> elements;
};
SimDesc parse_simdesc(const std::string& payload);

/// Canonical sim click command naming an element.
std::string click_command_for(const std::string& element_id);

class Unreachable : public std::runtime_error {
public:
    explicit Unreachable(const std::string& what) : std::runtime_error(what) {}
};

/// First action of a shortest sequence reaching the goal, BFS over the
/// transition graph, ties broken lexicographically on the rendered action.
/// Throws Unreachable when the goal cannot be reached.
Action oracle_policy(const World& w, const WorldState& s, const SimGoal& goal);

/// BFS distance to the goal; nullopt when unreachable.
std::optional<int> bfs_distance(const World& w, const WorldState& s,
                                const SimGoal& goal);

/// Locator with perfect knowledge of the sim screen: resolves a command of
/// the form `tap on element '<id-or-exact-label>'` against the visible
/// page of a simdesc observation. Throws GatewayError(ElementNotFound).
class PerfectLocatorBackend : public LocatorBackend {
public:
    BoundingBox locate(const Observation& obs, const std::string& command) override;
};

/// Chat backend with oracle knowledge of the live sim state: decision
/// replies follow oracle_policy, reflection replies follow goal_check,
/// app selection replies with the oracle's OpenApp choice.
class OracleChatBackend : public ChatBackend {
public:
    OracleChatBackend(std::shared_ptr<const World> world,
                      std::shared_ptr<const WorldState> state, SimGoal goal)
        : world_(std::move(world)), state_(std::move(state)), goal_(std::move(goal)) {}
    std::string complete(const ChatRequest& req) override;

private:
    std::shared_ptr<const World> world_;
    std::shared_ptr<const WorldState> state_;
    SimGoal goal_;
};

struct ErrorInjectionConfig {
    double locator_miss_prob = 0.0;
    double reflection_false_success_prob = 0.0;
    double reflection_false_failure_prob = 0.0;
    double decision_wrong_action_prob = 0.0;
    std::uint64_t seed = 0;

    bool any() const {
        return locator_miss_prob > 0 || reflection_false_success_prob > 0 ||
               reflection_false_failure_prob > 0 || decision_wrong_action_prob > 0;
    }
};

struct InjectionEvent {
    int call_index = 0;            // per-component call counter
    std::string component;         // "locator" | "reflection" | "decision"
    std::string detail;
};

struct InjectionLog {
    std::vector<InjectionEvent> events;
    bool has(const std::string& component) const;
};

/// Wraps a locator; with probability locator_miss_prob replaces the true
/// box by a box centered in dead space on the observed screen.
class NoisyLocatorBackend : public LocatorBackend {
public:
    NoisyLocatorBackend(LocatorBackend& inner, const ErrorInjectionConfig& cfg,
                        std::shared_ptr<InjectionLog> log)
        : inner_(inner), miss_prob_(cfg.locator_miss_prob),
          rng_(derive_seed(cfg.seed, 1)), log_(std::move(log)) {}
    BoundingBox locate(const Observation& obs, const std::string& command) override;

private:
    LocatorBackend& inner_;
    double miss_prob_;
    SplitMix64 rng_;
    std::shared_ptr<InjectionLog> log_;
    int calls_ = 0;
};

/// Wraps a chat backend; flips reflection verdicts and substitutes
/// wrong-typed decision actions with the configured probabilities.
class NoisyChatBackend : public ChatBackend {
public:
    NoisyChatBackend(ChatBackend& inner, const ErrorInjectionConfig& cfg,
                     std::shared_ptr<InjectionLog> log)
        : inner_(inner), cfg_(cfg), decision_rng_(derive_seed(cfg.seed, 2)),
          reflection_rng_(derive_seed(cfg.seed, 3)), log_(std::move(log)) {}
    std::string complete(const ChatRequest& req) override;

private:
    ChatBackend& inner_;
    ErrorInjectionConfig cfg_;
    SplitMix64 decision_rng_;
    SplitMix64 reflection_rng_;
    std::shared_ptr<InjectionLog> log_;
    int decision_calls_ = 0, reflection_calls_ = 0;
};

/// Dead-space box: a small box around a grid point that intersects no
/// element on the page. Deterministic for a given element set.
BoundingBox dead_space_box(const std::vector<Element>& elements);

} // namespace clickagent::sim
