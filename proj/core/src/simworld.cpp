// SPDX-License-Identifier: Apache-2.0
#include "clickagent/simworld.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "clickagent/device.hpp"

namespace clickagent::sim {

std::string to_string(Role r) {
    switch (r) {
        case Role::Button: return "button";
        case Role::Link: return "link";
        case Role::TextField: return "text_field";
        case Role::Icon: return "icon";
        case Role::ListItem: return "list_item";
    }
    return "button";
}

std::optional<Role> parse_role(const std::string& s) {
    if (s == "button") return Role::Button;
    if (s == "link") return Role::Link;
    if (s == "text_field") return Role::TextField;
    if (s == "icon") return Role::Icon;
    if (s == "list_item") return Role::ListItem;
    return std::nullopt;
}

namespace {

bool guard_holds(const Guard& g, const WorldState& s) {
    if (g.cache_cleared && *g.cache_cleared != s.cache_cleared) return false;
    return true;
}

void enter_screen(const World& w, WorldState& s, const std::string& screen) {
    s.current_screen = screen;
    s.scroll_page = 0;
    s.focused_field = w.screens.at(screen).initial_focus;
}

void apply_effect(const World& w, WorldState& s, const Effect& e) {
    if (const auto* g = std::get_if<GotoScreen>(&e)) {
        enter_screen(w, s, g->screen);
    } else {
        s.focused_field = std::get<FocusElement>(e).element;
    }
}

const Element* find_element(const std::vector<Element>& elems, const std::string& id) {
    for (const auto& e : elems)
        if (e.id == id) return &e;
    return nullptr;
}

} // namespace

const ScreenNode& screen_of(const World& w, const WorldState& s) {
    return w.screens.at(s.current_screen);
}

const std::vector<Element>& visible_elements(const World& w, const WorldState& s) {
    return screen_of(w, s).pages.at(static_cast<std::size_t>(s.scroll_page));
}

WorldState initial_state(const World& w, std::uint64_t seed) {
    WorldState s;
    s.rng_seed = seed;
    s.cache_cleared = false;
    enter_screen(w, s, w.initial_screen);
    return s;
}

WorldState apply_tap(const World& w, const WorldState& s, const Point& p) {
    double nx = (p.x + 0.5) / p.screen_w;
    double ny = (p.y + 0.5) / p.screen_h;

    const Element* hit = nullptr;
    for (const auto& e : visible_elements(w, s)) {
        if (nx >= e.box.x1 && nx <= e.box.x2 && ny >= e.box.y1 && ny <= e.box.y2) {
            hit = &e;
            break;
        }
    }
    if (!hit) return s;

    for (const auto& rule : w.rules) {
        const auto* t = std::get_if<TapTrigger>(&rule.trigger);
        if (!t || t->screen != s.current_screen || t->element != hit->id) continue;
        if (!guard_holds(rule.guard, s)) continue;
        WorldState next = s;
        // a guarded first-run rule consumes the flag, matching launch
        if (rule.guard.cache_cleared && *rule.guard.cache_cleared)
            next.cache_cleared = false;
        apply_effect(w, next, rule.effect);
        return next;
    }
    if (hit->role == Role::TextField) {
        WorldState next = s;
        next.focused_field = hit->id;
        return next;
    }
    return s;
}

WorldState apply_swipe(const World& w, const WorldState& s, SwipeDirection d) {
    if (d == SwipeDirection::Up || d == SwipeDirection::Down) {
        int pages = screen_of(w, s).page_count();
        int next_page = s.scroll_page + (d == SwipeDirection::Up ? 1 : -1);
        next_page = std::clamp(next_page, 0, pages - 1);
        WorldState next = s;
        next.scroll_page = next_page;
        return next;
    }
    // left/right only act through explicit rules
    for (const auto& rule : w.rules) {
        const auto* t = std::get_if<SwipeTrigger>(&rule.trigger);
        if (!t || t->screen != s.current_screen || t->direction != d) continue;
        if (!guard_holds(rule.guard, s)) continue;
        WorldState next = s;
        apply_effect(w, next, rule.effect);
        return next;
    }
    return s;
}

WorldState apply_type(const World& w, const WorldState& s, const std::string& text) {
    if (!s.focused_field)
        throw DeviceError(DeviceError::Kind::NoFocusedField,
                          "no focused text field on screen " + s.current_screen);
    WorldState next = s;
    std::string& buf = next.buffers[*s.focused_field];
    buf += text;

    for (const auto& rule : w.rules) {
        const auto* t = std::get_if<TypeSubmitTrigger>(&rule.trigger);
        if (!t || t->screen != s.current_screen || t->element != *s.focused_field)
            continue;
        if (t->expected != buf) continue;
        if (!guard_holds(rule.guard, next)) continue;
        apply_effect(w, next, rule.effect);
        return next;
    }
    return next;
}

WorldState apply_launch(const World& w, const WorldState& s, const std::string& app) {
    auto it = w.apps.find(app);
    if (it == w.apps.end())
        throw DeviceError(DeviceError::Kind::UnknownApp, "unknown app " + app);

    WorldState next = s;
    next.foreground_app = app;
    for (const auto& rule : w.rules) {
        const auto* t = std::get_if<LaunchTrigger>(&rule.trigger);
        if (!t || t->app != app) continue;
        if (!guard_holds(rule.guard, next)) continue;
        // a launch rule guarded on the cleared cache consumes the flag, so
        // the first-run screen shows once per reset
        if (rule.guard.cache_cleared && *rule.guard.cache_cleared)
            next.cache_cleared = false;
        apply_effect(w, next, rule.effect);
        return next;
    }
    enter_screen(w, next, it->second);
    return next;
}

WorldState apply_reset_cache(const WorldState& s) {
    WorldState next = s;
    next.cache_cleared = true;
    return next;
}

Observation render_screen(const World& w, const WorldState& s,
                          std::int64_t captured_at_ms) {
    const ScreenNode& node = screen_of(w, s);
    std::vector<Element> elems = visible_elements(w, s);
    std::sort(elems.begin(), elems.end(),
              [](const Element& a, const Element& b) { return a.id < b.id; });

    std::ostringstream out;
    out << "simdesc v1\n";
    out << "screen: " << node.id << "\n";
    out << "page: " << s.scroll_page << "/" << node.page_count() << "\n";
    out << "focus: " << (s.focused_field ? *s.focused_field : "none") << "\n";
    char boxbuf[96];
    for (const auto& e : elems) {
        std::snprintf(boxbuf, sizeof(boxbuf), "%.4f,%.4f,%.4f,%.4f", e.box.x1,
                      e.box.y1, e.box.x2, e.box.y2);
        std::string text = e.text_label;
        if (e.role == Role::TextField) {
            auto b = s.buffers.find(e.id);
            if (b != s.buffers.end()) text = b->second;
        }
        out << "element id=" << e.id << " role=" << to_string(e.role)
            << " box=" << boxbuf << " text=" << text << "\n";
    }

    Observation obs;
    obs.image_bytes = out.str();
    obs.format_tag = "simdesc";
    obs.screen_w = w.screen_w;
    obs.screen_h = w.screen_h;
    obs.captured_at_ms = captured_at_ms;
    return obs;
}

bool goal_check(const World& w, const WorldState& s, const SimGoal& goal) {
    (void)w;
    struct V {
        const WorldState& s;
        bool operator()(const ReachScreen& g) const {
            return s.current_screen == g.screen;
        }
        bool operator()(const BufferEquals& g) const {
            auto it = s.buffers.find(g.element);
            return it != s.buffers.end() && it->second == g.text;
        }
        bool operator()(const AppForeground& g) const {
            return s.foreground_app && *s.foreground_app == g.app;
        }
    };
    return std::visit(V{s}, goal.predicate);
}

SimDesc parse_simdesc(const std::string& payload) {
    SimDesc d;
    std::istringstream in(payload);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line.rfind("simdesc", 0) != 0)
                throw std::runtime_error("not a simdesc payload");
            continue;
        }
        if (line.rfind("screen: ", 0) == 0) {
            d.screen = line.substr(8);
        } else if (line.rfind("page: ", 0) == 0) {
            std::sscanf(line.c_str(), "page: %d/%d", &d.page, &d.page_count);
        } else if (line.rfind("focus: ", 0) == 0) {
            std::string f = line.substr(7);
            if (f != "none") d.focus = f;
        } else if (line.rfind("element ", 0) == 0) {
            Element e;
            auto id_pos = line.find("id=");
            auto role_pos = line.find(" role=");
            auto box_pos = line.find(" box=");
            auto text_pos = line.find(" text=");
            if (id_pos == std::string::npos || role_pos == std::string::npos ||
                box_pos == std::string::npos || text_pos == std::string::npos)
                throw std::runtime_error("malformed simdesc element line");
            e.id = line.substr(id_pos + 3, role_pos - (id_pos + 3));
            auto role = parse_role(line.substr(role_pos + 6, box_pos - (role_pos + 6)));
            if (!role) throw std::runtime_error("malformed simdesc role");
            e.role = *role;
            std::string box = line.substr(box_pos + 5, text_pos - (box_pos + 5));
            if (std::sscanf(box.c_str(), "%lf,%lf,%lf,%lf", &e.box.x1, &e.box.y1,
                            &e.box.x2, &e.box.y2) != 4)
                throw std::runtime_error("malformed simdesc box");
            e.text_label = line.substr(text_pos + 6);
            d.elements.push_back(std::move(e));
        }
    }
    return d;
}

std::string click_command_for(const std::string& element_id) {
    return "tap on element '" + element_id + "'";
}

namespace {

// Extracts the quoted name from `... '<name>'`; falls back to the full
// trimmed command.
std::string command_target(const std::string& command) {
    auto first = command.find('\'');
    auto last = command.rfind('\'');
    if (first != std::string::npos && last != std::string::npos && last > first)
        return command.substr(first + 1, last - first - 1);
    return trim(command);
}

} // namespace

BoundingBox PerfectLocatorBackend::locate(const Observation& obs,
                                          const std::string& command) {
    SimDesc d = parse_simdesc(obs.image_bytes);
    std::string target = command_target(command);
    for (const auto& e : d.elements)
        if (e.id == target) return e.box;
    for (const auto& e : d.elements)
        if (!e.text_label.empty() && e.text_label == target) return e.box;
    throw GatewayError(GatewayError::Kind::ElementNotFound,
                       "no element matching '" + target + "' on screen " + d.screen);
}

// ---- oracle BFS ----

namespace {

std::string state_key(const WorldState& s) {
    std::ostringstream k;
    k << s.current_screen << "|" << s.scroll_page << "|"
      << (s.focused_field ? *s.focused_field : "") << "|"
      << (s.foreground_app ? *s.foreground_app : "") << "|" << s.cache_cleared;
    for (const auto& [id, text] : s.buffers) k << "|" << id << "=" << text;
    return k.str();
}

// Candidate (action, successor) pairs from a state, deterministic order.
std::vector<std::pair<Action, WorldState>> successors(const World& w,
                                                      const WorldState& s,
                                                      const SimGoal& goal) {
    std::vector<std::pair<Action, WorldState>> out;
    std::string key = state_key(s);

    std::vector<Element> elems = visible_elements(w, s);
    std::sort(elems.begin(), elems.end(),
              [](const Element& a, const Element& b) { return a.id < b.id; });
    for (const auto& e : elems) {
        Point p = bbox_center(e.box, w.screen_w, w.screen_h);
        WorldState next = apply_tap(w, s, p);
        if (state_key(next) != key)
            out.emplace_back(Action{ClickAction{click_command_for(e.id)}}, std::move(next));
    }

    for (SwipeDirection d : {SwipeDirection::Up, SwipeDirection::Down,
                             SwipeDirection::Left, SwipeDirection::Right}) {
        WorldState next = apply_swipe(w, s, d);
        if (state_key(next) != key)
            out.emplace_back(Action{SwipeAction{d}}, std::move(next));
    }

    if (s.focused_field) {
        std::set<std::string> candidates;
        std::string current = [&] {
            auto it = s.buffers.find(*s.focused_field);
            return it == s.buffers.end() ? std::string() : it->second;
        }();
        for (const auto& rule : w.rules) {
            const auto* t = std::get_if<TypeSubmitTrigger>(&rule.trigger);
            if (t && t->screen == s.current_screen && t->element == *s.focused_field &&
                t->expected.rfind(current, 0) == 0 && t->expected != current)
                candidates.insert(t->expected.substr(current.size()));
        }
        if (const auto* g = std::get_if<BufferEquals>(&goal.predicate)) {
            if (g->element == *s.focused_field && g->text.rfind(current, 0) == 0 &&
                g->text != current)
                candidates.insert(g->text.substr(current.size()));
        }
        for (const auto& text : candidates)
            out.emplace_back(Action{TypeAction{text}}, apply_type(w, s, text));
    }

    for (const auto& [app, root] : w.apps) {
        (void)root;
        WorldState next = apply_launch(w, s, app);
        if (state_key(next) != key)
            out.emplace_back(Action{OpenAppAction{app}}, std::move(next));
    }

    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return render_action(a.first) < render_action(b.first);
    });
    return out;
}

struct BfsResult {
    std::optional<Action> first_action;
    std::optional<int> distance;
};

BfsResult bfs(const World& w, const WorldState& start, const SimGoal& goal) {
    if (goal_check(w, start, goal)) return {std::nullopt, 0};

    struct Node {
        WorldState state;
        Action first;
        int depth;
    };
    std::deque<Node> queue;
    std::set<std::string> visited{state_key(start)};

    for (auto& [action, next] : successors(w, start, goal)) {
        std::string k = state_key(next);
        if (!visited.insert(k).second) continue;
        if (goal_check(w, next, goal)) return {action, 1};
        queue.push_back(Node{std::move(next), action, 1});
    }

    constexpr std::size_t kMaxVisited = 200000;
    while (!queue.empty()) {
        Node node = std::move(queue.front());
        queue.pop_front();
        for (auto& [action, next] : successors(w, node.state, goal)) {
            std::string k = state_key(next);
            if (!visited.insert(k).second) continue;
            if (goal_check(w, next, goal))
                return {node.first, node.depth + 1};
            if (visited.size() > kMaxVisited)
                throw Unreachable("state space bound exceeded for goal " + goal.id);
            queue.push_back(Node{std::move(next), node.first, node.depth + 1});
        }
    }
    return {std::nullopt, std::nullopt};
}

} // namespace

std::optional<int> bfs_distance(const World& w, const WorldState& s,
                                const SimGoal& goal) {
    return bfs(w, s, goal).distance;
}

Action oracle_policy(const World& w, const WorldState& s, const SimGoal& goal) {
    BfsResult r = bfs(w, s, goal);
    if (!r.distance) throw Unreachable("goal " + goal.id + " unreachable");
    if (!r.first_action)
        throw Unreachable("goal " + goal.id + " already satisfied; no action needed");
    return *r.first_action;
}

std::string OracleChatBackend::complete(const ChatRequest& req) {
    switch (req.kind) {
        case ChatKind::Decision:
            return render_action(oracle_policy(*world_, *state_, goal_));
        case ChatKind::Reflection:
            return goal_check(*world_, *state_, goal_)
                       ? "STATUS: SUCCESS\nGoal condition holds."
                       : "STATUS: FAILURE\nGoal condition does not hold yet.";
        case ChatKind::AppSelect: {
            Action a = oracle_policy(*world_, *state_, goal_);
            if (const auto* open = std::get_if<OpenAppAction>(&a))
                return open->app_id;
            // decision was OpenApp but oracle no longer agrees; echo the
            // first listed app so the episode can proceed
            auto nl = req.user_text.find('\n');
            (void)nl;
            throw GatewayError(GatewayError::Kind::AppSelection,
                               "oracle has no app to select");
        }
    }
    throw std::logic_error("unhandled chat kind");
}

// ---- error injection ----

bool InjectionLog::has(const std::string& component) const {
    for (const auto& e : events)
        if (e.component == component) return true;
    return false;
}

BoundingBox dead_space_box(const std::vector<Element>& elements) {
    constexpr double kHalf = 0.01;
    for (int yi = 1; yi < 40; ++yi) {
        for (int xi = 1; xi < 40; ++xi) {
            double cx = xi / 40.0, cy = yi / 40.0;
            BoundingBox probe{cx - kHalf, cy - kHalf, cx + kHalf, cy + kHalf};
            bool clear = true;
            for (const auto& e : elements) {
                bool disjoint = probe.x2 < e.box.x1 || probe.x1 > e.box.x2 ||
                                probe.y2 < e.box.y1 || probe.y1 > e.box.y2;
                if (!disjoint) {
                    clear = false;
                    break;
                }
            }
            if (clear) return probe;
        }
    }
    // fully covered screen; use a degenerate corner box
    return BoundingBox{0.0, 0.0, 0.0, 0.0};
}

BoundingBox NoisyLocatorBackend::locate(const Observation& obs,
                                        const std::string& command) {
    int call = ++calls_;
    bool miss = rng_.next_unit() < miss_prob_;
    if (!miss) return inner_.locate(obs, command);
    SimDesc d = parse_simdesc(obs.image_bytes);
    BoundingBox box = dead_space_box(d.elements);
    if (log_)
        log_->events.push_back({call, "locator", "dead-space box for: " + command});
    return box;
}

std::string NoisyChatBackend::complete(const ChatRequest& req) {
    if (req.kind == ChatKind::Decision) {
        int call = ++decision_calls_;
        bool inject = decision_rng_.next_unit() < cfg_.decision_wrong_action_prob;
        std::string reply = inner_.complete(req);
        if (!inject) return reply;

        ParsedDecision parsed = parse_decision(reply);
        const Action* intended = std::get_if<Action>(&parsed);
        // wrong-typed substitute: any variant different from the intended one
        std::vector<Action> pool{
            Action{ClickAction{click_command_for("nonexistent-element")}},
            Action{TypeAction{"xyzzy"}},
            Action{SwipeAction{SwipeDirection::Left}},
        };
        std::vector<Action> candidates;
        for (const auto& a : pool)
            if (!intended || a.index() != intended->index()) candidates.push_back(a);
        Action wrong = candidates[decision_rng_.next_below(candidates.size())];
        if (log_)
            log_->events.push_back({call, "decision",
                                    "substituted " + render_action(wrong)});
        return render_action(wrong);
    }

    if (req.kind == ChatKind::Reflection) {
        int call = ++reflection_calls_;
        double draw = reflection_rng_.next_unit();
        std::string reply = inner_.complete(req);
        bool says_success =
            reply.find("STATUS: SUCCESS") != std::string::npos ||
            reply.find("status: success") != std::string::npos;
        if (says_success) {
            if (draw < cfg_.reflection_false_failure_prob) {
                if (log_)
                    log_->events.push_back({call, "reflection", "flipped success->failure"});
                return "STATUS: FAILURE\nInjected false failure.";
            }
        } else {
            if (draw < cfg_.reflection_false_success_prob) {
                if (log_)
                    log_->events.push_back({call, "reflection", "flipped failure->success"});
                return "STATUS: SUCCESS\nInjected false success.";
            }
        }
        return reply;
    }

    return inner_.complete(req);
}

// ---- YAML world loading ----

namespace {

BoundingBox parse_box_node(const YAML::Node& n, const std::string& path) {
    if (!n.IsSequence() || n.size() != 4)
        throw WorldLoadError(path + ": box must be [x1,y1,x2,y2]");
    BoundingBox b{n[0].as<double>(), n[1].as<double>(), n[2].as<double>(),
                  n[3].as<double>()};
    if (!b.valid()) throw WorldLoadError(path + ": box out of range or inverted");
    return b;
}

Element parse_element(const YAML::Node& n, const std::string& path) {
    Element e;
    e.id = n["id"].as<std::string>();
    e.box = parse_box_node(n["box"], path + ".box");
    if (n["text"]) e.text_label = n["text"].as<std::string>();
    std::string role = n["role"] ? n["role"].as<std::string>() : "button";
    auto r = parse_role(role);
    if (!r) throw WorldLoadError(path + ".role: unknown role '" + role + "'");
    e.role = *r;
    return e;
}

} // namespace

World load_world(const std::string& path) {
    YAML::Node doc;
    try {
        doc = YAML::LoadFile(path);
    } catch (const YAML::Exception& e) {
        throw WorldLoadError(path + ": " + e.what());
    }

    if (!doc["schema_version"] || doc["schema_version"].as<int>() != 1)
        throw WorldLoadError(path + ": schema_version must be 1");

    World w;
    w.id = doc["id"] ? doc["id"].as<std::string>() : "world";
    if (doc["screen"]) {
        w.screen_w = doc["screen"]["width"].as<int>();
        w.screen_h = doc["screen"]["height"].as<int>();
    }
    w.initial_screen = doc["initial_screen"].as<std::string>();

    int si = 0;
    for (const auto& sn : doc["screens"]) {
        std::string spath = "screens[" + std::to_string(si++) + "]";
        ScreenNode node;
        node.id = sn["id"].as<std::string>();
        if (!sn["pages"] || sn["pages"].size() == 0)
            throw WorldLoadError(spath + ": at least one page required");
        int pi = 0;
        for (const auto& page : sn["pages"]) {
            std::string ppath = spath + ".pages[" + std::to_string(pi++) + "]";
            std::vector<Element> elems;
            std::set<std::string> ids;
            int ei = 0;
            for (const auto& en : page) {
                Element e = parse_element(en, ppath + "[" + std::to_string(ei++) + "]");
                if (!ids.insert(e.id).second)
                    throw WorldLoadError(ppath + ": duplicate element id '" + e.id + "'");
                elems.push_back(std::move(e));
            }
            node.pages.push_back(std::move(elems));
        }
        if (sn["focus"]) node.initial_focus = sn["focus"].as<std::string>();
        if (!w.screens.emplace(node.id, node).second)
            throw WorldLoadError(spath + ": duplicate screen id '" + node.id + "'");
    }

    int ai = 0;
    for (const auto& an : doc["apps"]) {
        std::string apath = "apps[" + std::to_string(ai++) + "]";
        std::string id = an["id"].as<std::string>();
        std::string root = an["root"].as<std::string>();
        if (!w.apps.emplace(id, root).second)
            throw WorldLoadError(apath + ": duplicate app id '" + id + "'");
    }

    int ri = 0;
    for (const auto& rn : doc["rules"]) {
        std::string rpath = "rules[" + std::to_string(ri++) + "]";
        TransitionRule rule;
        std::string on = rn["on"].as<std::string>();
        if (on == "tap") {
            rule.trigger = TapTrigger{rn["screen"].as<std::string>(),
                                      rn["element"].as<std::string>()};
        } else if (on == "type_submit") {
            rule.trigger = TypeSubmitTrigger{rn["screen"].as<std::string>(),
                                             rn["element"].as<std::string>(),
                                             rn["expected"].as<std::string>()};
        } else if (on == "swipe") {
            auto d = parse_direction(rn["direction"].as<std::string>());
            if (!d) throw WorldLoadError(rpath + ".direction: unknown direction");
            rule.trigger = SwipeTrigger{rn["screen"].as<std::string>(), *d};
        } else if (on == "launch") {
            rule.trigger = LaunchTrigger{rn["app"].as<std::string>()};
        } else {
            throw WorldLoadError(rpath + ".on: unknown trigger '" + on + "'");
        }
        if (rn["when_cache_cleared"])
            rule.guard.cache_cleared = rn["when_cache_cleared"].as<bool>();
        if (rn["goto"]) {
            rule.effect = GotoScreen{rn["goto"].as<std::string>()};
        } else if (rn["focus"]) {
            rule.effect = FocusElement{rn["focus"].as<std::string>()};
        } else {
            throw WorldLoadError(rpath + ": rule needs goto or focus effect");
        }
        w.rules.push_back(std::move(rule));
    }

    int gi = 0;
    for (const auto& gn : doc["goals"]) {
        std::string gpath = "goals[" + std::to_string(gi++) + "]";
        SimGoal g;
        g.id = gn["id"].as<std::string>();
        if (gn["reach"]) {
            g.predicate = ReachScreen{gn["reach"].as<std::string>()};
        } else if (gn["buffer"]) {
            g.predicate = BufferEquals{gn["buffer"]["element"].as<std::string>(),
                                       gn["buffer"]["equals"].as<std::string>()};
        } else if (gn["app_foreground"]) {
            g.predicate = AppForeground{gn["app_foreground"].as<std::string>()};
        } else {
            throw WorldLoadError(gpath + ": goal needs reach, buffer or app_foreground");
        }
        if (!w.goals.emplace(g.id, g).second)
            throw WorldLoadError(gpath + ": duplicate goal id '" + g.id + "'");
    }

    validate_world(w);
    return w;
}

void validate_world(const World& w) {
    auto require_screen = [&](const std::string& id, const std::string& path) {
        if (w.screens.find(id) == w.screens.end())
            throw WorldLoadError(path + ": unknown screen '" + id + "'");
    };
    auto element_exists = [&](const std::string& screen, const std::string& elem) {
        const auto& node = w.screens.at(screen);
        for (const auto& page : node.pages)
            if (find_element(page, elem)) return true;
        return false;
    };

    require_screen(w.initial_screen, "initial_screen");
    for (const auto& [app, root] : w.apps)
        require_screen(root, "apps." + app + ".root");

    int ri = 0;
    for (const auto& rule : w.rules) {
        std::string rpath = "rules[" + std::to_string(ri++) + "]";
        if (const auto* t = std::get_if<TapTrigger>(&rule.trigger)) {
            require_screen(t->screen, rpath + ".screen");
            if (!element_exists(t->screen, t->element))
                throw WorldLoadError(rpath + ".element: unknown element '" +
                                     t->element + "' on screen '" + t->screen + "'");
        } else if (const auto* ts = std::get_if<TypeSubmitTrigger>(&rule.trigger)) {
            require_screen(ts->screen, rpath + ".screen");
            if (!element_exists(ts->screen, ts->element))
                throw WorldLoadError(rpath + ".element: unknown element '" +
                                     ts->element + "' on screen '" + ts->screen + "'");
        } else if (const auto* sw = std::get_if<SwipeTrigger>(&rule.trigger)) {
            require_screen(sw->screen, rpath + ".screen");
        } else if (const auto* l = std::get_if<LaunchTrigger>(&rule.trigger)) {
            if (w.apps.find(l->app) == w.apps.end())
                throw WorldLoadError(rpath + ".app: unknown app '" + l->app + "'");
        }
        if (const auto* g = std::get_if<GotoScreen>(&rule.effect))
            require_screen(g->screen, rpath + ".goto");
    }

    for (const auto& [id, goal] : w.goals) {
        if (const auto* r = std::get_if<ReachScreen>(&goal.predicate))
            require_screen(r->screen, "goals." + id + ".reach");
        if (const auto* a = std::get_if<AppForeground>(&goal.predicate))
            if (w.apps.find(a->app) == w.apps.end())
                throw WorldLoadError("goals." + id + ".app_foreground: unknown app '" +
                                     a->app + "'");
    }

    for (const auto& [id, node] : w.screens) {
        if (node.initial_focus) {
            bool found = false;
            for (const auto& page : node.pages) {
                const Element* e = find_element(page, *node.initial_focus);
                if (e && e->role == Role::TextField) found = true;
            }
            if (!found)
                throw WorldLoadError("screens." + id + ".focus: '" + *node.initial_focus +
                                     "' is not a text_field on that screen");
        }
    }
}

} // namespace clickagent::sim
