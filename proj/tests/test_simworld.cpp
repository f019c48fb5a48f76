// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>

#include "clickagent/device.hpp"
#include "clickagent/rng.hpp"
#include "clickagent/simworld.hpp"

using namespace clickagent;
using namespace clickagent::sim;

namespace {

Point center_of(const World& w, const WorldState& s, const std::string& id) {
    for (const Element& e : visible_elements(w, s))
        if (e.id == id) return bbox_center(e.box, w.screen_w, w.screen_h);
    FAIL("element not visible: " << id);
    return {};
}

WorldState tap_on(const World& w, const WorldState& s, const std::string& id) {
    return apply_tap(w, s, center_of(w, s, id));
}

std::string write_temp_world(const std::string& yaml) {
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() / "clickagent_bad_world.yaml";
    std::ofstream f(p);
    f << yaml;
    f.close();
    return p.string();
}

} // namespace

TEST_CASE("shipped worlds load and validate") {
    World g = load_world("assets/worlds/general.yaml");
    CHECK(g.id == "general");
    CHECK(g.screens.size() == 17);
    CHECK(g.rules.size() == 26);
    CHECK(g.goals.size() == 11);

    World s = load_world("assets/worlds/shopping.yaml");
    CHECK(s.id == "shopping");
    CHECK(s.screens.size() == 12);
    CHECK(s.goals.size() == 12);
}

TEST_CASE("load_world rejects dangling references with a precise path") {
    std::string bad =
        "schema_version: 1\n"
        "id: bad\n"
        "screen: {width: 100, height: 100}\n"
        "initial_screen: a\n"
        "screens:\n"
        "  - id: a\n"
        "    pages:\n"
        "      - - {id: b1, role: button, box: [0.1, 0.1, 0.2, 0.2], text: B}\n"
        "rules:\n"
        "  - {on: tap, screen: a, element: b1, goto: nowhere}\n"
        "goals: []\n";
    auto path = write_temp_world(bad);
    try {
        load_world(path);
        FAIL("expected WorldLoadError");
    } catch (const WorldLoadError& e) {
        CHECK(std::string(e.what()).find("nowhere") != std::string::npos);
    }
}

TEST_CASE("load_world rejects a future schema version") {
    auto path = write_temp_world(
        "schema_version: 2\nid: x\nscreen: {width: 10, height: 10}\n"
        "initial_screen: a\nscreens:\n  - id: a\n    pages:\n      - []\n");
    CHECK_THROWS_AS(load_world(path), WorldLoadError);
}

TEST_CASE("apply_tap: ruled element transitions, dead space does not") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    CHECK(s.current_screen == "home");

    WorldState after = tap_on(w, s, "icon_settings");
    CHECK(after.current_screen == "settings_root");
    CHECK(after.scroll_page == 0);

    WorldState same = apply_tap(w, s, Point{0, 0, w.screen_w, w.screen_h});
    CHECK(same.current_screen == "home");
}

TEST_CASE("apply_tap: tapping an unruled text field focuses it") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    s = tap_on(w, s, "icon_search");
    CHECK(s.current_screen == "search");
    CHECK(!s.focused_field.has_value());
    s = tap_on(w, s, "field_search");
    CHECK(s.focused_field == "field_search");
}

TEST_CASE("apply_swipe: vertical swipes page with clamping") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    CHECK(screen_of(w, s).page_count() == 2);

    s = apply_swipe(w, s, SwipeDirection::Up);
    CHECK(s.scroll_page == 1);
    s = apply_swipe(w, s, SwipeDirection::Up); // clamp at the last page
    CHECK(s.scroll_page == 1);
    s = apply_swipe(w, s, SwipeDirection::Down);
    CHECK(s.scroll_page == 0);
    s = apply_swipe(w, s, SwipeDirection::Down); // clamp at the first page
    CHECK(s.scroll_page == 0);
}

TEST_CASE("screen entry resets the scroll page") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    s = apply_swipe(w, s, SwipeDirection::Up);
    s = tap_on(w, s, "icon_calc");
    CHECK(s.current_screen == "calc_root");
    CHECK(s.scroll_page == 0);
}

TEST_CASE("apply_type: buffer append and type_submit rule") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    s = tap_on(w, s, "icon_search");
    s = tap_on(w, s, "field_search");
    s = apply_type(w, s, "weather");
    CHECK(s.buffers.at("field_search") == "weather");
    CHECK(s.current_screen == "search_results"); // submit rule fired
}

TEST_CASE("apply_type without focus is NoFocusedField") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    try {
        apply_type(w, s, "hello");
        FAIL("expected DeviceError");
    } catch (const DeviceError& e) {
        CHECK(e.kind() == DeviceError::Kind::NoFocusedField);
    }
}

TEST_CASE("apply_launch: app root and unknown app") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    s = apply_launch(w, s, "com.google.android.gm");
    CHECK(s.current_screen == "gmail_inbox");
    CHECK(s.foreground_app == "com.google.android.gm");
    CHECK_THROWS_AS(apply_launch(w, s, "com.nope"), DeviceError);
}

TEST_CASE("cache flag gates the shop popup and is consumed when fired") {
    World w = load_world("assets/worlds/shopping.yaml");

    // no_cache_removal path: straight to the shop
    WorldState clean = initial_state(w, 1);
    CHECK_FALSE(clean.cache_cleared);
    WorldState direct = tap_on(w, clean, "icon_shop");
    CHECK(direct.current_screen == "shop_home");

    // cache_removal path: popup first, then it never fires again
    WorldState cleared = apply_reset_cache(clean);
    CHECK(cleared.cache_cleared);
    WorldState popup = tap_on(w, cleared, "icon_shop");
    CHECK(popup.current_screen == "popup_welcome");
    CHECK_FALSE(popup.cache_cleared); // flag consumed
    WorldState shop = tap_on(w, popup, "btn_accept");
    CHECK(shop.current_screen == "shop_home");
    WorldState back_home = apply_launch(w, shop, "com.shop.app");
    CHECK(back_home.current_screen == "shop_home"); // no popup the 2nd time
}

TEST_CASE("guarded launch rule also routes through the popup") {
    World w = load_world("assets/worlds/shopping.yaml");
    WorldState cleared = apply_reset_cache(initial_state(w, 1));
    WorldState popup = apply_launch(w, cleared, "com.shop.app");
    CHECK(popup.current_screen == "popup_welcome");
    CHECK(popup.foreground_app == "com.shop.app");
    CHECK_FALSE(popup.cache_cleared);
}

TEST_CASE("render_screen is byte-deterministic and page-sensitive") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    auto a = render_screen(w, s, 5);
    auto b = render_screen(w, s, 5);
    CHECK(a.image_bytes == b.image_bytes);
    CHECK(a.format_tag == "simdesc");
    CHECK(a.image_bytes.rfind("simdesc v1\n", 0) == 0);

    WorldState paged = apply_swipe(w, s, SwipeDirection::Up);
    CHECK(render_screen(w, paged, 5).image_bytes != a.image_bytes);

    auto desc = parse_simdesc(a.image_bytes);
    CHECK(desc.screen == "home");
    CHECK(desc.page == 0);
    CHECK(desc.page_count == 2);
    CHECK(desc.elements.size() == 4);
    // elements are listed in sorted id order
    for (std::size_t i = 1; i < desc.elements.size(); ++i)
        CHECK(desc.elements[i - 1].id < desc.elements[i].id);
}

TEST_CASE("goal_check covers all three predicate kinds") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    CHECK_FALSE(goal_check(w, s, w.goals.at("g_settings")));
    s = tap_on(w, s, "icon_settings");
    CHECK(goal_check(w, s, w.goals.at("g_settings")));

    WorldState g = apply_launch(w, initial_state(w, 1), "com.google.android.gm");
    CHECK(goal_check(w, g, w.goals.at("g_gmail_open")));

    WorldState t = initial_state(w, 1);
    t = tap_on(w, t, "icon_search");
    t = tap_on(w, t, "field_search");
    t = apply_type(w, t, "weather");
    CHECK(goal_check(w, t, w.goals.at("g_search_typed")));
}

TEST_CASE("PerfectLocatorBackend resolves ids and exact labels") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    auto obs = render_screen(w, s, 0);
    PerfectLocatorBackend loc;

    auto by_id = loc.locate(obs, click_command_for("icon_settings"));
    CHECK(by_id == BoundingBox{0.05, 0.10, 0.20, 0.18});

    auto by_label = loc.locate(obs, "tap on element 'Settings'");
    CHECK(by_label == by_id);

    try {
        loc.locate(obs, click_command_for("btn_missing"));
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayError::Kind::ElementNotFound);
    }
}

TEST_CASE("oracle_policy: one-hop goal is a Click on the right element") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    Action a = oracle_policy(w, s, w.goals.at("g_settings"));
    CHECK(a == Action{ClickAction{click_command_for("icon_settings")}});
}

TEST_CASE("oracle_policy: goal behind a scroll starts with Swipe up") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    Action a = oracle_policy(w, s, w.goals.at("g_calc"));
    CHECK(a == Action{SwipeAction{SwipeDirection::Up}});
    CHECK(bfs_distance(w, s, w.goals.at("g_calc")) == 2);
}

TEST_CASE("oracle_policy: typed-buffer goal routes through focus and Type") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    const SimGoal& goal = w.goals.at("g_search_typed");
    CHECK(bfs_distance(w, s, goal) == 3);

    // walk the oracle to the goal, applying its own actions
    auto dev_world = std::make_shared<World>(w);
    SimDevice dev(dev_world, 1);
    for (int i = 0; i < 3; ++i) {
        Action a = oracle_policy(w, *dev.state(), goal);
        if (auto* c = std::get_if<ClickAction>(&a)) {
            PerfectLocatorBackend loc;
            auto box = loc.locate(dev.capture_screenshot(), c->ui_command);
            dev.tap(bbox_center(box, w.screen_w, w.screen_h));
        } else if (auto* t = std::get_if<TypeAction>(&a)) {
            dev.type_text(t->text);
        } else if (auto* sw = std::get_if<SwipeAction>(&a)) {
            dev.swipe(sw->direction);
        } else {
            dev.launch_app(std::get<OpenAppAction>(a).app_id);
        }
    }
    CHECK(goal_check(w, *dev.state(), goal));
}

TEST_CASE("oracle_policy: unreachable goal throws") {
    World w = load_world("assets/worlds/shopping.yaml");
    WorldState s = initial_state(w, 1); // cache flag not set
    SimGoal unreachable{"g_popup", ReachScreen{"popup_welcome"}};
    CHECK_FALSE(bfs_distance(w, s, unreachable).has_value());
    CHECK_THROWS_AS(oracle_policy(w, s, unreachable), Unreachable);
}

TEST_CASE("BFS depth inventory spans 1..6 on both worlds") {
    for (const char* path :
         {"assets/worlds/general.yaml", "assets/worlds/shopping.yaml"}) {
        World w = load_world(path);
        WorldState s = initial_state(w, 1);
        std::set<int> depths;
        for (const auto& [id, goal] : w.goals) {
            auto d = bfs_distance(w, s, goal);
            REQUIRE_MESSAGE(d.has_value(), "unreachable goal " << id);
            depths.insert(*d);
        }
        for (int d = 1; d <= 6; ++d)
            CHECK_MESSAGE(depths.count(d) == 1, path << " missing depth " << d);
    }
}

TEST_CASE("dead_space_box intersects no visible element") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    const auto& elems = visible_elements(w, s);
    BoundingBox dead = dead_space_box(elems);
    CHECK(dead.valid());
    for (const Element& e : elems) {
        bool overlap = dead.x1 < e.box.x2 && e.box.x1 < dead.x2 &&
                       dead.y1 < e.box.y2 && e.box.y1 < dead.y2;
        CHECK_FALSE(overlap);
    }
    // a dead-space tap leaves the state unchanged
    Point p = bbox_center(dead, w.screen_w, w.screen_h);
    CHECK(apply_tap(w, s, p).current_screen == s.current_screen);
}

TEST_CASE("NoisyLocatorBackend: probability 1 always misses, 0 never") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    auto obs = render_screen(w, s, 0);
    PerfectLocatorBackend inner;

    ErrorInjectionConfig always;
    always.locator_miss_prob = 1.0;
    always.seed = 5;
    auto log = std::make_shared<InjectionLog>();
    NoisyLocatorBackend noisy(inner, always, log);
    auto box = noisy.locate(obs, click_command_for("icon_settings"));
    CHECK(apply_tap(w, s, bbox_center(box, w.screen_w, w.screen_h))
              .current_screen == "home");
    CHECK(log->events.size() == 1);
    CHECK(log->events[0].component == "locator");

    ErrorInjectionConfig never;
    never.locator_miss_prob = 0.0;
    never.seed = 5;
    auto log2 = std::make_shared<InjectionLog>();
    NoisyLocatorBackend clean(inner, never, log2);
    CHECK(clean.locate(obs, click_command_for("icon_settings")) ==
          BoundingBox{0.05, 0.10, 0.20, 0.18});
    CHECK(log2->events.empty());
}

TEST_CASE("noisy backends draw identical seeded sequences") {
    World w = load_world("assets/worlds/general.yaml");
    WorldState s = initial_state(w, 1);
    auto obs = render_screen(w, s, 0);
    PerfectLocatorBackend inner;

    auto draw_pattern = [&](std::uint64_t seed) {
        ErrorInjectionConfig cfg;
        cfg.locator_miss_prob = 0.5;
        cfg.seed = seed;
        auto log = std::make_shared<InjectionLog>();
        NoisyLocatorBackend noisy(inner, cfg, log);
        std::vector<bool> missed;
        BoundingBox truth{0.05, 0.10, 0.20, 0.18};
        for (int i = 0; i < 32; ++i)
            missed.push_back(
                noisy.locate(obs, click_command_for("icon_settings")) != truth);
        return missed;
    };

    auto a = draw_pattern(42);
    auto b = draw_pattern(42);
    CHECK(a == b);
    CHECK(std::count(a.begin(), a.end(), true) > 0);
    CHECK(std::count(a.begin(), a.end(), false) > 0);
    CHECK(draw_pattern(43) != a);
}

TEST_CASE("NoisyChatBackend flips verdicts and substitutes decisions") {
    // reflection flip: inner says FAILURE, injector reports SUCCESS
    ScriptedChatBackend inner;
    inner.set_default(ChatKind::Reflection, "STATUS: FAILURE\nnot there yet");
    inner.set_default(ChatKind::Decision, "ACTION: SWIPE\nDIRECTION: up");

    ErrorInjectionConfig cfg;
    cfg.reflection_false_success_prob = 1.0;
    cfg.decision_wrong_action_prob = 1.0;
    cfg.seed = 9;
    auto log = std::make_shared<InjectionLog>();
    NoisyChatBackend noisy(inner, cfg, log);

    ChatRequest refl;
    refl.kind = ChatKind::Reflection;
    auto flipped = noisy.complete(refl);
    CHECK(flipped.find("STATUS: SUCCESS") != std::string::npos);

    ChatRequest dec;
    dec.kind = ChatKind::Decision;
    auto wrong = noisy.complete(dec);
    auto parsed = parse_decision(wrong);
    REQUIRE(std::holds_alternative<Action>(parsed));
    // the substituted action is a different variant than the intended Swipe
    CHECK_FALSE(std::holds_alternative<SwipeAction>(std::get<Action>(parsed)));

    CHECK(log->has("reflection"));
    CHECK(log->has("decision"));
}
