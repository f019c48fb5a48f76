// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <algorithm>
#include <map>
#include <memory>
#include <vector>

#include "clickagent/device.hpp"
#include "clickagent/simworld.hpp"

using namespace clickagent;

namespace {

/// Fake shell that records every command line and serves canned replies.
class RecordingShell : public ShellRunner {
public:
    std::vector<std::string> commands;
    std::map<std::string, std::string> replies; // command -> stdout

    std::string run(const std::string& command_line) override {
        commands.push_back(command_line);
        auto it = replies.find(command_line);
        return it == replies.end() ? "" : it->second;
    }
};

} // namespace

TEST_CASE("swipe_geometry: worked examples on 1080x1920") {
    auto up = swipe_geometry(SwipeDirection::Up, 1080, 1920);
    CHECK(up.from == Point{540, 1280, 1080, 1920});
    CHECK(up.to == Point{540, 640, 1080, 1920});
    CHECK(up.duration_ms == 300);

    auto down = swipe_geometry(SwipeDirection::Down, 1080, 1920);
    CHECK(down.from == up.to);
    CHECK(down.to == up.from);

    auto left = swipe_geometry(SwipeDirection::Left, 1080, 1920);
    CHECK(left.from == Point{900, 960, 1080, 1920});
    CHECK(left.to == Point{180, 960, 1080, 1920});

    auto right = swipe_geometry(SwipeDirection::Right, 1080, 1920);
    CHECK(right.from == left.to);
    CHECK(right.to == left.from);
}

TEST_CASE("adb_escape_text: spaces become %s, metacharacters are rejected") {
    CHECK(adb_escape_text("hello world") == "hello%sworld");
    CHECK(adb_escape_text("abc123") == "abc123");
    CHECK(adb_escape_text("a b c") == "a%sb%sc");
    for (std::string bad : {"rm -rf $HOME", "a;b", "say \"hi\"", "tick`tock",
                            "pipe|it", "tab\tchar"}) {
        try {
            adb_escape_text(bad);
            FAIL("expected DeviceError for: " << bad);
        } catch (const DeviceError& e) {
            CHECK(e.kind() == DeviceError::Kind::TextEscape);
        }
    }
}

TEST_CASE("AdbDevice emits the exact adb command lines") {
    auto shell = std::make_shared<RecordingShell>();
    shell->replies["adb -s emulator-5554 exec-out screencap -p"] = "PNGBYTES";
    shell->replies["adb -s emulator-5554 shell pm list packages"] =
        "package:com.android.settings\n"
        "package:com.google.android.gm\n"
        "package:com.android.settings\n"; // duplicate on purpose
    AdbDevice dev("emulator-5554", 1080, 1920, shell, "adb");

    auto obs = dev.capture_screenshot();
    CHECK(obs.image_bytes == "PNGBYTES");
    CHECK(obs.format_tag == "png");

    dev.tap(Point{540, 1152, 1080, 1920});
    dev.swipe(SwipeDirection::Up);
    dev.type_text("hello world");
    auto apps = dev.list_apps();
    dev.launch_app("com.google.android.gm");
    dev.reset_cache({"com.android.settings"});

    CHECK(apps == std::vector<std::string>{"com.android.settings",
                                           "com.google.android.gm"});
    REQUIRE(shell->commands.size() == 7);
    CHECK(shell->commands[0] == "adb -s emulator-5554 exec-out screencap -p");
    CHECK(shell->commands[1] == "adb -s emulator-5554 shell input tap 540 1152");
    CHECK(shell->commands[2] ==
          "adb -s emulator-5554 shell input swipe 540 1280 540 640 300");
    CHECK(shell->commands[3] ==
          "adb -s emulator-5554 shell input text \"hello%sworld\"");
    CHECK(shell->commands[4] == "adb -s emulator-5554 shell pm list packages");
    CHECK(shell->commands[5] ==
          "adb -s emulator-5554 shell monkey -p com.google.android.gm "
          "-c android.intent.category.LAUNCHER 1");
    CHECK(shell->commands[6] ==
          "adb -s emulator-5554 shell pm clear com.android.settings");
}

TEST_CASE("AdbDevice: empty screencap output is an EmptyCapture error") {
    auto shell = std::make_shared<RecordingShell>();
    AdbDevice dev("serial-x", 1080, 1920, shell, "adb");
    try {
        dev.capture_screenshot();
        FAIL("expected DeviceError");
    } catch (const DeviceError& e) {
        CHECK(e.kind() == DeviceError::Kind::EmptyCapture);
    }
}

TEST_CASE("AdbDevice honors a custom adb path") {
    auto shell = std::make_shared<RecordingShell>();
    AdbDevice dev("s1", 1080, 1920, shell, "/opt/platform-tools/adb");
    dev.tap(Point{1, 2, 1080, 1920});
    REQUIRE(shell->commands.size() == 1);
    CHECK(shell->commands[0] == "/opt/platform-tools/adb -s s1 shell input tap 1 2");
}

TEST_CASE("SimDevice delegates to the world transitions") {
    auto world = std::make_shared<sim::World>(
        sim::load_world("assets/worlds/general.yaml"));
    SimDevice dev(world, 1);

    auto info = dev.info();
    CHECK(info.driver == "sim");
    CHECK(info.screen_w == world->screen_w);
    CHECK(info.screen_h == world->screen_h);

    auto apps = dev.list_apps();
    CHECK(std::is_sorted(apps.begin(), apps.end()));
    CHECK(std::adjacent_find(apps.begin(), apps.end()) == apps.end());

    // capture clock is monotonic
    auto o1 = dev.capture_screenshot();
    auto o2 = dev.capture_screenshot();
    CHECK(o1.format_tag == "simdesc");
    CHECK(o2.captured_at_ms > o1.captured_at_ms);
    CHECK(o1.image_bytes == o2.image_bytes); // no state change in between

    // tapping dead space leaves the screen unchanged
    dev.tap(Point{0, 0, world->screen_w, world->screen_h});
    CHECK(dev.capture_screenshot().image_bytes == o1.image_bytes);

    // unknown app launch is typed
    try {
        dev.launch_app("com.does.not.exist");
        FAIL("expected DeviceError");
    } catch (const DeviceError& e) {
        CHECK(e.kind() == DeviceError::Kind::UnknownApp);
    }

    // typing with no focused field is typed
    try {
        dev.type_text("hi");
        FAIL("expected DeviceError");
    } catch (const DeviceError& e) {
        CHECK(e.kind() == DeviceError::Kind::NoFocusedField);
    }
}
