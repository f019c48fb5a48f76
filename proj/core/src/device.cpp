// SPDX-License-Identifier: Apache-2.0
#include "clickagent/device.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

#include "clickagent/simworld.hpp"

namespace clickagent {

GestureSpec swipe_geometry(SwipeDirection d, int screen_w, int screen_h) {
    int cx = screen_w / 2, cy = screen_h / 2;
    GestureSpec g;
    g.duration_ms = 300;
    switch (d) {
        case SwipeDirection::Up:
            g.from = Point{cx, screen_h * 2 / 3, screen_w, screen_h};
            g.to = Point{cx, screen_h / 3, screen_w, screen_h};
            break;
        case SwipeDirection::Down:
            g.from = Point{cx, screen_h / 3, screen_w, screen_h};
            g.to = Point{cx, screen_h * 2 / 3, screen_w, screen_h};
            break;
        case SwipeDirection::Left:
            g.from = Point{screen_w * 5 / 6, cy, screen_w, screen_h};
            g.to = Point{screen_w / 6, cy, screen_w, screen_h};
            break;
        case SwipeDirection::Right:
            g.from = Point{screen_w / 6, cy, screen_w, screen_h};
            g.to = Point{screen_w * 5 / 6, cy, screen_w, screen_h};
            break;
    }
    return g;
}

std::string adb_escape_text(const std::string& text) {
    static const std::string forbidden = "\"'`\\$&|;<>(){}[]*?!#~\n\r\t";
    std::string out;
    for (char c : text) {
        if (forbidden.find(c) != std::string::npos)
            throw DeviceError(DeviceError::Kind::TextEscape,
                              std::string("refusing to escape shell metacharacter '") +
                                  c + "'");
        if (c == ' ')
            out += "%s";
        else
            out.push_back(c);
    }
    return out;
}

std::string SystemShellRunner::run(const std::string& command_line) {
    std::array<char, 4096> buf;
    std::string out;
    FILE* pipe = popen(command_line.c_str(), "r");
    if (!pipe)
        throw DeviceError(DeviceError::Kind::Unreachable,
                          "failed to spawn: " + command_line);
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
        out.append(buf.data(), n);
    int rc = pclose(pipe);
    if (rc != 0)
        throw DeviceError(DeviceError::Kind::Unreachable,
                          "command exited " + std::to_string(rc) + ": " + command_line);
    return out;
}

AdbDevice::AdbDevice(std::string serial, int screen_w, int screen_h,
                     std::shared_ptr<ShellRunner> shell, std::string adb_path)
    : serial_(std::move(serial)), screen_w_(screen_w), screen_h_(screen_h),
      shell_(std::move(shell)), adb_path_(std::move(adb_path)) {
    if (adb_path_.empty()) {
        const char* env = std::getenv("ADB_PATH");
        adb_path_ = env && *env ? env : "adb";
    }
}

std::string AdbDevice::prefix() const {
    return adb_path_ + " -s " + serial_;
}

DeviceInfo AdbDevice::info() const {
    return DeviceInfo{"adb", screen_w_, screen_h_, serial_};
}

Observation AdbDevice::capture_screenshot() {
    std::string png = shell_->run(prefix() + " exec-out screencap -p");
    if (png.empty())
        throw DeviceError(DeviceError::Kind::EmptyCapture,
                          "screencap returned no bytes for " + serial_);
    Observation obs;
    obs.image_bytes = std::move(png);
    obs.format_tag = "png";
    obs.screen_w = screen_w_;
    obs.screen_h = screen_h_;
    obs.captured_at_ms = 0;
    return obs;
}

void AdbDevice::tap(const Point& p) {
    shell_->run(prefix() + " shell input tap " + std::to_string(p.x) + " " +
                std::to_string(p.y));
}

void AdbDevice::swipe(SwipeDirection d) {
    GestureSpec g = swipe_geometry(d, screen_w_, screen_h_);
    std::ostringstream cmd;
    cmd << prefix() << " shell input swipe " << g.from.x << " " << g.from.y << " "
        << g.to.x << " " << g.to.y << " " << g.duration_ms;
    shell_->run(cmd.str());
}

void AdbDevice::type_text(const std::string& text) {
    shell_->run(prefix() + " shell input text \"" + adb_escape_text(text) + "\"");
}

std::vector<std::string> AdbDevice::list_apps() {
    std::string out = shell_->run(prefix() + " shell pm list packages");
    std::set<std::string> ids;
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.rfind("package:", 0) == 0) line = line.substr(8);
        if (!line.empty()) ids.insert(line);
    }
    return {ids.begin(), ids.end()};
}

void AdbDevice::launch_app(const std::string& app_id) {
    shell_->run(prefix() + " shell monkey -p " + app_id +
                " -c android.intent.category.LAUNCHER 1");
}

void AdbDevice::reset_cache(const std::vector<std::string>& scope) {
    for (const auto& pkg : scope)
        shell_->run(prefix() + " shell pm clear " + pkg);
}

SimDevice::SimDevice(std::shared_ptr<const sim::World> world, std::uint64_t seed)
    : world_(std::move(world)),
      state_(std::make_shared<sim::WorldState>(sim::initial_state(*world_, seed))) {}

DeviceInfo SimDevice::info() const {
    return DeviceInfo{"sim", world_->screen_w, world_->screen_h, world_->id};
}

std::shared_ptr<const sim::WorldState> SimDevice::state() const {
    return state_;
}

Observation SimDevice::capture_screenshot() {
    return sim::render_screen(*world_, *state_, clock_ms_++);
}

void SimDevice::tap(const Point& p) {
    *state_ = sim::apply_tap(*world_, *state_, p);
}

void SimDevice::swipe(SwipeDirection d) {
    *state_ = sim::apply_swipe(*world_, *state_, d);
}

void SimDevice::type_text(const std::string& text) {
    *state_ = sim::apply_type(*world_, *state_, text);
}

std::vector<std::string> SimDevice::list_apps() {
    std::vector<std::string> ids;
    for (const auto& [id, root] : world_->apps) ids.push_back(id);
    return ids; // map iteration is already sorted and unique
}

void SimDevice::launch_app(const std::string& app_id) {
    *state_ = sim::apply_launch(*world_, *state_, app_id);
}

void SimDevice::reset_cache(const std::vector<std::string>&) {
    *state_ = sim::apply_reset_cache(*state_);
}

} // namespace clickagent
