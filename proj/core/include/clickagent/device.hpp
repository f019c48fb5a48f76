// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "clickagent/types.hpp"

namespace clickagent::sim {
struct World;
struct WorldState;
} // namespace clickagent::sim

namespace clickagent {

class DeviceError : public std::runtime_error {
public:
    enum class Kind {
        Unreachable,
        EmptyCapture,
        UnknownApp,
        NoFocusedField,
        TextEscape,
    };
    DeviceError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct DeviceInfo {
    std::string driver; // "adb" | "sim"
    int screen_w = 0, screen_h = 0;
    std::string serial_or_world_id;
};

struct GestureSpec {
    Point from, to;
    std::int64_t duration_ms = 0;
};

/// Swipe endpoints for a direction on a screen of the given size.
/// Vertical swipes travel between 1/3 and 2/3 of the height on the center
/// column; horizontal ones between 1/6 and 5/6 of the width on the center
/// row. 300 ms.
GestureSpec swipe_geometry(SwipeDirection d, int screen_w, int screen_h);

/// adb `input text` escaping: spaces become %s; shell metacharacters are
/// rejected with DeviceError(TextEscape).
std::string adb_escape_text(const std::string& text);

/// One device session; exclusive to one episode at a time.
class Device {
public:
    virtual ~Device() = default;
    virtual DeviceInfo info() const = 0;
    virtual Observation capture_screenshot() = 0;
    virtual void tap(const Point& p) = 0;
    virtual void swipe(SwipeDirection d) = 0;
    virtual void type_text(const std::string& text) = 0;
    virtual std::vector<std::string> list_apps() = 0;
    virtual void launch_app(const std::string& app_id) = 0;
    virtual void reset_cache(const std::vector<std::string>& scope) = 0;
};

/// Runs a shell command line, returning stdout. Injected so tests can
/// record the exact adb invocations.
class ShellRunner {
public:
    virtual ~ShellRunner() = default;
    virtual std::string run(const std::string& command_line) = 0;
};

class SystemShellRunner : public ShellRunner {
public:
    std::string run(const std::string& command_line) override;
};

/// Android device behind the adb bridge binary.
class AdbDevice : public Device {
public:
    AdbDevice(std::string serial, int screen_w, int screen_h,
              std::shared_ptr<ShellRunner> shell,
              std::string adb_path = "");

    DeviceInfo info() const override;
    Observation capture_screenshot() override;
    void tap(const Point& p) override;
    void swipe(SwipeDirection d) override;
    void type_text(const std::string& text) override;
    std::vector<std::string> list_apps() override;
    void launch_app(const std::string& app_id) override;
    void reset_cache(const std::vector<std::string>& scope) override;

private:
    std::string prefix() const;
    std::string serial_;
    int screen_w_, screen_h_;
    std::shared_ptr<ShellRunner> shell_;
    std::string adb_path_;
};

/// Deterministic simulated device over a World + WorldState.
class SimDevice : public Device {
public:
    SimDevice(std::shared_ptr<const sim::World> world, std::uint64_t seed);

    DeviceInfo info() const override;
    Observation capture_screenshot() override;
    void tap(const Point& p) override;
    void swipe(SwipeDirection d) override;
    void type_text(const std::string& text) override;
    std::vector<std::string> list_apps() override;
    void launch_app(const std::string& app_id) override;
    void reset_cache(const std::vector<std::string>& scope) override;

    const sim::World& world() const { return *world_; }
    /// Live state, shared with oracle backends.
    std::shared_ptr<const sim::WorldState> state() const;

private:
    std::shared_ptr<const sim::World> world_;
    std::shared_ptr<sim::WorldState> state_;
    std::int64_t clock_ms_ = 0;
};

} // namespace clickagent
