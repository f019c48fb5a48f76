// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "clickagent/device.hpp"
#include "clickagent/gateway.hpp"
#include "clickagent/types.hpp"

namespace clickagent {

/// Time source for phase accounting. The logical clock keeps mock-backed
/// runs byte-reproducible; real endpoints use the steady clock.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() = 0;
};

class SteadyClock : public Clock {
public:
    std::int64_t now_ms() override;
};

/// Advances one millisecond per reading.
class TickClock : public Clock {
public:
    std::int64_t now_ms() override { return ++t_; }

private:
    std::int64_t t_ = 0;
};

struct LoopConfig {
    int max_steps = 20;
    std::int64_t per_step_timeout_ms = 120000;
    std::string record_dir; // empty: do not persist
};

struct EpisodeIdentity {
    std::string config_fingerprint;
    std::uint64_t seed = 0;
    int run_index = 0;
    std::string world; // sim world path, empty for adb
};

/// One full observe/decide/execute/reflect episode. Stops on a success
/// verdict, the step budget, or an unrecoverable error. A failed locate or
/// app selection consumes a step and reflection still runs.
EpisodeTrace run_episode(const TaskSpec& task, Device& device,
                         ChatBackend& mllm, LocatorBackend& locator,
                         const LoopConfig& cfg, const PromptBundle& prompts,
                         const EpisodeIdentity& identity, Clock& clock);

class ReplayError : public std::runtime_error {
public:
    explicit ReplayError(const std::string& what, int step = -1)
        : std::runtime_error(what), step_(step) {}
    /// Diverging step index; -1 for non-divergence failures (e.g. an adb
    /// trace handed to replay).
    int step() const { return step_; }

private:
    int step_;
};

/// Re-executes a recorded sim trace against a fresh world state and
/// verifies every observation digest. Throws ReplayError on divergence or
/// when the trace was not recorded against the sim driver.
EpisodeTrace replay(const std::filesystem::path& trace_path,
                    const std::shared_ptr<const sim::World>& world);

} // namespace clickagent
