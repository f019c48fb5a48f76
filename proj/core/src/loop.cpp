// SPDX-License-Identifier: Apache-2.0
#include "clickagent/loop.hpp"

#include <chrono>

#include "clickagent/simworld.hpp"
#include "clickagent/trace.hpp"

namespace clickagent {

std::int64_t SteadyClock::now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

namespace {

void persist(EpisodeTrace& trace, const LoopConfig& cfg,
             const EpisodeIdentity& identity) {
    if (cfg.record_dir.empty()) return;
    std::filesystem::path dir = std::filesystem::path(cfg.record_dir) /
                                trace.task.id / std::to_string(identity.run_index);
    write_trace(trace, dir);
}

} // namespace

EpisodeTrace run_episode(const TaskSpec& task, Device& device,
                         ChatBackend& mllm, LocatorBackend& locator,
                         const LoopConfig& cfg, const PromptBundle& prompts,
                         const EpisodeIdentity& identity, Clock& clock) {
    EpisodeTrace trace;
    trace.task = task;
    trace.config_fingerprint = identity.config_fingerprint;
    trace.seed = identity.seed;
    trace.driver = device.info().driver;
    trace.world = identity.world;

    std::int64_t episode_start = 0, episode_end = 0;
    bool started = false;

    auto finish = [&](Outcome outcome) {
        trace.outcome = std::move(outcome);
        trace.total_ms = started ? episode_end - episode_start : 0;
        persist(trace, cfg, identity);
        return trace;
    };

    for (int step_index = 0; step_index < cfg.max_steps; ++step_index) {
        Step step;
        step.index = step_index;

        std::int64_t t0 = clock.now_ms();
        if (!started) {
            episode_start = t0;
            started = true;
        }

        try {
            step.pre_obs = device.capture_screenshot();
        } catch (const DeviceError& e) {
            episode_end = t0;
            return finish(OutcomeError{std::string("capture: ") + e.what()});
        }

        DecisionOutput decision;
        std::string history = summarize_history(trace);
        try {
            decision = decide(task, history, step.pre_obs, mllm, prompts);
        } catch (const GatewayError& e) {
            episode_end = clock.now_ms();
            return finish(OutcomeError{std::string("decide: ") + e.what()});
        }
        step.decision_raw = decision.raw;
        step.action = decision.action;
        std::int64_t t1 = clock.now_ms();
        step.decide_ms = t1 - t0;

        // locate phase (Click only)
        if (const auto* click = std::get_if<ClickAction>(&step.action)) {
            try {
                step.locator_box = locate(step.pre_obs, click->ui_command, locator);
                step.tap_point = bbox_center(*step.locator_box,
                                             step.pre_obs.screen_w,
                                             step.pre_obs.screen_h);
            } catch (const GatewayError& e) {
                // consumes the step; reflection sees the unchanged screen
                step.locator_box.reset();
                step.tap_point.reset();
                step.phase_error = std::string("locate: ") + e.what();
            }
        }
        std::int64_t t2 = clock.now_ms();
        step.locate_ms = t2 - t1;

        // execute phase
        try {
            struct Exec {
                Step& step;
                Device& device;
                ChatBackend& mllm;
                const PromptBundle& prompts;
                const TaskSpec& task;
                void operator()(const ClickAction&) {
                    if (step.tap_point) device.tap(*step.tap_point);
                }
                void operator()(const TypeAction& t) {
                    try {
                        device.type_text(t.text);
                    } catch (const DeviceError& e) {
                        if (e.kind() != DeviceError::Kind::NoFocusedField) throw;
                        step.phase_error = std::string("type: ") + e.what();
                    }
                }
                void operator()(const OpenAppAction&) {
                    auto apps = device.list_apps();
                    if (apps.empty()) {
                        step.phase_error = "open_app: device reports no apps";
                        return;
                    }
                    try {
                        std::string chosen = select_app(task, apps, mllm, prompts);
                        device.launch_app(chosen);
                        step.resolved_app = chosen;
                    } catch (const GatewayError& e) {
                        step.phase_error = std::string("open_app: ") + e.what();
                    } catch (const DeviceError& e) {
                        if (e.kind() != DeviceError::Kind::UnknownApp) throw;
                        step.phase_error = std::string("open_app: ") + e.what();
                    }
                }
                void operator()(const SwipeAction& s) { device.swipe(s.direction); }
            };
            std::visit(Exec{step, device, mllm, prompts, task}, step.action);
            step.post_obs = device.capture_screenshot();
        } catch (const DeviceError& e) {
            episode_end = clock.now_ms();
            return finish(OutcomeError{std::string("execute: ") + e.what()});
        }
        std::int64_t t3 = clock.now_ms();
        step.execute_ms = t3 - t2;

        // reflect phase; reflect() itself degrades unparseable output to a
        // failure verdict
        trace.steps.push_back(step); // so the just-executed action is in history
        try {
            std::string post_history = summarize_history(trace);
            step.verdict = reflect(task, post_history, step.post_obs, mllm, prompts);
        } catch (const GatewayError& e) {
            trace.steps.pop_back();
            episode_end = clock.now_ms();
            return finish(OutcomeError{std::string("reflect: ") + e.what()});
        }
        std::int64_t t4 = clock.now_ms();
        step.reflect_ms = t4 - t3;
        episode_end = t4;
        trace.steps.back() = step;

        if (t4 - t0 > cfg.per_step_timeout_ms)
            return finish(OutcomeError{"step " + std::to_string(step_index) +
                                       " exceeded per-step timeout"});

        if (step.verdict.status == VerdictStatus::Success)
            return finish(OutcomeSuccess{});
    }

    return finish(OutcomeBudgetExhausted{});
}

EpisodeTrace replay(const std::filesystem::path& trace_path,
                    const std::shared_ptr<const sim::World>& world) {
    EpisodeTrace recorded = read_trace(trace_path);
    if (recorded.driver != "sim")
        throw ReplayError("replay supports sim traces only; trace driver is '" +
                          recorded.driver + "'");

    SimDevice device(world, recorded.seed);
    EpisodeTrace result = recorded;

    for (std::size_t i = 0; i < recorded.steps.size(); ++i) {
        const Step& rec = recorded.steps[i];
        Step& out = result.steps[i];

        Observation pre = device.capture_screenshot();
        if (sha256_hex(pre.image_bytes) != sha256_hex(rec.pre_obs.image_bytes))
            throw ReplayError("pre-observation diverged at step " + std::to_string(i),
                              static_cast<int>(i));
        out.pre_obs = pre;

        struct Exec {
            const Step& rec;
            SimDevice& device;
            void operator()(const ClickAction&) {
                if (rec.tap_point) device.tap(*rec.tap_point);
            }
            void operator()(const TypeAction& t) {
                if (!rec.phase_error) device.type_text(t.text);
            }
            void operator()(const OpenAppAction& o) {
                if (rec.resolved_app)
                    device.launch_app(*rec.resolved_app);
                else if (!rec.phase_error)
                    device.launch_app(o.app_id);
            }
            void operator()(const SwipeAction& s) { device.swipe(s.direction); }
        };
        std::visit(Exec{rec, device}, rec.action);

        Observation post = device.capture_screenshot();
        if (sha256_hex(post.image_bytes) != sha256_hex(rec.post_obs.image_bytes))
            throw ReplayError("post-observation diverged at step " + std::to_string(i),
                              static_cast<int>(i));
        out.post_obs = post;
    }

    return result;
}

} // namespace clickagent
