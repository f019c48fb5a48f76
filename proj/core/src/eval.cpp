// SPDX-License-Identifier: Apache-2.0
#include "clickagent/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "clickagent/http_backends.hpp"
#include "clickagent/rng.hpp"

namespace clickagent::eval {

using nlohmann::json;

std::string to_string(FailureCategory c) {
    switch (c) {
        case FailureCategory::Reflection: return "reflection";
        case FailureCategory::Locator: return "locator";
        case FailureCategory::Decision: return "decision";
        case FailureCategory::BudgetOnly: return "budget_only";
    }
    return "budget_only";
}

namespace {

std::optional<FailureCategory> parse_category(const std::string& s) {
    if (s == "reflection") return FailureCategory::Reflection;
    if (s == "locator") return FailureCategory::Locator;
    if (s == "decision") return FailureCategory::Decision;
    if (s == "budget_only") return FailureCategory::BudgetOnly;
    return std::nullopt;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    return parts;
}

} // namespace

std::vector<TaskSpec> ingest_tasks(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw EvalError(EvalError::Kind::Parse, "cannot open task file: " + path);

    std::vector<TaskSpec> tasks;
    std::set<std::string> ids;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto parts = split(line, '\t');
        if (parts.size() < 3 || parts.size() > 4)
            throw EvalError(EvalError::Kind::Parse,
                            "line " + std::to_string(line_no) +
                                ": expected id<TAB>subset<TAB>instruction[<TAB>goal]");
        TaskSpec task;
        task.id = trim(parts[0]);
        task.subset = trim(parts[1]);
        task.instruction = trim(parts[2]);
        if (parts.size() == 4 && !trim(parts[3]).empty()) task.sim_goal = trim(parts[3]);
        if (task.id.empty())
            throw EvalError(EvalError::Kind::Parse,
                            "line " + std::to_string(line_no) + ": empty task id");
        if (task.instruction.empty())
            throw EvalError(EvalError::Kind::Parse,
                            "line " + std::to_string(line_no) + ": empty instruction");
        if (!ids.insert(task.id).second)
            throw EvalError(EvalError::Kind::DuplicateTaskId,
                            "line " + std::to_string(line_no) +
                                ": duplicate task id '" + task.id + "'");
        tasks.push_back(std::move(task));
    }
    return tasks;
}

double success_rate(int successes, int total) {
    if (total <= 0) throw std::invalid_argument("success_rate: total must be > 0");
    return 100.0 * successes / total;
}

double pooled_rate(const std::vector<std::pair<double, int>>& subsets) {
    double weighted = 0;
    long total = 0;
    for (const auto& [rate, n] : subsets) {
        weighted += rate * n;
        total += n;
    }
    if (total <= 0) throw std::invalid_argument("pooled_rate: no episodes");
    return weighted / static_cast<double>(total);
}

void recompute_aggregates(SuiteResult& r) {
    std::sort(r.episodes.begin(), r.episodes.end(),
              [](const EpisodeRecord& a, const EpisodeRecord& b) {
                  return std::tie(a.task_id, a.run) < std::tie(b.task_id, b.run);
              });

    std::map<std::string, std::pair<int, int>> per_subset; // successes, total
    int successes = 0;
    double total_ms = 0;
    r.failure_counts.clear();
    for (const auto& e : r.episodes) {
        auto& [s, n] = per_subset[e.subset];
        ++n;
        if (e.success) {
            ++s;
            ++successes;
        }
        total_ms += static_cast<double>(e.total_ms);
        if (e.failure) ++r.failure_counts[*e.failure];
    }

    r.subset_rates.clear();
    r.subset_episodes.clear();
    for (const auto& [subset, sn] : per_subset) {
        r.subset_rates[subset] = success_rate(sn.first, sn.second);
        r.subset_episodes[subset] = sn.second;
    }
    r.overall = r.episodes.empty()
                    ? 0.0
                    : success_rate(successes, static_cast<int>(r.episodes.size()));
    r.mean_task_seconds =
        r.episodes.empty() ? 0.0
                           : total_ms / 1000.0 / static_cast<double>(r.episodes.size());
}

std::string serialize_suite_result(const SuiteResult& r) {
    json episodes = json::array();
    for (const auto& e : r.episodes) {
        episodes.push_back({{"task_id", e.task_id},
                            {"subset", e.subset},
                            {"run", e.run},
                            {"outcome", e.outcome},
                            {"success", e.success},
                            {"steps", e.steps},
                            {"total_ms", e.total_ms},
                            {"failure", e.failure ? json(to_string(*e.failure))
                                                  : json(nullptr)}});
    }
    json fails = json::object();
    for (const auto& [cat, n] : r.failure_counts) fails[to_string(cat)] = n;
    json j{{"episodes", episodes},
           {"subset_rates", r.subset_rates},
           {"subset_episodes", r.subset_episodes},
           {"overall", r.overall},
           {"mean_task_seconds", r.mean_task_seconds},
           {"failure_counts", fails}};
    return j.dump(2) + "\n";
}

FailureCategory attribute_failure(const sim::World& world, const sim::SimGoal& goal,
                                  const EpisodeTrace& trace,
                                  const sim::InjectionLog& log) {
    // injected errors are chronological ground truth; the first one is the
    // first cause
    if (!log.events.empty()) {
        const std::string& c = log.events.front().component;
        if (c == "locator") return FailureCategory::Locator;
        if (c == "reflection") return FailureCategory::Reflection;
        if (c == "decision") return FailureCategory::Decision;
    }

    // no injections: recompute each component against the world
    sim::WorldState state = sim::initial_state(world, trace.seed);
    // replay assumes the suite's cache scenario is visible in the first
    // observation; a cache_removal episode starts with the flag set
    {
        Observation first = sim::render_screen(world, state);
        if (!trace.steps.empty() &&
            trace.steps.front().pre_obs.image_bytes != first.image_bytes) {
            sim::WorldState cleared = sim::apply_reset_cache(state);
            if (trace.steps.front().pre_obs.image_bytes ==
                sim::render_screen(world, cleared).image_bytes)
                state = cleared;
        }
    }

    for (const auto& step : trace.steps) {
        // decision vs oracle
        try {
            Action oracle = sim::oracle_policy(world, state, goal);
            if (!(oracle == step.action)) return FailureCategory::Decision;
        } catch (const sim::Unreachable&) {
            // goal already satisfied or unreachable; skip the comparison
        }

        // locator vs the element the command names
        if (const auto* click = std::get_if<ClickAction>(&step.action)) {
            if (step.locator_box) {
                try {
                    sim::PerfectLocatorBackend perfect;
                    BoundingBox truth = perfect.locate(step.pre_obs, click->ui_command);
                    if (!(truth == *step.locator_box)) return FailureCategory::Locator;
                } catch (const GatewayError&) {
                    return FailureCategory::Locator;
                }
            }
        }

        // advance the state like the device did
        if (const auto* click = std::get_if<ClickAction>(&step.action)) {
            (void)click;
            if (step.tap_point) state = sim::apply_tap(world, state, *step.tap_point);
        } else if (const auto* type = std::get_if<TypeAction>(&step.action)) {
            if (!step.phase_error) state = sim::apply_type(world, state, type->text);
        } else if (const auto* open = std::get_if<OpenAppAction>(&step.action)) {
            if (step.resolved_app)
                state = sim::apply_launch(world, state, *step.resolved_app);
            else if (!step.phase_error)
                state = sim::apply_launch(world, state, open->app_id);
        } else if (const auto* swipe = std::get_if<SwipeAction>(&step.action)) {
            state = sim::apply_swipe(world, state, swipe->direction);
        }

        // reflection verdict vs goal truth after the action
        bool truth = sim::goal_check(world, state, goal);
        bool said_success = step.verdict.status == VerdictStatus::Success;
        if (said_success != truth) return FailureCategory::Reflection;
    }

    return FailureCategory::BudgetOnly;
}

namespace {

struct EpisodeJob {
    std::size_t task_index;
    int run;
};

// stable across platforms, unlike std::hash
std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

EpisodeRecord run_one_episode(const TaskSpec& task, int run, const RunConfig& cfg,
                              const std::shared_ptr<const sim::World>& world) {
    std::uint64_t episode_seed = derive_seed(cfg.seed, fnv1a64(task.id));
    episode_seed = derive_seed(episode_seed, static_cast<std::uint64_t>(run));

    SimDevice device(world, episode_seed);
    if (cfg.scenario == Scenario::CacheRemoval) device.reset_cache(cfg.cache_scope);

    const sim::SimGoal* goal = nullptr;
    if (task.sim_goal) {
        auto it = world->goals.find(*task.sim_goal);
        if (it == world->goals.end())
            throw EvalError(EvalError::Kind::Parse,
                            "task " + task.id + " references unknown goal '" +
                                *task.sim_goal + "'");
        goal = &it->second;
    }

    std::unique_ptr<ChatBackend> chat;
    if (cfg.mllm_backend == "http") {
        chat = std::make_unique<HttpChatBackend>(*cfg.mllm_endpoint);
    } else {
        if (!goal)
            throw EvalError(EvalError::Kind::Parse,
                            "oracle backend needs a sim goal for task " + task.id);
        chat = std::make_unique<sim::OracleChatBackend>(world, device.state(), *goal);
    }

    std::unique_ptr<LocatorBackend> locator;
    if (cfg.locator_backend == "http")
        locator = std::make_unique<HttpLocatorBackend>(*cfg.locator_endpoint);
    else
        locator = std::make_unique<sim::PerfectLocatorBackend>();

    auto log = std::make_shared<sim::InjectionLog>();
    std::unique_ptr<ChatBackend> noisy_chat;
    std::unique_ptr<LocatorBackend> noisy_locator;
    ChatBackend* chat_in_use = chat.get();
    LocatorBackend* locator_in_use = locator.get();
    if (cfg.injection) {
        sim::ErrorInjectionConfig inj = *cfg.injection;
        inj.seed = derive_seed(episode_seed, inj.seed + 17);
        noisy_chat = std::make_unique<sim::NoisyChatBackend>(*chat, inj, log);
        noisy_locator = std::make_unique<sim::NoisyLocatorBackend>(*locator, inj, log);
        chat_in_use = noisy_chat.get();
        locator_in_use = noisy_locator.get();
    }

    EpisodeIdentity identity;
    identity.config_fingerprint = cfg.config_fingerprint;
    identity.seed = episode_seed;
    identity.run_index = run;
    identity.world = cfg.world_path;

    TickClock clock;
    EpisodeTrace trace = run_episode(task, device, *chat_in_use, *locator_in_use,
                                     cfg.loop, cfg.prompts, identity, clock);

    EpisodeRecord rec;
    rec.task_id = task.id;
    rec.subset = task.subset;
    rec.run = run;
    rec.steps = static_cast<int>(trace.steps.size());
    rec.total_ms = trace.total_ms;
    rec.outcome = std::holds_alternative<OutcomeSuccess>(trace.outcome)
                      ? "success"
                      : std::holds_alternative<OutcomeBudgetExhausted>(trace.outcome)
                            ? "budget_exhausted"
                            : "error";
    if (goal)
        rec.success = sim::goal_check(*world, *device.state(), *goal);
    else
        rec.success = is_success(trace.outcome);
    if (!rec.success && goal)
        rec.failure = attribute_failure(*world, *goal, trace, *log);
    return rec;
}

} // namespace

SuiteResult run_suite(const std::vector<TaskSpec>& tasks, const RunConfig& cfg) {
    auto world =
        std::make_shared<const sim::World>(sim::load_world(cfg.world_path));

    std::vector<EpisodeJob> jobs;
    for (std::size_t t = 0; t < tasks.size(); ++t)
        for (int run = 0; run < cfg.repeats; ++run)
            jobs.push_back({t, run});

    SuiteResult result;
    result.episodes.resize(jobs.size());

    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::atomic<std::size_t> next{0};
    int workers = std::max(1, cfg.parallel);

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const EpisodeJob& job = jobs[i];
            const TaskSpec& task = tasks[job.task_index];
            try {
                result.episodes[i] = run_one_episode(task, job.run, cfg, world);
            } catch (...) {
                // a persistently failing task becomes an error record, not a
                // suite abort
                EpisodeRecord rec;
                rec.task_id = task.id;
                rec.subset = task.subset;
                rec.run = job.run;
                rec.outcome = "error";
                rec.success = false;
                result.episodes[i] = rec;
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    recompute_aggregates(result);
    return result;
}

std::vector<HumanLabel> parse_human_labels(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw EvalError(EvalError::Kind::Parse, "cannot open labels file: " + path);
    std::vector<HumanLabel> labels;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (line_no == 1 && t.rfind("task_id", 0) == 0) continue; // header row
        auto parts = split(t, ',');
        if (parts.size() < 3 || parts.size() > 4)
            throw EvalError(EvalError::Kind::Parse,
                            "labels line " + std::to_string(line_no) +
                                ": expected task_id,run,verdict[,category]");
        HumanLabel l;
        l.task_id = trim(parts[0]);
        l.run = std::stoi(trim(parts[1]));
        std::string verdict = trim(parts[2]);
        if (verdict == "success") l.success = true;
        else if (verdict == "failure") l.success = false;
        else
            throw EvalError(EvalError::Kind::Parse,
                            "labels line " + std::to_string(line_no) +
                                ": verdict must be success or failure");
        if (parts.size() == 4 && !trim(parts[3]).empty()) {
            l.category = parse_category(trim(parts[3]));
            if (!l.category)
                throw EvalError(EvalError::Kind::Parse,
                                "labels line " + std::to_string(line_no) +
                                    ": unknown category '" + trim(parts[3]) + "'");
        }
        labels.push_back(std::move(l));
    }
    return labels;
}

void apply_human_labels(SuiteResult& result, const std::vector<HumanLabel>& labels) {
    std::map<std::pair<std::string, int>, const HumanLabel*> seen;
    for (const auto& l : labels) {
        auto key = std::make_pair(l.task_id, l.run);
        auto it = seen.find(key);
        if (it != seen.end()) {
            if (it->second->success != l.success)
                throw EvalError(EvalError::Kind::ConflictingLabel,
                                "conflicting labels for " + l.task_id + " run " +
                                    std::to_string(l.run));
            continue;
        }
        seen[key] = &l;

        bool found = false;
        for (auto& e : result.episodes) {
            if (e.task_id == l.task_id && e.run == l.run) {
                e.success = l.success;
                if (l.success)
                    e.failure.reset();
                else if (l.category)
                    e.failure = l.category;
                found = true;
            }
        }
        if (!found)
            throw EvalError(EvalError::Kind::UnknownTaskId,
                            "label references unknown task '" + l.task_id +
                                "' run " + std::to_string(l.run));
    }
    recompute_aggregates(result);
}

namespace {

std::string fixed1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace

Report generate_report(
    const std::vector<std::pair<std::string, SuiteResult>>& results) {
    if (results.empty())
        throw EvalError(EvalError::Kind::EmptyResults, "no suite results to report");

    std::size_t label_w = std::string("Configuration").size();
    for (const auto& [label, r] : results) label_w = std::max(label_w, label.size());

    std::ostringstream text, csv;
    csv << "label,aitw_general,aitw_webshopping,overall,mean_task_seconds,"
           "fail_reflection,fail_locator,fail_decision,fail_budget_only\n";

    auto pad = [&](const std::string& s, std::size_t w) {
        return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
    };

    text << pad("Configuration", label_w) << " | AITW General | AITW WebShopping | "
         << "Overall | Mean task [s]\n";

    for (const auto& [label, r] : results) {
        auto cell = [&](const std::string& subset) {
            auto it = r.subset_rates.find(subset);
            return it == r.subset_rates.end() ? std::string("n/a") : fixed1(it->second);
        };
        text << pad(label, label_w) << " | " << pad(cell("General"), 12) << " | "
             << pad(cell("WebShopping"), 16) << " | " << pad(fixed1(r.overall), 7)
             << " | " << fixed2(r.mean_task_seconds) << "\n";

        int total_failures = 0;
        for (const auto& [cat, n] : r.failure_counts) total_failures += n;
        text << pad("", label_w) << "   failure breakdown: ";
        if (total_failures == 0) {
            text << "n/a\n";
        } else {
            bool first = true;
            for (FailureCategory cat :
                 {FailureCategory::Reflection, FailureCategory::Locator,
                  FailureCategory::Decision, FailureCategory::BudgetOnly}) {
                auto it = r.failure_counts.find(cat);
                int n = it == r.failure_counts.end() ? 0 : it->second;
                if (!first) text << " | ";
                text << to_string(cat) << " "
                     << fixed1(100.0 * n / total_failures) << "%";
                first = false;
            }
            text << "\n";
        }

        auto count = [&](FailureCategory cat) {
            auto it = r.failure_counts.find(cat);
            return it == r.failure_counts.end() ? 0 : it->second;
        };
        auto csv_cell = [&](const std::string& subset) {
            auto it = r.subset_rates.find(subset);
            return it == r.subset_rates.end() ? std::string("") : fixed1(it->second);
        };
        csv << label << "," << csv_cell("General") << "," << csv_cell("WebShopping")
            << "," << fixed1(r.overall) << "," << fixed2(r.mean_task_seconds) << ","
            << count(FailureCategory::Reflection) << ","
            << count(FailureCategory::Locator) << ","
            << count(FailureCategory::Decision) << ","
            << count(FailureCategory::BudgetOnly) << "\n";
    }

    return Report{text.str(), csv.str()};
}

} // namespace clickagent::eval
