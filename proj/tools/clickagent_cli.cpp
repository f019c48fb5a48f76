// SPDX-License-Identifier: Apache-2.0
//
// clickagent: run GUI-agent episodes on a simulated or adb-attached
// device, evaluate task suites, replay recorded traces and render reports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "clickagent/device.hpp"
#include "clickagent/eval.hpp"
#include "clickagent/http_backends.hpp"
#include "clickagent/loop.hpp"
#include "clickagent/runconfig.hpp"
#include "clickagent/simworld.hpp"
#include "clickagent/trace.hpp"

namespace fs = std::filesystem;
using namespace clickagent;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitBudget = 2;
constexpr int kExitError = 3;
constexpr int kExitUsage = 64;
constexpr int kExitNoInput = 66;

struct CommonFlags {
    std::string config_path;
    std::string world_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

eval::RunConfig make_config(const CommonFlags& flags) {
    eval::RunConfig cfg = flags.config_path.empty()
                              ? default_run_config()
                              : load_run_config(flags.config_path);
    if (!flags.world_path.empty()) cfg.world_path = flags.world_path;
    if (flags.seed_set) cfg.seed = flags.seed;
    stamp_fingerprint(cfg);
    return cfg;
}

std::optional<TaskSpec> find_task(const std::vector<TaskSpec>& tasks,
                                  const std::string& id) {
    for (const auto& t : tasks)
        if (t.id == id) return t;
    return std::nullopt;
}

int cmd_run(const CommonFlags& flags, const std::string& instruction,
            const std::string& task_id, const std::string& tasks_path,
            const std::string& goal_id, const std::string& device_kind,
            const std::string& serial, int screen_w, int screen_h,
            int max_steps, const std::string& out_dir) {
    eval::RunConfig cfg = make_config(flags);
    if (max_steps > 0) cfg.loop.max_steps = max_steps;
    if (!out_dir.empty()) cfg.loop.record_dir = out_dir;
    stamp_fingerprint(cfg);

    TaskSpec task;
    if (!task_id.empty()) {
        if (tasks_path.empty()) {
            std::cerr << "--task-id requires --tasks\n";
            return kExitUsage;
        }
        if (!fs::exists(tasks_path)) {
            std::cerr << "tasks file not found: " << tasks_path << "\n";
            return kExitNoInput;
        }
        auto tasks = eval::ingest_tasks(tasks_path);
        auto found = find_task(tasks, task_id);
        if (!found) {
            std::cerr << "unknown task id: " << task_id << "\n";
            return kExitUsage;
        }
        task = *found;
    } else {
        task.id = "adhoc";
        task.subset = "custom";
        task.instruction = instruction;
        if (!goal_id.empty()) task.sim_goal = goal_id;
    }

    EpisodeIdentity identity;
    identity.config_fingerprint = cfg.config_fingerprint;
    identity.seed = cfg.seed;
    identity.run_index = 0;
    identity.world = cfg.world_path;

    EpisodeTrace trace;
    try {
        if (device_kind == "sim") {
            if (cfg.world_path.empty()) {
                std::cerr << "sim device requires --world or a config with one\n";
                return kExitUsage;
            }
            if (!fs::exists(cfg.world_path)) {
                std::cerr << "world file not found: " << cfg.world_path << "\n";
                return kExitNoInput;
            }
            auto world = std::make_shared<const sim::World>(
                sim::load_world(cfg.world_path));
            SimDevice device(world, cfg.seed);
            if (cfg.scenario == eval::Scenario::CacheRemoval)
                device.reset_cache(cfg.cache_scope);

            std::unique_ptr<ChatBackend> chat;
            std::unique_ptr<LocatorBackend> locator;
            if (cfg.mllm_backend == "http") {
                chat = std::make_unique<HttpChatBackend>(*cfg.mllm_endpoint);
            } else {
                if (!task.sim_goal) {
                    std::cerr << "oracle backend needs a task goal (--goal)\n";
                    return kExitUsage;
                }
                auto it = world->goals.find(*task.sim_goal);
                if (it == world->goals.end()) {
                    std::cerr << "unknown goal: " << *task.sim_goal << "\n";
                    return kExitUsage;
                }
                chat = std::make_unique<sim::OracleChatBackend>(
                    world, device.state(), it->second);
            }
            if (cfg.locator_backend == "http")
                locator = std::make_unique<HttpLocatorBackend>(*cfg.locator_endpoint);
            else
                locator = std::make_unique<sim::PerfectLocatorBackend>();

            TickClock clock;
            trace = run_episode(task, device, *chat, *locator, cfg.loop,
                                cfg.prompts, identity, clock);
        } else if (device_kind == "adb") {
            if (!cfg.mllm_endpoint || !cfg.locator_endpoint) {
                std::cerr << "adb runs need http mllm and locator endpoints\n";
                return kExitUsage;
            }
            AdbDevice device(serial, screen_w, screen_h,
                             std::make_shared<SystemShellRunner>());
            if (cfg.scenario == eval::Scenario::CacheRemoval)
                device.reset_cache(cfg.cache_scope);
            HttpChatBackend chat(*cfg.mllm_endpoint);
            HttpLocatorBackend locator(*cfg.locator_endpoint);
            identity.world = "";
            SteadyClock clock;
            trace = run_episode(task, device, chat, locator, cfg.loop,
                                cfg.prompts, identity, clock);
        } else {
            std::cerr << "unknown device: " << device_kind << "\n";
            return kExitUsage;
        }
    } catch (const std::exception& e) {
        std::cerr << "episode failed: " << e.what() << "\n";
        return kExitError;
    }

    if (!cfg.loop.record_dir.empty())
        std::cout << "trace: "
                  << (fs::path(cfg.loop.record_dir) / trace.task.id / "0" /
                      "trace.jsonl")
                         .string()
                  << "\n";
    std::cout << "steps: " << trace.steps.size() << "\n";

    if (is_success(trace.outcome)) {
        std::cout << "outcome: success\n";
        return kExitSuccess;
    }
    if (std::holds_alternative<OutcomeBudgetExhausted>(trace.outcome)) {
        std::cout << "outcome: budget_exhausted\n";
        return kExitBudget;
    }
    std::cout << "outcome: error: "
              << std::get<OutcomeError>(trace.outcome).message << "\n";
    return kExitError;
}

int cmd_eval(const CommonFlags& flags, const std::string& tasks_path,
             int repeats, int parallel, const std::string& out_dir,
             const std::string& label) {
    if (!fs::exists(tasks_path)) {
        std::cerr << "tasks file not found: " << tasks_path << "\n";
        return kExitNoInput;
    }
    eval::RunConfig cfg = make_config(flags);
    if (!fs::exists(cfg.world_path)) {
        std::cerr << "world file not found: " << cfg.world_path << "\n";
        return kExitNoInput;
    }
    if (repeats > 0) cfg.repeats = repeats;
    if (parallel > 0) cfg.parallel = parallel;
    if (!out_dir.empty())
        cfg.loop.record_dir = (fs::path(out_dir) / "traces").string();
    stamp_fingerprint(cfg);

    try {
        auto tasks = eval::ingest_tasks(tasks_path);
        eval::SuiteResult result = eval::run_suite(tasks, cfg);
        eval::Report report = eval::generate_report({{label, result}});

        std::cout << report.text;
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            std::ofstream(fs::path(out_dir) / "report.txt") << report.text;
            std::ofstream(fs::path(out_dir) / "report.csv") << report.csv;
            std::ofstream(fs::path(out_dir) / "suite_result.json")
                << eval::serialize_suite_result(result);
        }
        return kExitSuccess;
    } catch (const std::exception& e) {
        std::cerr << "eval failed: " << e.what() << "\n";
        return kExitError;
    }
}

int cmd_replay(const std::string& trace_dir, const std::string& world_path) {
    if (!fs::exists(trace_dir)) {
        std::cerr << "trace not found: " << trace_dir << "\n";
        return kExitNoInput;
    }
    try {
        EpisodeTrace recorded = read_trace(trace_dir);
        std::string wp = world_path.empty() ? recorded.world : world_path;
        if (wp.empty()) {
            std::cerr << "trace does not name a world; pass --world\n";
            return kExitUsage;
        }
        auto world = std::make_shared<const sim::World>(sim::load_world(wp));
        replay(trace_dir, world);
        std::cout << "replay ok: " << recorded.steps.size()
                  << " steps, zero divergence\n";
        return 0;
    } catch (const ReplayError& e) {
        std::cerr << "replay divergence: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "replay failed: " << e.what() << "\n";
        return kExitError;
    }
}

int cmd_report(const std::vector<std::string>& result_dirs) {
    try {
        std::vector<std::pair<std::string, eval::SuiteResult>> results;
        for (const auto& dir : result_dirs) {
            fs::path p = fs::path(dir) / "suite_result.json";
            std::ifstream f(p);
            if (!f) {
                std::cerr << "missing " << p.string() << "\n";
                return kExitNoInput;
            }
            nlohmann::json j = nlohmann::json::parse(f);
            eval::SuiteResult r;
            for (const auto& e : j.at("episodes")) {
                eval::EpisodeRecord rec;
                rec.task_id = e.at("task_id").get<std::string>();
                rec.subset = e.at("subset").get<std::string>();
                rec.run = e.at("run").get<int>();
                rec.outcome = e.at("outcome").get<std::string>();
                rec.success = e.at("success").get<bool>();
                rec.steps = e.at("steps").get<int>();
                rec.total_ms = e.at("total_ms").get<std::int64_t>();
                if (!e.at("failure").is_null()) {
                    std::string c = e.at("failure").get<std::string>();
                    if (c == "reflection") rec.failure = eval::FailureCategory::Reflection;
                    else if (c == "locator") rec.failure = eval::FailureCategory::Locator;
                    else if (c == "decision") rec.failure = eval::FailureCategory::Decision;
                    else rec.failure = eval::FailureCategory::BudgetOnly;
                }
                r.episodes.push_back(std::move(rec));
            }
            eval::recompute_aggregates(r);
            results.emplace_back(fs::path(dir).filename().string(), r);
        }
        eval::Report report = eval::generate_report(results);
        std::cout << report.text;
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "report failed: " << e.what() << "\n";
        return kExitError;
    }
}

int cmd_worlds_validate(const std::string& path) {
    if (!fs::exists(path)) {
        std::cerr << "world file not found: " << path << "\n";
        return kExitNoInput;
    }
    try {
        sim::World w = sim::load_world(path);
        std::cout << "ok: " << w.screens.size() << " screens, " << w.rules.size()
                  << " rules, " << w.goals.size() << " goals\n";
        return 0;
    } catch (const sim::WorldLoadError& e) {
        std::cerr << "invalid world: " << e.what() << "\n";
        return 1;
    }
}

int cmd_devices_list(const std::string& worlds_dir) {
    std::cout << "sim worlds:\n";
    if (fs::exists(worlds_dir)) {
        std::vector<std::string> entries;
        for (const auto& entry : fs::directory_iterator(worlds_dir))
            if (entry.path().extension() == ".yaml")
                entries.push_back(entry.path().string());
        std::sort(entries.begin(), entries.end());
        for (const auto& e : entries) std::cout << "  " << e << "\n";
    }

    std::cout << "adb devices:\n";
    try {
        SystemShellRunner shell;
        const char* adb = std::getenv("ADB_PATH");
        std::string out = shell.run(std::string(adb && *adb ? adb : "adb") +
                                    " devices 2>/dev/null");
        std::istringstream in(out);
        std::string line;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty() || line.rfind("List of", 0) == 0) continue;
            std::cout << "  " << line << "\n";
        }
    } catch (const DeviceError&) {
        std::cout << "  (adb not available)\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ClickAgent runtime: MLLM-planned, locator-grounded GUI agent"};
    app.require_subcommand(1);

    CommonFlags flags;
    app.add_option("--config", flags.config_path, "run configuration YAML");
    app.add_option("--world", flags.world_path, "sim world file (overrides config)");
    auto* seed_opt = app.add_option("--seed", flags.seed, "root RNG seed");

    // run
    auto* run = app.add_subcommand("run", "run a single episode");
    std::string run_task, run_task_id, run_tasks, run_goal, run_device = "sim";
    std::string run_serial, run_out;
    int run_w = 1080, run_h = 1920, run_max_steps = 0;
    run->add_option("--task", run_task, "ad-hoc task instruction");
    run->add_option("--task-id", run_task_id, "task id from --tasks file");
    run->add_option("--tasks", run_tasks, "task file (TSV)");
    run->add_option("--goal", run_goal, "sim goal id for ad-hoc tasks");
    run->add_option("--device", run_device, "sim | adb")->default_str("sim");
    run->add_option("--serial", run_serial, "adb serial");
    run->add_option("--screen-w", run_w, "adb screen width");
    run->add_option("--screen-h", run_h, "adb screen height");
    run->add_option("--max-steps", run_max_steps, "step budget")
        ->check(CLI::PositiveNumber);
    run->add_option("--out", run_out, "trace output directory");

    // eval
    auto* ev = app.add_subcommand("eval", "run a task suite");
    std::string eval_tasks, eval_out, eval_label = "clickagent";
    int eval_repeats = 0, eval_parallel = 0;
    ev->add_option("--tasks", eval_tasks, "task file (TSV)")->required();
    ev->add_option("--repeats", eval_repeats, "runs per task (default 3)")
        ->check(CLI::PositiveNumber);
    ev->add_option("--parallel", eval_parallel, "parallel episodes")
        ->check(CLI::PositiveNumber);
    ev->add_option("--out", eval_out, "output directory");
    ev->add_option("--label", eval_label, "configuration label in the report");

    // replay
    auto* rp = app.add_subcommand("replay", "re-execute a recorded sim trace");
    std::string replay_dir;
    rp->add_option("trace", replay_dir, "trace directory or trace.jsonl")->required();

    // report
    auto* rep = app.add_subcommand("report", "merge suite results into one table");
    std::vector<std::string> report_dirs;
    rep->add_option("results", report_dirs, "eval output directories")->required();

    // worlds
    auto* worlds = app.add_subcommand("worlds", "world file utilities");
    auto* worlds_validate = worlds->add_subcommand("validate", "validate a world file");
    std::string world_file;
    worlds_validate->add_option("path", world_file, "world YAML file")->required();

    // devices
    auto* devices = app.add_subcommand("devices", "device utilities");
    auto* devices_list = devices->add_subcommand("list", "list devices and worlds");
    std::string worlds_dir = "assets/worlds";
    devices_list->add_option("--worlds-dir", worlds_dir, "bundled worlds directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitUsage;
    }
    flags.seed_set = seed_opt->count() > 0;

    if (run->parsed())
        return cmd_run(flags, run_task, run_task_id, run_tasks, run_goal,
                       run_device, run_serial, run_w, run_h, run_max_steps,
                       run_out);
    if (ev->parsed())
        return cmd_eval(flags, eval_tasks, eval_repeats, eval_parallel, eval_out,
                        eval_label);
    if (rp->parsed()) return cmd_replay(replay_dir, flags.world_path);
    if (rep->parsed()) return cmd_report(report_dirs);
    if (worlds->parsed() && worlds_validate->parsed())
        return cmd_worlds_validate(world_file);
    if (devices->parsed() && devices_list->parsed())
        return cmd_devices_list(worlds_dir);

    std::cerr << app.help();
    return kExitUsage;
}
