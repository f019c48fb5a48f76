// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clickagent/gateway.hpp"
#include "clickagent/loop.hpp"
#include "clickagent/simworld.hpp"
#include "clickagent/types.hpp"

namespace clickagent::eval {

enum class Scenario { CacheRemoval, NoCacheRemoval };

enum class FailureCategory { Reflection, Locator, Decision, BudgetOnly };

std::string to_string(FailureCategory c);

class EvalError : public std::runtime_error {
public:
    enum class Kind {
        Parse,
        DuplicateTaskId,
        UnknownTaskId,
        ConflictingLabel,
        EmptyResults,
        AttributionUnavailable,
    };
    EvalError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Loads the tab-separated task file:
/// `id<TAB>subset<TAB>instruction[<TAB>sim_goal_id]`, `#` comments allowed.
std::vector<TaskSpec> ingest_tasks(const std::string& path);

/// 100 * successes / total; total must be > 0.
double success_rate(int successes, int total);

/// Episode-weighted pooling of per-subset (rate, episode count) pairs.
double pooled_rate(const std::vector<std::pair<double, int>>& subsets);

struct RunConfig {
    Scenario scenario = Scenario::NoCacheRemoval;
    std::string world_path;                 // sim world file
    std::string mllm_backend = "oracle";    // "oracle" | "http"
    std::string locator_backend = "perfect"; // "perfect" | "http"
    std::optional<EndpointConfig> mllm_endpoint;
    std::optional<EndpointConfig> locator_endpoint;
    std::optional<sim::ErrorInjectionConfig> injection;
    int repeats = 3;
    LoopConfig loop;
    std::uint64_t seed = 0;
    PromptBundle prompts;
    std::vector<std::string> cache_scope; // packages cleared per episode (adb)
    int parallel = 1;
    std::string config_fingerprint;
};

struct EpisodeRecord {
    std::string task_id;
    std::string subset;
    int run = 0;
    std::string outcome; // "success" | "budget_exhausted" | "error"
    bool success = false; // ground truth for sim runs, verdict otherwise
    int steps = 0;
    std::int64_t total_ms = 0;
    std::optional<FailureCategory> failure;
};

struct SuiteResult {
    std::vector<EpisodeRecord> episodes; // sorted by (task_id, run)
    std::map<std::string, double> subset_rates;
    std::map<std::string, int> subset_episodes;
    double overall = 0.0;
    double mean_task_seconds = 0.0;
    std::map<FailureCategory, int> failure_counts;
};

/// Canonical JSON for byte-identity checks across runs.
std::string serialize_suite_result(const SuiteResult& r);

/// Runs every task `repeats` times; cache_removal clears the cache before
/// each episode. Deterministic for a given (config, seed) with mock
/// backends.
SuiteResult run_suite(const std::vector<TaskSpec>& tasks, const RunConfig& cfg);

/// First-cause failure attribution against sim ground truth: the earliest
/// step where a component's output diverges (injected or recomputed)
/// determines the category; budget_only when no component diverged.
FailureCategory attribute_failure(const sim::World& world, const sim::SimGoal& goal,
                                  const EpisodeTrace& trace,
                                  const sim::InjectionLog& log);

struct HumanLabel {
    std::string task_id;
    int run = 0;
    bool success = false;
    std::optional<FailureCategory> category;
};

/// CSV `task_id,run,verdict,category?`; merged over a SuiteResult and the
/// aggregates recomputed.
std::vector<HumanLabel> parse_human_labels(const std::string& path);
void apply_human_labels(SuiteResult& result, const std::vector<HumanLabel>& labels);

/// Recomputes rates, mean latency and failure counts from the episode list.
void recompute_aggregates(SuiteResult& result);

struct Report {
    std::string text;
    std::string csv;
};

/// Table-shaped report: one row per configuration label with
/// AITW General | AITW WebShopping | Overall columns, failure-category
/// breakdown and mean task latency.
Report generate_report(const std::vector<std::pair<std::string, SuiteResult>>& results);

} // namespace clickagent::eval
