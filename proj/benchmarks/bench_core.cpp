// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the hot paths of the agent runtime: grammar
// parse/render, geometry, screen rendering, transitions and the BFS oracle.
// Run from the repository root so the fixture worlds resolve.

#include <memory>

#include <benchmark/benchmark.h>

#include "clickagent/action.hpp"
#include "clickagent/simworld.hpp"
#include "clickagent/trace.hpp"
#include "clickagent/types.hpp"

using namespace clickagent;

namespace {

const sim::World& general_world() {
    static sim::World w = sim::load_world("assets/worlds/general.yaml");
    return w;
}

void BM_ParseDecision(benchmark::State& state) {
    const std::string raw =
        "Let me look at the screen first.\n"
        "ACTION: CLICK\nTARGET: Click on the Eyes Closed Official Video\n";
    for (auto _ : state) benchmark::DoNotOptimize(parse_decision(raw));
}
BENCHMARK(BM_ParseDecision);

void BM_RenderAction(benchmark::State& state) {
    Action a = ClickAction{"Click on the Eyes Closed Official Video"};
    for (auto _ : state) benchmark::DoNotOptimize(render_action(a));
}
BENCHMARK(BM_RenderAction);

void BM_BboxCenter(benchmark::State& state) {
    BoundingBox b{0.25, 0.5, 0.75, 0.7};
    for (auto _ : state) benchmark::DoNotOptimize(bbox_center(b, 1080, 1920));
}
BENCHMARK(BM_BboxCenter);

void BM_RenderScreen(benchmark::State& state) {
    const sim::World& w = general_world();
    sim::WorldState s = sim::initial_state(w, 1);
    for (auto _ : state) benchmark::DoNotOptimize(sim::render_screen(w, s, 0));
}
BENCHMARK(BM_RenderScreen);

void BM_ApplyTap(benchmark::State& state) {
    const sim::World& w = general_world();
    sim::WorldState s = sim::initial_state(w, 1);
    Point p = bbox_center(BoundingBox{0.05, 0.10, 0.20, 0.18}, w.screen_w,
                          w.screen_h); // settings icon
    for (auto _ : state) benchmark::DoNotOptimize(sim::apply_tap(w, s, p));
}
BENCHMARK(BM_ApplyTap);

void BM_OraclePolicyDeep(benchmark::State& state) {
    const sim::World& w = general_world();
    sim::WorldState s = sim::initial_state(w, 1);
    const sim::SimGoal& goal = w.goals.at("g_reset_done"); // depth 6
    for (auto _ : state) benchmark::DoNotOptimize(sim::oracle_policy(w, s, goal));
}
BENCHMARK(BM_OraclePolicyDeep);

void BM_Sha256Screen(benchmark::State& state) {
    const sim::World& w = general_world();
    Observation obs = sim::render_screen(w, sim::initial_state(w, 1), 0);
    for (auto _ : state) benchmark::DoNotOptimize(sha256_hex(obs.image_bytes));
}
BENCHMARK(BM_Sha256Screen);

} // namespace

BENCHMARK_MAIN();
