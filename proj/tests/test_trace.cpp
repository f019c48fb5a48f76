// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "clickagent/rng.hpp"
#include "clickagent/trace.hpp"
#include "clickagent/types.hpp"

using namespace clickagent;

namespace {

Observation gen_obs(SplitMix64& rng) {
    Observation o;
    auto len = 1 + rng.next_below(64);
    for (std::uint64_t i = 0; i < len; ++i)
        o.image_bytes.push_back(static_cast<char>(rng.next_below(256)));
    o.format_tag = rng.next_below(2) == 0 ? "png" : "simdesc";
    o.screen_w = 1080;
    o.screen_h = 1920;
    o.captured_at_ms = static_cast<std::int64_t>(rng.next_below(100000));
    return o;
}

Step gen_step(SplitMix64& rng, int index) {
    Step s;
    s.index = index;
    s.pre_obs = gen_obs(rng);
    s.post_obs = gen_obs(rng);
    switch (rng.next_below(4)) {
    case 0:
        s.action = ClickAction{"tap on element 'btn_" +
                               std::to_string(rng.next_below(100)) + "'"};
        if (rng.next_below(4) == 0) {
            s.phase_error = "element not found";
        } else {
            s.locator_box = BoundingBox{0.1, 0.2, 0.3, 0.4};
            s.tap_point = Point{216, 576, 1080, 1920};
        }
        break;
    case 1:
        s.action = TypeAction{"text " + std::to_string(rng.next_below(100))};
        break;
    case 2:
        s.action = OpenAppAction{"com.example.app"};
        s.resolved_app = "com.example.app";
        break;
    default:
        s.action = SwipeAction{static_cast<SwipeDirection>(rng.next_below(4))};
        break;
    }
    s.decision_raw = render_action(s.action) + "\nsome trailing prose";
    s.verdict = Verdict{rng.next_below(2) == 0 ? VerdictStatus::Success
                                               : VerdictStatus::Failure,
                        "rationale " + std::to_string(rng.next_below(10))};
    s.decide_ms = static_cast<std::int64_t>(rng.next_below(500));
    s.locate_ms = static_cast<std::int64_t>(rng.next_below(500));
    s.execute_ms = static_cast<std::int64_t>(rng.next_below(500));
    s.reflect_ms = static_cast<std::int64_t>(rng.next_below(500));
    return s;
}

EpisodeTrace gen_trace(SplitMix64& rng) {
    EpisodeTrace t;
    t.task = TaskSpec{"task-" + std::to_string(rng.next_below(1000)), "General",
                      "do the thing", std::nullopt};
    if (rng.next_below(2) == 0) t.task.sim_goal = "g_x";
    int n = static_cast<int>(rng.next_below(6));
    for (int i = 0; i < n; ++i) t.steps.push_back(gen_step(rng, i));
    switch (rng.next_below(3)) {
    case 0: t.outcome = OutcomeSuccess{}; break;
    case 1: t.outcome = OutcomeBudgetExhausted{}; break;
    default: t.outcome = OutcomeError{"device unreachable"}; break;
    }
    t.config_fingerprint = "fp" + std::to_string(rng.next_below(100));
    t.seed = rng.next_u64();
    t.total_ms = static_cast<std::int64_t>(rng.next_below(100000));
    t.driver = "sim";
    t.world = "assets/worlds/general.yaml";
    return t;
}

} // namespace

TEST_CASE("sha256_hex matches known vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("property: generated traces round-trip through serialization") {
    SplitMix64 rng(424242);
    for (int i = 0; i < 300; ++i) {
        EpisodeTrace t = gen_trace(rng);
        SerializedTrace s = serialize_trace(t);
        EpisodeTrace back = deserialize_trace(s.jsonl, s.blobs);
        REQUIRE(back == t);
    }
}

TEST_CASE("serialization is byte-deterministic") {
    SplitMix64 rng(7);
    EpisodeTrace t = gen_trace(rng);
    auto a = serialize_trace(t);
    auto b = serialize_trace(t);
    CHECK(a.jsonl == b.jsonl);
    CHECK(a.blobs == b.blobs);
}

TEST_CASE("unknown schema version is rejected") {
    SplitMix64 rng(9);
    EpisodeTrace t = gen_trace(rng);
    auto s = serialize_trace(t);
    auto pos = s.jsonl.find("\"schema_version\":\"1\"");
    REQUIRE(pos != std::string::npos);
    s.jsonl.replace(pos, std::string("\"schema_version\":\"1\"").size(),
                    "\"schema_version\":\"99\"");
    CHECK_THROWS_WITH_AS(deserialize_trace(s.jsonl, s.blobs),
                         "schema_version_mismatch: got 99", TraceError);
    try {
        deserialize_trace(s.jsonl, s.blobs);
    } catch (const TraceError& e) {
        CHECK(e.kind() == TraceErrorKind::SchemaVersionMismatch);
    }
}

TEST_CASE("truncated stream (missing footer) is a malformed record") {
    SplitMix64 rng(11);
    EpisodeTrace t = gen_trace(rng);
    auto s = serialize_trace(t);
    // drop the final (footer) line
    auto end = s.jsonl.find_last_of('\n', s.jsonl.size() - 2);
    std::string truncated = s.jsonl.substr(0, end + 1);
    try {
        deserialize_trace(truncated, s.blobs);
        FAIL("expected TraceError");
    } catch (const TraceError& e) {
        CHECK(e.kind() == TraceErrorKind::MalformedRecord);
    }
}

TEST_CASE("garbage line is a malformed record with the line number") {
    SplitMix64 rng(13);
    EpisodeTrace t = gen_trace(rng);
    auto s = serialize_trace(t);
    std::string tampered = s.jsonl + "not json at all\n";
    // re-append footer so only the garbage line is at fault? No: garbage is
    // mid-stream relative to a second footer; simplest is garbage at the end.
    try {
        deserialize_trace(tampered, s.blobs);
        FAIL("expected TraceError");
    } catch (const TraceError& e) {
        CHECK(e.kind() == TraceErrorKind::MalformedRecord);
        CHECK(e.line() > 0);
    }
}

TEST_CASE("write_trace lays out obs/<digest>.<format> and reads back") {
    namespace fs = std::filesystem;
    SplitMix64 rng(17);
    EpisodeTrace t = gen_trace(rng);
    while (t.steps.empty()) t = gen_trace(rng);

    fs::path dir = fs::temp_directory_path() / "clickagent_trace_test";
    fs::remove_all(dir);
    fs::path trace_path = write_trace(t, dir);
    CHECK(trace_path == dir / "trace.jsonl");
    CHECK(fs::exists(dir / "obs"));

    // every blob file is named by the digest of its content
    for (const auto& entry : fs::directory_iterator(dir / "obs")) {
        std::ifstream f(entry.path(), std::ios::binary);
        std::ostringstream buf;
        buf << f.rdbuf();
        CHECK(entry.path().stem().string() == sha256_hex(buf.str()));
    }

    EpisodeTrace back = read_trace(dir);
    CHECK(back == t);
    fs::remove_all(dir);
}
