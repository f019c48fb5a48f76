// SPDX-License-Identifier: Apache-2.0
#include "clickagent/trace.hpp"

#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

namespace clickagent {

using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

namespace {

json action_to_json(const Action& a) {
    struct V {
        json operator()(const ClickAction& c) const {
            return json{{"type", "click"}, {"target", c.ui_command}};
        }
        json operator()(const TypeAction& t) const {
            return json{{"type", "type"}, {"text", t.text}};
        }
        json operator()(const OpenAppAction& o) const {
            return json{{"type", "open_app"}, {"app", o.app_id}};
        }
        json operator()(const SwipeAction& s) const {
            return json{{"type", "swipe"}, {"direction", to_string(s.direction)}};
        }
    };
    return std::visit(V{}, a);
}

Action action_from_json(const json& j) {
    std::string type = j.at("type").get<std::string>();
    if (type == "click") return ClickAction{j.at("target").get<std::string>()};
    if (type == "type") return TypeAction{j.at("text").get<std::string>()};
    if (type == "open_app") return OpenAppAction{j.at("app").get<std::string>()};
    if (type == "swipe") {
        auto d = parse_direction(j.at("direction").get<std::string>());
        if (!d) throw std::runtime_error("bad swipe direction");
        return SwipeAction{*d};
    }
    throw std::runtime_error("unknown action type: " + type);
}

json obs_ref(const Observation& o, SerializedTrace& out) {
    std::string digest = sha256_hex(o.image_bytes);
    out.blobs[digest] = o.image_bytes;
    out.blob_formats[digest] = o.format_tag;
    return json{{"digest", digest},
                {"format", o.format_tag},
                {"w", o.screen_w},
                {"h", o.screen_h},
                {"captured_at_ms", o.captured_at_ms}};
}

Observation obs_from_ref(const json& j,
                         const std::map<std::string, std::string>& blobs) {
    Observation o;
    std::string digest = j.at("digest").get<std::string>();
    auto it = blobs.find(digest);
    if (it == blobs.end())
        throw std::runtime_error("missing observation payload " + digest);
    o.image_bytes = it->second;
    o.format_tag = j.at("format").get<std::string>();
    o.screen_w = j.at("w").get<int>();
    o.screen_h = j.at("h").get<int>();
    o.captured_at_ms = j.at("captured_at_ms").get<std::int64_t>();
    return o;
}

json box_to_json(const BoundingBox& b) {
    return json{{"x1", b.x1}, {"y1", b.y1}, {"x2", b.x2}, {"y2", b.y2}};
}

BoundingBox box_from_json(const json& j) {
    return BoundingBox{j.at("x1").get<double>(), j.at("y1").get<double>(),
                       j.at("x2").get<double>(), j.at("y2").get<double>()};
}

json outcome_to_json(const Outcome& o) {
    struct V {
        json operator()(const OutcomeSuccess&) const {
            return json{{"status", "success"}};
        }
        json operator()(const OutcomeBudgetExhausted&) const {
            return json{{"status", "budget_exhausted"}};
        }
        json operator()(const OutcomeError& e) const {
            return json{{"status", "error"}, {"message", e.message}};
        }
    };
    return std::visit(V{}, o);
}

Outcome outcome_from_json(const json& j) {
    std::string s = j.at("status").get<std::string>();
    if (s == "success") return OutcomeSuccess{};
    if (s == "budget_exhausted") return OutcomeBudgetExhausted{};
    if (s == "error") return OutcomeError{j.at("message").get<std::string>()};
    throw std::runtime_error("unknown outcome status: " + s);
}

} // namespace

SerializedTrace serialize_trace(const EpisodeTrace& t) {
    SerializedTrace out;
    std::ostringstream body;

    json header{
        {"schema_version", kTraceSchemaVersion},
        {"task",
         {{"id", t.task.id},
          {"subset", t.task.subset},
          {"instruction", t.task.instruction},
          {"sim_goal", t.task.sim_goal ? json(*t.task.sim_goal) : json(nullptr)}}},
        {"config_fingerprint", t.config_fingerprint},
        {"seed", t.seed},
        {"driver", t.driver},
        {"world", t.world},
    };
    body << header.dump() << "\n";

    for (const Step& s : t.steps) {
        json rec{
            {"record", "step"},
            {"index", s.index},
            {"pre_obs", obs_ref(s.pre_obs, out)},
            {"decision_raw", s.decision_raw},
            {"action", action_to_json(s.action)},
            {"locator_box", s.locator_box ? box_to_json(*s.locator_box) : json(nullptr)},
            {"tap_point", s.tap_point
                              ? json{{"x", s.tap_point->x},
                                     {"y", s.tap_point->y},
                                     {"w", s.tap_point->screen_w},
                                     {"h", s.tap_point->screen_h}}
                              : json(nullptr)},
            {"resolved_app", s.resolved_app ? json(*s.resolved_app) : json(nullptr)},
            {"phase_error", s.phase_error ? json(*s.phase_error) : json(nullptr)},
            {"post_obs", obs_ref(s.post_obs, out)},
            {"verdict",
             {{"status", s.verdict.status == VerdictStatus::Success ? "success" : "failure"},
              {"rationale", s.verdict.rationale}}},
            {"decide_ms", s.decide_ms},
            {"locate_ms", s.locate_ms},
            {"execute_ms", s.execute_ms},
            {"reflect_ms", s.reflect_ms},
        };
        body << rec.dump() << "\n";
    }

    json footer{{"record", "footer"},
                {"outcome", outcome_to_json(t.outcome)},
                {"total_ms", t.total_ms}};
    body << footer.dump() << "\n";

    out.jsonl = body.str();
    return out;
}

EpisodeTrace deserialize_trace(const std::string& jsonl,
                               const std::map<std::string, std::string>& blobs) {
    EpisodeTrace t;
    std::istringstream in(jsonl);
    std::string line;
    int line_no = 0;
    bool have_header = false, have_footer = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw TraceError(TraceErrorKind::MalformedRecord, line_no,
                             "malformed_record at line " + std::to_string(line_no) +
                                 ": " + e.what());
        }
        try {
            if (!have_header) {
                std::string ver = j.at("schema_version").get<std::string>();
                if (ver != kTraceSchemaVersion)
                    throw TraceError(TraceErrorKind::SchemaVersionMismatch, line_no,
                                     "schema_version_mismatch: got " + ver);
                const json& task = j.at("task");
                t.task.id = task.at("id").get<std::string>();
                t.task.subset = task.at("subset").get<std::string>();
                t.task.instruction = task.at("instruction").get<std::string>();
                if (!task.at("sim_goal").is_null())
                    t.task.sim_goal = task.at("sim_goal").get<std::string>();
                t.config_fingerprint = j.at("config_fingerprint").get<std::string>();
                t.seed = j.at("seed").get<std::uint64_t>();
                t.driver = j.at("driver").get<std::string>();
                t.world = j.at("world").get<std::string>();
                have_header = true;
                continue;
            }
            std::string kind = j.at("record").get<std::string>();
            if (kind == "step") {
                Step s;
                s.index = j.at("index").get<int>();
                s.pre_obs = obs_from_ref(j.at("pre_obs"), blobs);
                s.decision_raw = j.at("decision_raw").get<std::string>();
                s.action = action_from_json(j.at("action"));
                if (!j.at("locator_box").is_null())
                    s.locator_box = box_from_json(j.at("locator_box"));
                if (!j.at("tap_point").is_null()) {
                    const json& p = j.at("tap_point");
                    s.tap_point = Point{p.at("x").get<int>(), p.at("y").get<int>(),
                                        p.at("w").get<int>(), p.at("h").get<int>()};
                }
                if (!j.at("resolved_app").is_null())
                    s.resolved_app = j.at("resolved_app").get<std::string>();
                if (!j.at("phase_error").is_null())
                    s.phase_error = j.at("phase_error").get<std::string>();
                s.post_obs = obs_from_ref(j.at("post_obs"), blobs);
                const json& v = j.at("verdict");
                s.verdict.status = v.at("status").get<std::string>() == "success"
                                       ? VerdictStatus::Success
                                       : VerdictStatus::Failure;
                s.verdict.rationale = v.at("rationale").get<std::string>();
                s.decide_ms = j.at("decide_ms").get<std::int64_t>();
                s.locate_ms = j.at("locate_ms").get<std::int64_t>();
                s.execute_ms = j.at("execute_ms").get<std::int64_t>();
                s.reflect_ms = j.at("reflect_ms").get<std::int64_t>();
                if (!step_fields_consistent(s))
                    throw TraceError(TraceErrorKind::MalformedRecord, line_no,
                                     "locator fields inconsistent with action at line " +
                                         std::to_string(line_no));
                if (s.index != static_cast<int>(t.steps.size()))
                    throw TraceError(TraceErrorKind::MalformedRecord, line_no,
                                     "non-contiguous step index at line " +
                                         std::to_string(line_no));
                t.steps.push_back(std::move(s));
            } else if (kind == "footer") {
                t.outcome = outcome_from_json(j.at("outcome"));
                t.total_ms = j.at("total_ms").get<std::int64_t>();
                have_footer = true;
            } else {
                throw TraceError(TraceErrorKind::MalformedRecord, line_no,
                                 "unknown record kind at line " + std::to_string(line_no));
            }
        } catch (const TraceError&) {
            throw;
        } catch (const std::exception& e) {
            throw TraceError(TraceErrorKind::MalformedRecord, line_no,
                             "malformed_record at line " + std::to_string(line_no) +
                                 ": " + e.what());
        }
    }

    if (!have_header)
        throw TraceError(TraceErrorKind::MalformedRecord, 0, "empty trace stream");
    if (!have_footer)
        throw TraceError(TraceErrorKind::MalformedRecord, line_no,
                         "malformed_record(last line): missing footer");
    return t;
}

std::filesystem::path write_trace(const EpisodeTrace& t,
                                  const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    SerializedTrace s = serialize_trace(t);
    fs::create_directories(dir / "obs");
    for (const auto& [digest, bytes] : s.blobs) {
        fs::path p = dir / "obs" / (digest + "." + s.blob_formats.at(digest));
        if (fs::exists(p)) continue;
        std::ofstream f(p, std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    fs::path trace_path = dir / "trace.jsonl";
    std::ofstream f(trace_path, std::ios::binary);
    f.write(s.jsonl.data(), static_cast<std::streamsize>(s.jsonl.size()));
    return trace_path;
}

EpisodeTrace read_trace(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    fs::path trace_path = fs::is_directory(path) ? path / "trace.jsonl" : path;
    std::ifstream f(trace_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open trace: " + trace_path.string());
    std::ostringstream buf;
    buf << f.rdbuf();

    std::map<std::string, std::string> blobs;
    fs::path obs_dir = trace_path.parent_path() / "obs";
    if (fs::exists(obs_dir)) {
        for (const auto& entry : fs::directory_iterator(obs_dir)) {
            std::ifstream bf(entry.path(), std::ios::binary);
            std::ostringstream bb;
            bb << bf.rdbuf();
            blobs[entry.path().stem().string()] = bb.str();
        }
    }
    return deserialize_trace(buf.str(), blobs);
}

} // namespace clickagent
