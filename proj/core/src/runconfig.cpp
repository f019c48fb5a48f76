// SPDX-License-Identifier: Apache-2.0
#include "clickagent/runconfig.hpp"

#include <cstdlib>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "clickagent/trace.hpp"

namespace clickagent {

namespace {

std::optional<std::string> env_value(const char* name) {
    const char* v = std::getenv(name);
    if (v && *v) return std::string(v);
    return std::nullopt;
}

EndpointConfig parse_endpoint(const YAML::Node& n) {
    EndpointConfig e;
    if (n["base_url"]) e.base_url = n["base_url"].as<std::string>();
    if (n["api_key"]) e.api_key = n["api_key"].as<std::string>();
    if (n["model"]) e.model_name = n["model"].as<std::string>();
    if (n["timeout_ms"]) e.timeout_ms = n["timeout_ms"].as<std::int64_t>();
    if (n["max_retries"]) e.max_retries = n["max_retries"].as<int>();
    if (n["temperature"]) e.temperature = n["temperature"].as<double>();
    return e;
}

} // namespace

eval::RunConfig default_run_config() {
    eval::RunConfig cfg;
    cfg.prompts = default_prompts();
    stamp_fingerprint(cfg);
    return cfg;
}

eval::RunConfig load_run_config(const std::string& path) {
    YAML::Node doc = YAML::LoadFile(path);
    eval::RunConfig cfg;

    if (doc["scenario"]) {
        std::string s = doc["scenario"].as<std::string>();
        if (s == "cache_removal") cfg.scenario = eval::Scenario::CacheRemoval;
        else if (s == "no_cache_removal") cfg.scenario = eval::Scenario::NoCacheRemoval;
        else throw std::runtime_error(path + ": unknown scenario '" + s + "'");
    }
    if (doc["world"]) cfg.world_path = doc["world"].as<std::string>();
    if (doc["mllm"]) {
        const auto& m = doc["mllm"];
        cfg.mllm_backend = m["backend"] ? m["backend"].as<std::string>() : "oracle";
        if (cfg.mllm_backend == "http") cfg.mllm_endpoint = parse_endpoint(m);
    }
    if (doc["locator"]) {
        const auto& l = doc["locator"];
        cfg.locator_backend = l["backend"] ? l["backend"].as<std::string>() : "perfect";
        if (cfg.locator_backend == "http") cfg.locator_endpoint = parse_endpoint(l);
    }
    if (doc["injection"]) {
        const auto& i = doc["injection"];
        sim::ErrorInjectionConfig inj;
        if (i["locator_miss_prob"])
            inj.locator_miss_prob = i["locator_miss_prob"].as<double>();
        if (i["reflection_false_success_prob"])
            inj.reflection_false_success_prob =
                i["reflection_false_success_prob"].as<double>();
        if (i["reflection_false_failure_prob"])
            inj.reflection_false_failure_prob =
                i["reflection_false_failure_prob"].as<double>();
        if (i["decision_wrong_action_prob"])
            inj.decision_wrong_action_prob =
                i["decision_wrong_action_prob"].as<double>();
        if (i["seed"]) inj.seed = i["seed"].as<std::uint64_t>();
        cfg.injection = inj;
    }
    if (doc["repeats"]) cfg.repeats = doc["repeats"].as<int>();
    if (doc["max_steps"]) cfg.loop.max_steps = doc["max_steps"].as<int>();
    if (doc["per_step_timeout_ms"])
        cfg.loop.per_step_timeout_ms = doc["per_step_timeout_ms"].as<std::int64_t>();
    if (doc["record_dir"]) cfg.loop.record_dir = doc["record_dir"].as<std::string>();
    if (doc["seed"]) cfg.seed = doc["seed"].as<std::uint64_t>();
    if (doc["parallel"]) cfg.parallel = doc["parallel"].as<int>();
    if (doc["cache_scope"])
        for (const auto& p : doc["cache_scope"])
            cfg.cache_scope.push_back(p.as<std::string>());

    bool ocr_anchoring = doc["ocr_anchoring"] ? doc["ocr_anchoring"].as<bool>() : true;
    if (doc["prompts_dir"])
        cfg.prompts = load_prompts(doc["prompts_dir"].as<std::string>(), ocr_anchoring);
    else {
        cfg.prompts = default_prompts();
        cfg.prompts.ocr_anchoring = ocr_anchoring;
    }

    // env overlay
    if (auto v = env_value("MLLM_BASE_URL")) {
        if (!cfg.mllm_endpoint) cfg.mllm_endpoint = EndpointConfig{};
        cfg.mllm_endpoint->base_url = *v;
    }
    if (auto v = env_value("MLLM_API_KEY")) {
        if (!cfg.mllm_endpoint) cfg.mllm_endpoint = EndpointConfig{};
        cfg.mllm_endpoint->api_key = *v;
    }
    if (auto v = env_value("LOCATOR_BASE_URL")) {
        if (!cfg.locator_endpoint) cfg.locator_endpoint = EndpointConfig{};
        cfg.locator_endpoint->base_url = *v;
    }

    stamp_fingerprint(cfg);
    return cfg;
}

std::string canonicalize_config(const eval::RunConfig& cfg) {
    std::ostringstream out;
    out << "scenario="
        << (cfg.scenario == eval::Scenario::CacheRemoval ? "cache_removal"
                                                         : "no_cache_removal")
        << ";world=" << cfg.world_path << ";mllm=" << cfg.mllm_backend
        << ";locator=" << cfg.locator_backend;
    if (cfg.mllm_endpoint)
        out << ";mllm_url=" << cfg.mllm_endpoint->base_url
            << ";mllm_model=" << cfg.mllm_endpoint->model_name
            << ";mllm_temp=" << cfg.mllm_endpoint->temperature;
    if (cfg.locator_endpoint)
        out << ";locator_url=" << cfg.locator_endpoint->base_url;
    if (cfg.injection)
        out << ";inj=" << cfg.injection->locator_miss_prob << ","
            << cfg.injection->reflection_false_success_prob << ","
            << cfg.injection->reflection_false_failure_prob << ","
            << cfg.injection->decision_wrong_action_prob << ","
            << cfg.injection->seed;
    out << ";repeats=" << cfg.repeats << ";max_steps=" << cfg.loop.max_steps
        << ";seed=" << cfg.seed << ";ocr=" << cfg.prompts.ocr_anchoring
        << ";prompts=" << sha256_hex(cfg.prompts.decision_template +
                                     cfg.prompts.reflection_template +
                                     cfg.prompts.app_select_template);
    return out.str();
}

void stamp_fingerprint(eval::RunConfig& cfg) {
    cfg.config_fingerprint = sha256_hex(canonicalize_config(cfg));
}

} // namespace clickagent
