// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "clickagent/eval.hpp"

namespace clickagent {

/// Loads a YAML run configuration, overlaying MLLM_BASE_URL, MLLM_API_KEY
/// and LOCATOR_BASE_URL from the environment, and stamps the
/// config_fingerprint (sha256 of the canonicalized config).
eval::RunConfig load_run_config(const std::string& path);

/// Built-in defaults (oracle + perfect locator, no world) for runs without
/// a config file.
eval::RunConfig default_run_config();

/// Canonical single-line rendering of the config; the fingerprint hashes it.
std::string canonicalize_config(const eval::RunConfig& cfg);

/// Recomputes cfg.config_fingerprint from the canonical form.
void stamp_fingerprint(eval::RunConfig& cfg);

} // namespace clickagent
