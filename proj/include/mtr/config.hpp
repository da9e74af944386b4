// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "mtr/agents.hpp"
#include "mtr/backend.hpp"
#include "mtr/dataset.hpp"
#include "mtr/json_text.hpp"

namespace mtr {

struct RewardConfig {
    double loop_penalty = 0.1;
    double kl_beta = 0.01;
};

struct PathsConfig {
    std::filesystem::path questions;
    std::filesystem::path output_dir = "out";
};

/// The whole run, from one JSON file:
///
///   { "backend":      { kind, endpoint, model, temperature, max_tokens,
///                       timeout_seconds, max_retries, script },
///     "orchestrator": { max_steps, min_tools, max_tools,
///                       validation_retry_limit, rollouts, workers },
///     "reward":       { loop_penalty, kl_beta },
///     "filter":       { min_tool_calls, max_tool_calls,
///                       require_no_validation_errors },
///     "paths":        { questions, output_dir } }
///
/// Omitted sections and keys take defaults; unknown keys are errors.
/// Relative paths resolve against the config file's directory. MTR_API_KEY
/// and MTR_ENDPOINT override the backend credentials and endpoint.
struct PipelineConfig {
    ChatBackendConfig backend;
    OrchestratorConfig orchestrator;
    RewardConfig reward;
    FilterCriteria filter;
    PathsConfig paths;

    /// The backend section is only checked when a command talks to it.
    void validate(bool with_backend) const;
};

PipelineConfig config_from_json(const json& value, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
void apply_environment(PipelineConfig& config);

} // namespace mtr
