// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtr/backend.hpp"
#include "mtr/prompts.hpp"
#include "mtr/schema.hpp"
#include "mtr/trace.hpp"

namespace mtr {

struct OrchestratorConfig {
    int max_steps = 16;              // AutoAgent turns per rollout
    int min_tools = 2;               // generated tools, summarizer excluded
    int max_tools = 5;
    int validation_retry_limit = 3;  // consecutive failed calls tolerated
    int rollouts = 8;
    int workers = 4;
    /// Stamps trace start/finish; leave empty for reproducible output.
    std::function<std::string()> clock;

    void validate() const;
};

/// Asks the ToolMaker for a tool set, with one corrective re-prompt when the
/// reply does not parse or the generated count is out of bounds. The
/// answer_summarizer tool is appended when absent.
std::vector<ToolInterface> make_tools(std::string_view query, const TaskClassification& classification,
                                      ChatBackend& backend, const OrchestratorConfig& config);

/// Simulates one validated call through the ToolActor and returns its reply
/// verbatim. With a declared output schema a non-conforming reply gets one
/// corrective re-prompt before OutputSchemaViolation.
std::string act_tool(const ToolInterface& tool, const json& args, ChatBackend& backend);

/// The user turn the ToolActor sees for a call.
std::string toolactor_request(const ToolInterface& tool, const json& args);

/// Runs the think-act-observe loop until an answer or the step budget.
/// Failed validation is fed back as a StructuredError tool_response.
Trace run_trace(std::string_view query, std::vector<ToolInterface> tools, ChatBackend& backend,
                const OrchestratorConfig& config);

struct QueryItem {
    std::string id;
    std::string question;
    std::optional<std::string> gold;
    TaskClassification classification;
    std::optional<std::vector<ToolInterface>> tools;
};

struct RolloutRecord {
    std::size_t query_index = 0;
    std::string query_id;
    int rollout = 0;
    std::optional<Trace> trace;
    std::optional<std::string> error;

    json failure_json() const;
};

struct BatchResult {
    std::vector<RolloutRecord> records;  // ordered by (query index, rollout)

    std::vector<Trace> traces() const;
    std::vector<const RolloutRecord*> failures() const;
};

/// Runs config.rollouts independent rollouts per query across a bounded
/// worker pool. Per-rollout failures are recorded, never thrown.
BatchResult generate_batch(std::span<const QueryItem> queries, BackendFactory& factory,
                           const OrchestratorConfig& config);

/// Tool generation for every query across the worker pool; a failed query
/// yields an error string instead of tools.
struct ToolGenerationRecord {
    std::vector<ToolInterface> tools;
    std::optional<std::string> error;
};

std::vector<ToolGenerationRecord> generate_tools(std::span<const QueryItem> queries, BackendFactory& factory,
                                                 const OrchestratorConfig& config);

} // namespace mtr
