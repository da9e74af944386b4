// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mtr/json_text.hpp"
#include "mtr/schema.hpp"

namespace mtr {

struct Reasoning {
    std::string text;
    friend bool operator==(const Reasoning&, const Reasoning&) = default;
};

/// `args` is absent when the body did not parse into {"name", "parameters"};
/// `raw` always keeps the block body as written.
struct ToolCall {
    std::string name;
    std::optional<json> args;
    std::string raw;

    bool malformed() const noexcept { return !args.has_value(); }
    friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

struct ToolResponse {
    std::string content;
    bool valid = true;
    friend bool operator==(const ToolResponse&, const ToolResponse&) = default;
};

struct FinalAnswer {
    std::string raw;
    friend bool operator==(const FinalAnswer&, const FinalAnswer&) = default;
};

using TraceStep = std::variant<Reasoning, ToolCall, ToolResponse, FinalAnswer>;

struct TraceMetadata {
    std::string query_id;
    int rollout = 0;
    std::optional<std::string> gold;
    std::string backend;
    std::string started_at;
    std::string finished_at;
    int step_cap = 0;
    bool budget_exhausted = false;
    bool retries_exhausted = false;

    friend bool operator==(const TraceMetadata&, const TraceMetadata&) = default;
};

struct Trace {
    std::string query;
    std::vector<ToolInterface> tools;
    std::vector<TraceStep> steps;
    TraceMetadata metadata;

    friend bool operator==(const Trace&, const Trace&) = default;
};

/// Equality over what the tagged text carries: the query and the steps.
bool same_text_structure(const Trace& a, const Trace& b);

/// Builds a well-formed call whose raw body is the canonical emission.
ToolCall make_tool_call(std::string name, json args);

/// Parses a tool_call body: {"name": ..., "parameters"|"arguments": {...}}.
ToolCall parse_tool_call_body(std::string_view body);

/// Maps <query>, <reasoning>, <tool_call>, <tool_response> and <answer>
/// blocks to steps in document order. Throws UnclosedTag or
/// InterleavingViolation.
Trace parse_trace(std::string_view text);

std::string serialize_trace(const Trace& trace);

struct TraceStats {
    int n_tool_calls = 0;
    int n_loops = 0;
    int n_malformed = 0;
    bool has_final_answer = false;

    friend bool operator==(const TraceStats&, const TraceStats&) = default;
};

/// n_loops counts calls whose (name, canonical args) repeats an earlier call.
TraceStats compute_stats(const Trace& trace);

/// Lists every violated trace invariant; empty means well-formed.
std::vector<std::string> check_trace_invariants(const Trace& trace);

/// Indices of ToolCall steps naming a tool outside the trace's tool set.
std::vector<std::size_t> unknown_tool_calls(const Trace& trace);

json step_to_json(const TraceStep& step);
TraceStep step_from_json(const json& value);
json trace_to_json(const Trace& trace);
Trace trace_from_json(const json& value);

/// "<query_id>#<rollout>"
std::string trace_id(const Trace& trace);

} // namespace mtr
