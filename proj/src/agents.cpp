// SPDX-License-Identifier: Apache-2.0
#include "mtr/agents.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "mtr/error.hpp"

namespace mtr {

void OrchestratorConfig::validate() const
{
    if (max_steps < 1 || max_steps > 64)
        throw Error(Errc::Config, "orchestrator.max_steps must be in [1, 64]");
    if (min_tools < 1 || min_tools > max_tools)
        throw Error(Errc::Config, "orchestrator tool bounds must satisfy 1 <= min_tools <= max_tools");
    if (validation_retry_limit < 1)
        throw Error(Errc::Config, "orchestrator.validation_retry_limit must be >= 1");
    if (rollouts < 1)
        throw Error(Errc::Config, "orchestrator.rollouts must be >= 1");
    if (workers < 1)
        throw Error(Errc::Config, "orchestrator.workers must be >= 1");
}

namespace {

bool is_backend_fault(const Error& e)
{
    return e.code() == Errc::BackendTimeout || e.code() == Errc::BackendError;
}

void ensure_summarizer(std::vector<ToolInterface>& tools)
{
    bool present = std::any_of(tools.begin(), tools.end(),
                               [](const ToolInterface& t) { return t.name == kAnswerSummarizer; });
    if (!present)
        tools.push_back(answer_summarizer_tool());
}

template <class Fn>
void run_pool(std::size_t tasks, int workers, Fn&& fn)
{
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto i = next.fetch_add(1); i < tasks; i = next.fetch_add(1))
            fn(i);
    };
    auto count = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), tasks);
    if (count <= 1) {
        worker();
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        pool.emplace_back(worker);
}

} // namespace

std::vector<ToolInterface> make_tools(std::string_view query, const TaskClassification& classification,
                                      ChatBackend& backend, const OrchestratorConfig& config)
{
    PromptBindings bindings{
        {"task_type", classification.task_type},
        {"complexity", classification.complexity},
        {"domain", classification.domain},
        {"toolmaker_guidance",
         classification.guidance.empty() ? default_guidance(classification.task_type) : classification.guidance},
    };
    std::vector<ChatMessage> messages{
        {"system", toolmaker_prompt().render(bindings)},
        {"user", "Task problem: " + std::string(query)},
    };

    std::string problem;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto reply = backend.complete(AgentRole::ToolMaker, messages);
        try {
            auto tools = parse_tool_set(reply);
            auto generated = std::count_if(tools.begin(), tools.end(),
                                           [](const ToolInterface& t) { return t.name != kAnswerSummarizer; });
            if (generated >= config.min_tools && generated <= config.max_tools) {
                ensure_summarizer(tools);
                return tools;
            }
            problem = "generated " + std::to_string(generated) + " tool(s); select between " +
                      std::to_string(config.min_tools) + " and " + std::to_string(config.max_tools);
        } catch (const Error& e) {
            if (is_backend_fault(e))
                throw;
            problem = e.what();
        }
        messages.push_back({"assistant", reply});
        messages.push_back({"user", "Your previous output was rejected (" + problem +
                                        "). Respond again with EXACTLY a JSON array of "
                                        "{\"type\": \"function\", \"function\": {...}} tool definitions "
                                        "and nothing else."});
    }
    throw Error(Errc::ToolGenerationFailed, problem);
}

std::string toolactor_request(const ToolInterface& tool, const json& args)
{
    return render_template(toolactor_request_template(),
                           {{"tool_definition", tool_to_json(tool).dump(2, ' ', false, json::error_handler_t::replace)},
                            {"arguments", dump_compact(args)}});
}

std::string act_tool(const ToolInterface& tool, const json& args, ChatBackend& backend)
{
    std::vector<ChatMessage> messages{
        {"system", toolactor_prompt().system_template},
        {"user", toolactor_request(tool, args)},
    };
    std::string problem;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto reply = backend.complete(AgentRole::ToolActor, messages);
        if (!tool.output)
            return reply;
        auto observation = parse_json_lenient(reply);
        if (!observation) {
            problem = "output is not JSON";
        } else {
            auto outcome = validate_output(tool, *observation);
            if (outcome.valid())
                return reply;
            problem = outcome.error().message;
        }
        messages.push_back({"assistant", reply});
        messages.push_back({"user", "The output does not conform to the tool's output schema (" + problem +
                                        "). Return only output that conforms."});
    }
    throw Error(Errc::OutputSchemaViolation, tool.name + ": " + problem);
}

namespace {

constexpr std::string_view kBlockTags[] = {"reasoning", "tool_call", "tool_response", "answer", "query"};

std::size_t count_occurrences(std::string_view text, std::string_view needle)
{
    std::size_t n = 0;
    for (auto at = text.find(needle); at != std::string_view::npos; at = text.find(needle, at + needle.size()))
        ++n;
    return n;
}

std::string escape_tags(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == '<')
            out += "&lt;";
        else
            out.push_back(c);
    }
    return out;
}

// Steps an AutoAgent turn contributes: reasoning, then at most one call or
// answer. Anything after that (e.g. a hallucinated tool_response) is dropped.
std::vector<TraceStep> parse_turn(std::string_view reply)
{
    std::string text(reply);
    for (auto tag : kBlockTags) {
        std::string open = "<" + std::string(tag) + ">";
        std::string close = "</" + std::string(tag) + ">";
        if (count_occurrences(text, open) > count_occurrences(text, close))
            text += "\n" + close;
    }
    Trace fragment;
    try {
        fragment = parse_trace(text);
    } catch (const Error&) {
        return {Reasoning{trim(escape_tags(reply))}};
    }
    std::vector<TraceStep> steps;
    for (auto& step : fragment.steps) {
        if (std::holds_alternative<ToolResponse>(step))
            break;
        bool terminal = !std::holds_alternative<Reasoning>(step);
        steps.push_back(std::move(step));
        if (terminal)
            break;
    }
    return steps;
}

std::string sanitize_observation(std::string_view text)
{
    std::string out = trim(text);
    constexpr std::string_view close = "</tool_response>";
    for (auto at = out.find(close); at != std::string::npos; at = out.find(close, at))
        out.replace(at, close.size(), "<\\/tool_response>");
    return out;
}

ToolResponse execute_call(const ToolCall& call, const std::vector<ToolInterface>& tools, ChatBackend& backend)
{
    auto error_response = [](StructuredError err) { return ToolResponse{err.dump(), false}; };

    if (call.malformed())
        return error_response({call.name, CheckKind::MalformedCall, "",
                               "tool_call body must be a JSON object with \"name\" and \"parameters\""});
    auto tool = std::find_if(tools.begin(), tools.end(), [&](const ToolInterface& t) { return t.name == call.name; });
    if (tool == tools.end()) {
        std::string available;
        for (const auto& t : tools)
            available += (available.empty() ? "" : ", ") + t.name;
        return error_response(
            {call.name, CheckKind::UnknownTool, "name", "unknown tool '" + call.name + "'; available: " + available});
    }
    auto outcome = validate_args(*tool, *call.args);
    if (!outcome.valid())
        return error_response(outcome.error());

    auto content = sanitize_observation(act_tool(*tool, *call.args, backend));
    bool valid = !parse_structured_error(content).has_value();
    return ToolResponse{std::move(content), valid};
}

} // namespace

Trace run_trace(std::string_view query, std::vector<ToolInterface> tools, ChatBackend& backend,
                const OrchestratorConfig& config)
{
    config.validate();
    ensure_summarizer(tools);

    Trace trace;
    trace.query = std::string(query);
    trace.tools = std::move(tools);
    trace.metadata.backend = backend.id();
    trace.metadata.step_cap = config.max_steps;
    if (config.clock)
        trace.metadata.started_at = config.clock();

    std::vector<ChatMessage> messages{
        {"system", autoagent_prompt().render({{"tools", serialize_tool_set(trace.tools)}})},
        {"user", trace.query},
    };

    bool answered = false;
    int consecutive_failures = 0;
    for (int turn = 0; turn < config.max_steps && !answered; ++turn) {
        auto reply = backend.complete(AgentRole::AutoAgent, messages);
        messages.push_back({"assistant", reply});

        bool acted = false;
        for (auto& step : parse_turn(reply)) {
            if (std::holds_alternative<FinalAnswer>(step)) {
                trace.steps.push_back(std::move(step));
                answered = true;
                break;
            }
            if (auto* call = std::get_if<ToolCall>(&step)) {
                auto response = execute_call(*call, trace.tools, backend);
                messages.push_back({"user", "<tool_response>\n" + response.content + "\n</tool_response>"});
                consecutive_failures = response.valid ? 0 : consecutive_failures + 1;
                trace.steps.push_back(std::move(step));
                trace.steps.push_back(std::move(response));
                acted = true;
                break;
            }
            trace.steps.push_back(std::move(step));
        }
        if (answered)
            break;
        if (consecutive_failures > config.validation_retry_limit) {
            trace.metadata.retries_exhausted = true;
            break;
        }
        if (!acted)
            messages.push_back({"user", "Continue: make one <tool_call> or give the final <answer>."});
    }
    if (!answered && !trace.metadata.retries_exhausted)
        trace.metadata.budget_exhausted = true;
    if (config.clock)
        trace.metadata.finished_at = config.clock();
    return trace;
}

json RolloutRecord::failure_json() const
{
    json out = json::object();
    out["query_id"] = query_id;
    out["rollout"] = rollout;
    out["error"] = error.value_or("");
    return out;
}

std::vector<Trace> BatchResult::traces() const
{
    std::vector<Trace> out;
    for (const auto& r : records) {
        if (r.trace)
            out.push_back(*r.trace);
    }
    return out;
}

std::vector<const RolloutRecord*> BatchResult::failures() const
{
    std::vector<const RolloutRecord*> out;
    for (const auto& r : records) {
        if (r.error)
            out.push_back(&r);
    }
    return out;
}

std::vector<ToolGenerationRecord> generate_tools(std::span<const QueryItem> queries, BackendFactory& factory,
                                                 const OrchestratorConfig& config)
{
    config.validate();
    std::vector<ToolGenerationRecord> out(queries.size());
    run_pool(queries.size(), config.workers, [&](std::size_t qi) {
        const auto& item = queries[qi];
        if (item.tools) {
            out[qi].tools = *item.tools;
            return;
        }
        try {
            auto backend = factory.open({qi, item.id, -1});
            out[qi].tools = make_tools(item.question, item.classification, *backend, config);
        } catch (const std::exception& e) {
            out[qi].error = e.what();
        }
    });
    return out;
}

BatchResult generate_batch(std::span<const QueryItem> queries, BackendFactory& factory,
                           const OrchestratorConfig& config)
{
    auto generated = generate_tools(queries, factory, config);

    auto n = static_cast<std::size_t>(config.rollouts);
    BatchResult result;
    result.records.resize(queries.size() * n);
    run_pool(result.records.size(), config.workers, [&](std::size_t task) {
        auto qi = task / n;
        int rollout = static_cast<int>(task % n);
        const auto& item = queries[qi];
        auto& record = result.records[task];
        record.query_index = qi;
        record.query_id = item.id;
        record.rollout = rollout;
        if (generated[qi].error) {
            record.error = "tool generation failed: " + *generated[qi].error;
            return;
        }
        try {
            auto backend = factory.open({qi, item.id, rollout});
            auto trace = run_trace(item.question, generated[qi].tools, *backend, config);
            trace.metadata.query_id = item.id;
            trace.metadata.rollout = rollout;
            trace.metadata.gold = item.gold;
            record.trace = std::move(trace);
        } catch (const std::exception& e) {
            record.error = e.what();
        }
    });
    return result;
}

} // namespace mtr
