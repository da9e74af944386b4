// SPDX-License-Identifier: Apache-2.0
#include "mtr/trace.hpp"

#include <array>
#include <set>

#include "mtr/error.hpp"

namespace mtr {

namespace {

constexpr std::array<std::string_view, 5> kTags{"query", "reasoning", "tool_call", "tool_response", "answer"};

std::string_view tag_of(const TraceStep& step)
{
    return std::visit(
        [](const auto& s) -> std::string_view {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Reasoning>)
                return "reasoning";
            else if constexpr (std::is_same_v<T, ToolCall>)
                return "tool_call";
            else if constexpr (std::is_same_v<T, ToolResponse>)
                return "tool_response";
            else
                return "answer";
        },
        step);
}

std::string block(std::string_view tag, std::string_view content)
{
    std::string out;
    out.reserve(content.size() + 2 * tag.size() + 8);
    out += '<';
    out += tag;
    out += ">\n";
    out += content;
    out += "\n</";
    out += tag;
    out += '>';
    return out;
}

} // namespace

bool same_text_structure(const Trace& a, const Trace& b)
{
    return a.query == b.query && a.steps == b.steps;
}

ToolCall make_tool_call(std::string name, json args)
{
    json body = json::object();
    body["name"] = name;
    body["parameters"] = args;
    return ToolCall{std::move(name), std::move(args), dump_compact(body)};
}

ToolCall parse_tool_call_body(std::string_view body)
{
    ToolCall call;
    call.raw = trim(body);
    auto parsed = parse_json_lenient(call.raw);
    if (!parsed || !parsed->is_object())
        return call;
    auto name = parsed->find("name");
    if (name == parsed->end() || !name->is_string())
        return call;
    call.name = name->get<std::string>();

    auto params = parsed->find("parameters");
    if (params == parsed->end())
        params = parsed->find("arguments");
    if (params == parsed->end()) {
        call.args = json::object();
    } else if (params->is_object()) {
        call.args = *params;
    } else if (params->is_string()) {
        // OpenAI wire convention: arguments as a JSON-encoded string.
        auto inner = parse_json_lenient(params->get<std::string>());
        if (inner && inner->is_object())
            call.args = std::move(*inner);
    }
    return call;
}

Trace parse_trace(std::string_view text)
{
    Trace trace;
    auto& steps = trace.steps;

    auto attach_outside = [&](std::string_view outside) {
        auto body = trim(outside);
        if (body.empty())
            return;
        if (!steps.empty()) {
            if (auto* r = std::get_if<Reasoning>(&steps.back())) {
                r->text += "\n";
                r->text += body;
                return;
            }
        }
        steps.emplace_back(Reasoning{std::move(body)});
    };

    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t open_at = std::string_view::npos;
        std::string_view tag;
        for (auto candidate : kTags) {
            std::string open = "<" + std::string(candidate) + ">";
            auto at = text.find(open, pos);
            if (at < open_at) {
                open_at = at;
                tag = candidate;
            }
        }
        if (open_at == std::string_view::npos) {
            attach_outside(text.substr(pos));
            break;
        }
        attach_outside(text.substr(pos, open_at - pos));

        std::string close = "</" + std::string(tag) + ">";
        auto body_at = open_at + tag.size() + 2;
        auto close_at = text.find(close, body_at);
        if (close_at == std::string_view::npos)
            throw Error(Errc::UnclosedTag, "<" + std::string(tag) + "> opened at offset " +
                                               std::to_string(open_at) + " is never closed");
        auto content = trim(text.substr(body_at, close_at - body_at));
        pos = close_at + close.size();

        if (tag == "query") {
            trace.query = std::move(content);
        } else if (tag == "reasoning") {
            steps.emplace_back(Reasoning{std::move(content)});
        } else if (tag == "tool_call") {
            steps.emplace_back(parse_tool_call_body(content));
        } else if (tag == "tool_response") {
            if (steps.empty() || !std::holds_alternative<ToolCall>(steps.back()))
                throw Error(Errc::InterleavingViolation,
                            "<tool_response> at offset " + std::to_string(open_at) +
                                " does not follow a <tool_call>");
            bool valid = !parse_structured_error(content).has_value();
            steps.emplace_back(ToolResponse{std::move(content), valid});
        } else {
            steps.emplace_back(FinalAnswer{std::move(content)});
        }
    }
    return trace;
}

std::string serialize_trace(const Trace& trace)
{
    std::vector<std::string> blocks;
    if (!trace.query.empty())
        blocks.push_back(block("query", trace.query));
    for (const auto& step : trace.steps) {
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Reasoning>) {
                    blocks.push_back(block("reasoning", s.text));
                } else if constexpr (std::is_same_v<T, ToolCall>) {
                    if (!s.raw.empty()) {
                        blocks.push_back(block("tool_call", s.raw));
                    } else {
                        json body = json::object();
                        body["name"] = s.name;
                        body["parameters"] = s.args ? *s.args : json::object();
                        blocks.push_back(block("tool_call", dump_compact(body)));
                    }
                } else if constexpr (std::is_same_v<T, ToolResponse>) {
                    blocks.push_back(block("tool_response", s.content));
                } else {
                    blocks.push_back(block("answer", s.raw));
                }
            },
            step);
    }
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i)
            out += "\n\n";
        out += blocks[i];
    }
    if (!out.empty())
        out += '\n';
    return out;
}

TraceStats compute_stats(const Trace& trace)
{
    TraceStats stats;
    std::set<std::string> seen;
    for (const auto& step : trace.steps) {
        if (std::holds_alternative<FinalAnswer>(step)) {
            stats.has_final_answer = true;
            continue;
        }
        const auto* call = std::get_if<ToolCall>(&step);
        if (!call)
            continue;
        ++stats.n_tool_calls;
        if (call->malformed()) {
            ++stats.n_malformed;
            continue;
        }
        auto key = call->name;
        key.push_back('\x1f');
        key += canonical_json(*call->args);
        if (!seen.insert(std::move(key)).second)
            ++stats.n_loops;
    }
    return stats;
}

std::vector<std::size_t> unknown_tool_calls(const Trace& trace)
{
    std::vector<std::size_t> out;
    if (trace.tools.empty())
        return out;
    std::set<std::string> names;
    for (const auto& tool : trace.tools)
        names.insert(tool.name);
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const auto* call = std::get_if<ToolCall>(&trace.steps[i]);
        if (call && !call->malformed() && !names.count(call->name))
            out.push_back(i);
    }
    return out;
}

std::vector<std::string> check_trace_invariants(const Trace& trace)
{
    std::vector<std::string> violations;
    const auto& steps = trace.steps;
    int answers = 0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& step = steps[i];
        if (std::holds_alternative<ToolCall>(step)) {
            if (i + 1 >= steps.size() || !std::holds_alternative<ToolResponse>(steps[i + 1]))
                violations.push_back("step " + std::to_string(i) + ": tool_call not followed by tool_response");
        } else if (std::holds_alternative<ToolResponse>(step)) {
            if (i == 0 || !std::holds_alternative<ToolCall>(steps[i - 1]))
                violations.push_back("step " + std::to_string(i) + ": tool_response without tool_call");
        } else if (std::holds_alternative<FinalAnswer>(step)) {
            ++answers;
            if (i + 1 != steps.size())
                violations.push_back("step " + std::to_string(i) + ": answer is not the last step");
        }
    }
    if (answers > 1)
        violations.push_back("more than one answer step");
    for (auto i : unknown_tool_calls(trace)) {
        const auto* reply = i + 1 < steps.size() ? std::get_if<ToolResponse>(&steps[i + 1]) : nullptr;
        auto err = reply ? parse_structured_error(reply->content) : std::nullopt;
        if (!err || err->check != CheckKind::UnknownTool)
            violations.push_back("step " + std::to_string(i) + ": call to unknown tool '" +
                                 std::get<ToolCall>(steps[i]).name + "' is not flagged");
    }
    return violations;
}

json step_to_json(const TraceStep& step)
{
    json out = json::object();
    out["kind"] = tag_of(step);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Reasoning>) {
                out["text"] = s.text;
            } else if constexpr (std::is_same_v<T, ToolCall>) {
                out["name"] = s.name;
                out["parameters"] = s.args ? *s.args : json(nullptr);
                out["raw"] = s.raw;
            } else if constexpr (std::is_same_v<T, ToolResponse>) {
                out["content"] = s.content;
                out["valid"] = s.valid;
            } else {
                out["raw"] = s.raw;
            }
        },
        step);
    return out;
}

TraceStep step_from_json(const json& value)
{
    if (!value.is_object() || !value.contains("kind"))
        throw Error(Errc::MalformedJson, "trace step lacks \"kind\"");
    auto kind = value["kind"].get<std::string>();
    if (kind == "reasoning")
        return Reasoning{value.value("text", std::string())};
    if (kind == "tool_call") {
        ToolCall call;
        call.name = value.value("name", std::string());
        call.raw = value.value("raw", std::string());
        if (auto p = value.find("parameters"); p != value.end() && p->is_object())
            call.args = *p;
        return call;
    }
    if (kind == "tool_response")
        return ToolResponse{value.value("content", std::string()), value.value("valid", true)};
    if (kind == "answer")
        return FinalAnswer{value.value("raw", std::string())};
    throw Error(Errc::MalformedJson, "unknown trace step kind \"" + kind + "\"");
}

json trace_to_json(const Trace& trace)
{
    json out = json::object();
    out["query"] = trace.query;
    json tools = json::array();
    for (const auto& tool : trace.tools)
        tools.push_back(tool_to_json(tool));
    out["tools"] = std::move(tools);
    json steps = json::array();
    for (const auto& step : trace.steps)
        steps.push_back(step_to_json(step));
    out["steps"] = std::move(steps);

    const auto& m = trace.metadata;
    json meta = json::object();
    meta["query_id"] = m.query_id;
    meta["rollout"] = m.rollout;
    meta["gold"] = m.gold ? json(*m.gold) : json(nullptr);
    meta["backend"] = m.backend;
    meta["started_at"] = m.started_at;
    meta["finished_at"] = m.finished_at;
    meta["step_cap"] = m.step_cap;
    meta["budget_exhausted"] = m.budget_exhausted;
    meta["retries_exhausted"] = m.retries_exhausted;
    out["metadata"] = std::move(meta);
    return out;
}

Trace trace_from_json(const json& value)
{
    if (!value.is_object())
        throw Error(Errc::MalformedJson, "trace row must be an object");
    Trace trace;
    trace.query = value.value("query", std::string());
    if (auto tools = value.find("tools"); tools != value.end() && tools->is_array()) {
        for (const auto& t : *tools)
            trace.tools.push_back(tool_from_json(t));
    }
    if (auto steps = value.find("steps"); steps != value.end() && steps->is_array()) {
        for (const auto& s : *steps)
            trace.steps.push_back(step_from_json(s));
    }
    if (auto meta = value.find("metadata"); meta != value.end() && meta->is_object()) {
        auto& m = trace.metadata;
        m.query_id = meta->value("query_id", std::string());
        m.rollout = meta->value("rollout", 0);
        if (auto g = meta->find("gold"); g != meta->end() && g->is_string())
            m.gold = g->get<std::string>();
        m.backend = meta->value("backend", std::string());
        m.started_at = meta->value("started_at", std::string());
        m.finished_at = meta->value("finished_at", std::string());
        m.step_cap = meta->value("step_cap", 0);
        m.budget_exhausted = meta->value("budget_exhausted", false);
        m.retries_exhausted = meta->value("retries_exhausted", false);
    }
    return trace;
}

std::string trace_id(const Trace& trace)
{
    return trace.metadata.query_id + "#" + std::to_string(trace.metadata.rollout);
}

} // namespace mtr
