// SPDX-License-Identifier: Apache-2.0
// Random inputs for property tests, plus reference implementations that are
// written straight from the definitions and share no code with the library.
#pragma once

#include <cmath>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "mtr/schema.hpp"
#include "mtr/trace.hpp"

namespace gen {

using mtr::json;

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
    bool chance(double p) { return std::bernoulli_distribution(p)(engine); }

    template <class T>
    const T& pick(const std::vector<T>& items) { return items[static_cast<std::size_t>(uniform(0, int(items.size()) - 1))]; }
};

inline const std::vector<std::string> kWords{"alpha", "beta", "gamma", "delta", "city", "year", "limit",
                                              "name",  "tags", "query", "mode",  "page",  "x1",   "y_2"};

// ---------------------------------------------------------------------------
// schemas and arguments

inline json random_schema(Rng& rng, int depth, bool force_object = false)
{
    static const std::vector<std::string> leaf_kinds{"string", "integer", "number", "boolean"};
    std::string kind;
    if (force_object)
        kind = "object";
    else if (depth >= 3 || rng.chance(0.55))
        kind = rng.pick(leaf_kinds);
    else
        kind = rng.chance(0.5) ? "object" : "array";

    json node = json::object();
    node["type"] = kind;
    if (rng.chance(0.3))
        node["description"] = "field " + rng.pick(kWords);

    if (kind == "object") {
        json props = json::object();
        int n = rng.uniform(0, 4);
        std::vector<std::string> names;
        for (int i = 0; i < n; ++i) {
            auto name = rng.pick(kWords);
            if (props.contains(name))
                continue;
            props[name] = random_schema(rng, depth + 1);
            names.push_back(name);
        }
        node["properties"] = props;
        json required = json::array();
        for (const auto& name : names) {
            if (rng.chance(0.5))
                required.push_back(name);
        }
        if (!required.empty() || rng.chance(0.3))
            node["required"] = required;
    } else if (kind == "array") {
        node["items"] = random_schema(rng, depth + 1);
    } else if (kind == "string") {
        if (rng.chance(0.25)) {
            node["enum"] = json::array({"low", "mid", "high"});
        } else if (rng.chance(0.25)) {
            node["pattern"] = rng.chance(0.5) ? "^[a-z]+$" : "[0-9]";
        }
    } else if (kind == "integer" || kind == "number") {
        if (rng.chance(0.2))
            node["enum"] = json::array({1, 2, 3});
        if (rng.chance(0.35))
            node["minimum"] = rng.uniform(-5, 3);
        if (rng.chance(0.35))
            node["maximum"] = rng.uniform(4, 12);
    }
    return node;
}

inline json random_scalar(Rng& rng)
{
    switch (rng.uniform(0, 7)) {
    case 0: return rng.pick(std::vector<std::string>{"low", "mid", "high", "abc", "a1", "", "Zed"});
    case 1: return rng.uniform(-8, 15);
    case 2: return rng.real(-8.0, 15.0);
    case 3: return static_cast<double>(rng.uniform(0, 4));  // integral float
    case 4: return rng.chance(0.5);
    case 5: return nullptr;
    case 6: return json::array();
    default: return json::object();
    }
}

// Mostly conforming values with occasional corruption, so both outcomes are common.
inline json random_value(Rng& rng, const json& schema, double corrupt = 0.12)
{
    if (rng.chance(corrupt))
        return random_scalar(rng);
    const auto kind = schema["type"].get<std::string>();
    if (kind == "object") {
        json out = json::object();
        for (const auto& [name, sub] : schema["properties"].items()) {
            bool required = false;
            if (schema.contains("required")) {
                for (const auto& r : schema["required"])
                    required |= r == name;
            }
            if (required ? !rng.chance(0.08) : rng.chance(0.6))
                out[name] = random_value(rng, sub, corrupt);
        }
        if (rng.chance(0.15))
            out["extra_" + rng.pick(kWords)] = random_scalar(rng);
        return out;
    }
    if (kind == "array") {
        json out = json::array();
        int n = rng.uniform(0, 3);
        for (int i = 0; i < n; ++i)
            out.push_back(random_value(rng, schema["items"], corrupt));
        return out;
    }
    if (schema.contains("enum") && rng.chance(0.8))
        return rng.pick(std::vector<json>(schema["enum"].begin(), schema["enum"].end()));
    if (kind == "string")
        return rng.pick(std::vector<std::string>{"low", "mid", "abc", "x9", "hello world", "", "Q"});
    if (kind == "integer")
        return rng.uniform(-6, 14);
    if (kind == "number")
        return rng.chance(0.5) ? json(rng.real(-6.0, 14.0)) : json(rng.uniform(-6, 14));
    return rng.chance(0.5);
}

// Reference conformance check, read directly off the schema JSON.
inline bool conforms(const json& schema, const json& value)
{
    const auto kind = schema["type"].get<std::string>();
    bool kind_ok = false;
    if (kind == "object")
        kind_ok = value.is_object();
    else if (kind == "array")
        kind_ok = value.is_array();
    else if (kind == "string")
        kind_ok = value.is_string();
    else if (kind == "boolean")
        kind_ok = value.is_boolean();
    else if (kind == "number")
        kind_ok = value.is_number();
    else if (kind == "integer")
        kind_ok = value.is_number_integer() ||
                  (value.is_number_float() && std::floor(value.get<double>()) == value.get<double>());
    if (!kind_ok)
        return false;

    if (kind == "object") {
        if (schema.contains("required")) {
            for (const auto& r : schema["required"]) {
                if (!value.contains(r.get<std::string>()))
                    return false;
            }
        }
        for (const auto& [name, sub] : schema["properties"].items()) {
            if (value.contains(name) && !conforms(sub, value[name]))
                return false;
        }
        return true;
    }
    if (kind == "array") {
        for (const auto& element : value) {
            if (!conforms(schema["items"], element))
                return false;
        }
        return true;
    }
    if (schema.contains("enum")) {
        bool member = false;
        for (const auto& option : schema["enum"]) {
            if (value.is_number() && option.is_number())
                member |= value.get<double>() == option.get<double>();
            else
                member |= value == option;
        }
        if (!member)
            return false;
    }
    if (schema.contains("pattern") &&
        !std::regex_search(value.get<std::string>(), std::regex(schema["pattern"].get<std::string>())))
        return false;
    if (schema.contains("minimum") && value.get<double>() < schema["minimum"].get<double>())
        return false;
    if (schema.contains("maximum") && value.get<double>() > schema["maximum"].get<double>())
        return false;
    return true;
}

// ---------------------------------------------------------------------------
// traces

inline std::vector<mtr::ToolInterface> sample_tools()
{
    return mtr::parse_tool_set(R"([
      {"type": "function", "function": {"name": "city_lookup", "description": "Look up a city",
        "parameters": {"type": "object", "properties": {"city": {"type": "string"}, "year": {"type": "integer"}},
                       "required": ["city"]}}},
      {"type": "function", "function": {"name": "rank_query", "description": "Rankings",
        "parameters": {"type": "object", "properties": {"limit": {"type": "integer"}}}}}
    ])");
}

inline std::string random_text(Rng& rng, int max_words = 8)
{
    std::string out;
    int n = rng.uniform(1, max_words);
    for (int i = 0; i < n; ++i) {
        if (i)
            out += rng.chance(0.15) ? "\n" : " ";
        out += rng.pick(std::vector<std::string>{"find", "the", "city", "Paris", "2010", "rank", "{x}", "ok.",
                                                 "result:", "a&b", "\"quoted\"", "##", "- item"});
    }
    return out;
}

inline json random_args(Rng& rng)
{
    json args = json::object();
    int n = rng.uniform(0, 3);
    for (int i = 0; i < n; ++i) {
        auto key = rng.pick(kWords);
        switch (rng.uniform(0, 3)) {
        case 0: args[key] = rng.pick(std::vector<std::string>{"Paris", "Gambier", "all", "x y"}); break;
        case 1: args[key] = rng.uniform(0, 3); break;
        case 2: args[key] = rng.chance(0.5); break;
        default: args[key] = json::array({rng.uniform(0, 2), "t"}); break;
        }
    }
    return args;
}

// A trace the orchestrator could emit: reasoning/call/response groups and an
// optional final answer.
inline mtr::Trace random_trace(Rng& rng)
{
    static const std::vector<std::string> names{"city_lookup", "rank_query", "answer_summarizer", "ghost_tool"};
    mtr::Trace trace;
    trace.query = "Q: " + random_text(rng, 6);
    trace.tools = sample_tools();
    int groups = rng.uniform(0, 6);
    for (int g = 0; g < groups; ++g) {
        if (rng.chance(0.6))
            trace.steps.push_back(mtr::Reasoning{random_text(rng)});
        if (rng.chance(0.08)) {
            mtr::ToolCall bad;
            bad.raw = "{\"name\": \"city_lookup\", \"parameters\": [1, 2";
            bad.name = "";
            trace.steps.push_back(bad);
        } else {
            trace.steps.push_back(mtr::make_tool_call(rng.pick(names), random_args(rng)));
        }
        if (rng.chance(0.2)) {
            mtr::StructuredError err{"city_lookup", mtr::CheckKind::RequiredPresent, "city", "missing city"};
            trace.steps.push_back(mtr::ToolResponse{err.dump(), false});
        } else {
            trace.steps.push_back(mtr::ToolResponse{random_text(rng, 12), true});
        }
    }
    if (rng.chance(0.7))
        trace.steps.push_back(mtr::FinalAnswer{random_text(rng, 3)});
    trace.metadata.query_id = "q" + std::to_string(rng.uniform(0, 99));
    trace.metadata.rollout = rng.uniform(0, 7);
    if (rng.chance(0.5))
        trace.metadata.gold = "Paris";
    trace.metadata.backend = "scripted";
    trace.metadata.step_cap = 16;
    return trace;
}

// Loops counted by comparing every call against every earlier one.
inline int count_loops_all_pairs(const mtr::Trace& trace)
{
    std::vector<const mtr::ToolCall*> calls;
    for (const auto& step : trace.steps) {
        if (auto* c = std::get_if<mtr::ToolCall>(&step); c && c->args)
            calls.push_back(c);
    }
    int loops = 0;
    for (std::size_t j = 0; j < calls.size(); ++j) {
        for (std::size_t i = 0; i < j; ++i) {
            if (calls[i]->name == calls[j]->name &&
                nlohmann::json::parse(calls[i]->args->dump()) == nlohmann::json::parse(calls[j]->args->dump())) {
                ++loops;
                break;
            }
        }
    }
    return loops;
}

} // namespace gen
