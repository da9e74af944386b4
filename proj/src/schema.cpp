// SPDX-License-Identifier: Apache-2.0
#include "mtr/schema.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include "mtr/error.hpp"

namespace mtr {

std::string_view kind_name(SchemaKind kind) noexcept
{
    switch (kind) {
    case SchemaKind::Object: return "object";
    case SchemaKind::String: return "string";
    case SchemaKind::Integer: return "integer";
    case SchemaKind::Number: return "number";
    case SchemaKind::Boolean: return "boolean";
    case SchemaKind::Array: return "array";
    }
    return "object";
}

std::optional<SchemaKind> kind_from_name(std::string_view name) noexcept
{
    for (auto kind : {SchemaKind::Object, SchemaKind::String, SchemaKind::Integer, SchemaKind::Number,
                      SchemaKind::Boolean, SchemaKind::Array}) {
        if (kind_name(kind) == name)
            return kind;
    }
    return std::nullopt;
}

std::string_view check_name(CheckKind kind) noexcept
{
    switch (kind) {
    case CheckKind::RequiredPresent: return "required-present";
    case CheckKind::TypeMatch: return "type-match";
    case CheckKind::EnumMembership: return "enum-membership";
    case CheckKind::RegexMatch: return "regex-match";
    case CheckKind::Range: return "range";
    case CheckKind::UnknownTool: return "unknown-tool";
    case CheckKind::MalformedCall: return "malformed-call";
    }
    return "type-match";
}

std::optional<CheckKind> check_from_name(std::string_view name) noexcept
{
    for (auto kind : {CheckKind::RequiredPresent, CheckKind::TypeMatch, CheckKind::EnumMembership,
                      CheckKind::RegexMatch, CheckKind::Range, CheckKind::UnknownTool,
                      CheckKind::MalformedCall}) {
        if (check_name(kind) == name)
            return kind;
    }
    return std::nullopt;
}

const SchemaNode* SchemaNode::property(std::string_view name) const
{
    for (const auto& prop : properties) {
        if (prop.name == name)
            return &prop.schema;
    }
    return nullptr;
}

bool operator==(const SchemaNode& a, const SchemaNode& b)
{
    return a.kind == b.kind && a.description == b.description && a.properties == b.properties &&
           a.required == b.required && a.items == b.items && a.enum_values == b.enum_values &&
           a.pattern == b.pattern && a.minimum == b.minimum && a.maximum == b.maximum &&
           a.extra == b.extra;
}

namespace {

bool value_matches_kind(SchemaKind kind, const json& value)
{
    switch (kind) {
    case SchemaKind::Object: return value.is_object();
    case SchemaKind::String: return value.is_string();
    case SchemaKind::Integer:
        if (value.is_number_integer())
            return true;
        if (value.is_number_float()) {
            double d = value.get<double>();
            return std::isfinite(d) && std::trunc(d) == d;
        }
        return false;
    case SchemaKind::Number: return value.is_number();
    case SchemaKind::Boolean: return value.is_boolean();
    case SchemaKind::Array: return value.is_array();
    }
    return false;
}

std::string describe_type(const json& value)
{
    if (value.is_number_integer())
        return "integer";
    if (value.is_number_float())
        return "number";
    return value.type_name();
}

[[noreturn]] void invalid_schema(const std::string& where, const std::string& what)
{
    throw Error(Errc::InvalidSchema, (where.empty() ? std::string("<root>") : where) + ": " + what);
}

bool is_numeric_kind(SchemaKind kind)
{
    return kind == SchemaKind::Integer || kind == SchemaKind::Number;
}

SchemaNode parse_schema_at(const json& value, int depth, const std::string& where)
{
    if (depth > kMaxSchemaDepth)
        invalid_schema(where, "nesting deeper than " + std::to_string(kMaxSchemaDepth));
    if (!value.is_object())
        invalid_schema(where, "schema must be an object");
    auto type_it = value.find("type");
    if (type_it == value.end() || !type_it->is_string())
        invalid_schema(where, "missing or non-string \"type\"");
    auto kind = kind_from_name(type_it->get<std::string>());
    if (!kind)
        invalid_schema(where, "unsupported type \"" + type_it->get<std::string>() + "\"");

    SchemaNode node;
    node.kind = *kind;
    auto child_where = [&](const std::string& seg) { return where.empty() ? seg : where + "." + seg; };

    for (auto it = value.begin(); it != value.end(); ++it) {
        const auto& key = it.key();
        const auto& v = it.value();
        if (key == "type") {
            continue;
        } else if (key == "description") {
            if (!v.is_string())
                invalid_schema(where, "description must be a string");
            node.description = v.get<std::string>();
        } else if (key == "properties") {
            if (node.kind != SchemaKind::Object || !v.is_object())
                invalid_schema(where, "\"properties\" requires an object schema and an object value");
            for (auto p = v.begin(); p != v.end(); ++p)
                node.properties.push_back({p.key(), parse_schema_at(p.value(), depth + 1, child_where(p.key()))});
        } else if (key == "required") {
            if (node.kind != SchemaKind::Object || !v.is_array())
                invalid_schema(where, "\"required\" requires an object schema and an array value");
            for (const auto& name : v) {
                if (!name.is_string())
                    invalid_schema(where, "required entries must be strings");
                node.required.push_back(name.get<std::string>());
            }
        } else if (key == "items") {
            if (node.kind != SchemaKind::Array)
                invalid_schema(where, "\"items\" only allowed on array schemas");
            node.items = Indirect<SchemaNode>(parse_schema_at(v, depth + 1, child_where("[]")));
        } else if (key == "enum") {
            if (!v.is_array())
                invalid_schema(where, "\"enum\" must be an array");
            std::vector<json> literals;
            for (const auto& lit : v) {
                if (!value_matches_kind(node.kind, lit))
                    invalid_schema(where, "enum literal " + dump_compact(lit) + " is not a " +
                                              std::string(kind_name(node.kind)));
                literals.push_back(lit);
            }
            node.enum_values = std::move(literals);
        } else if (key == "pattern") {
            if (node.kind != SchemaKind::String || !v.is_string())
                invalid_schema(where, "\"pattern\" requires a string schema and a string value");
            try {
                std::regex compiled(v.get<std::string>(), std::regex::ECMAScript);
            } catch (const std::regex_error&) {
                invalid_schema(where, "pattern does not compile");
            }
            node.pattern = v.get<std::string>();
        } else if (key == "minimum" || key == "maximum") {
            if (!is_numeric_kind(node.kind) || !v.is_number())
                invalid_schema(where, "\"" + key + "\" requires a numeric schema and a number value");
            (key == "minimum" ? node.minimum : node.maximum) = v.get<double>();
        } else {
            node.extra[key] = v;
        }
    }

    for (const auto& name : node.required) {
        if (!node.property(name))
            invalid_schema(where, "required property \"" + name + "\" is not declared");
    }
    return node;
}

json number_to_json(double d)
{
    if (std::trunc(d) == d && std::fabs(d) < 9.0e15)
        return json(static_cast<long long>(d));
    return json(d);
}

} // namespace

SchemaNode parse_schema(const json& value)
{
    return parse_schema_at(value, 1, "");
}

json schema_to_json(const SchemaNode& node)
{
    json out = json::object();
    out["type"] = kind_name(node.kind);
    if (!node.description.empty())
        out["description"] = node.description;
    if (node.kind == SchemaKind::Object) {
        json props = json::object();
        for (const auto& prop : node.properties)
            props[prop.name] = schema_to_json(prop.schema);
        out["properties"] = std::move(props);
        if (!node.required.empty())
            out["required"] = node.required;
    }
    if (node.items)
        out["items"] = schema_to_json(*node.items);
    if (node.enum_values)
        out["enum"] = *node.enum_values;
    if (node.pattern)
        out["pattern"] = *node.pattern;
    if (node.minimum)
        out["minimum"] = number_to_json(*node.minimum);
    if (node.maximum)
        out["maximum"] = number_to_json(*node.maximum);
    for (auto it = node.extra.begin(); it != node.extra.end(); ++it)
        out[it.key()] = it.value();
    return out;
}

std::string schema_path_string(const SchemaPath& path)
{
    std::string out;
    for (const auto& seg : path) {
        if (seg == "[]") {
            out += "[]";
            continue;
        }
        if (!out.empty())
            out.push_back('.');
        out += seg;
    }
    return out;
}

namespace {

void collect_checks(const SchemaNode& node, SchemaPath& here, CheckKind kind, std::vector<ValidationCheck>& out)
{
    auto visit_child = [&](const std::string& seg, const SchemaNode& child) {
        here.push_back(seg);
        switch (kind) {
        case CheckKind::TypeMatch: out.push_back({kind, here}); break;
        case CheckKind::EnumMembership:
            if (child.enum_values)
                out.push_back({kind, here});
            break;
        case CheckKind::RegexMatch:
            if (child.pattern)
                out.push_back({kind, here});
            break;
        case CheckKind::Range:
            if (child.minimum || child.maximum)
                out.push_back({kind, here});
            break;
        default: break;
        }
        collect_checks(child, here, kind, out);
        here.pop_back();
    };

    if (kind == CheckKind::RequiredPresent) {
        for (const auto& name : node.required) {
            here.push_back(name);
            out.push_back({kind, here});
            here.pop_back();
        }
    }
    for (const auto& prop : node.properties)
        visit_child(prop.name, prop.schema);
    if (node.items)
        visit_child("[]", *node.items);
}

} // namespace

std::vector<ValidationCheck> derive_checks(const SchemaNode& schema)
{
    std::vector<ValidationCheck> checks;
    SchemaPath here;
    for (auto kind : {CheckKind::RequiredPresent, CheckKind::TypeMatch, CheckKind::EnumMembership,
                      CheckKind::RegexMatch, CheckKind::Range})
        collect_checks(schema, here, kind, checks);
    return checks;
}

const SchemaNode* resolve_schema_path(const SchemaNode& root, const SchemaPath& path)
{
    const SchemaNode* node = &root;
    for (const auto& seg : path) {
        if (seg == "[]") {
            if (!node->items)
                return nullptr;
            node = &*node->items;
        } else {
            node = node->property(seg);
            if (!node)
                return nullptr;
        }
    }
    return node;
}

bool is_valid_tool_name(std::string_view name)
{
    return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

ToolInterface make_tool(std::string name, std::string description, SchemaNode input,
                        std::optional<SchemaNode> output)
{
    if (!is_valid_tool_name(name))
        throw Error(Errc::InvalidToolName, "\"" + name + "\" does not match [a-z0-9_]+");
    if (input.kind != SchemaKind::Object)
        throw Error(Errc::InvalidSchema, name + ": parameters must be an object schema");
    ToolInterface tool;
    tool.name = std::move(name);
    tool.description = std::move(description);
    tool.checks = derive_checks(input);
    tool.input = std::move(input);
    tool.output = std::move(output);
    return tool;
}

json StructuredError::to_json() const
{
    json out = json::object();
    out["error"] = message;
    out["tool"] = tool;
    out["path"] = path;
    out["check"] = check_name(check);
    return out;
}

std::string StructuredError::dump() const
{
    return dump_compact(to_json());
}

std::optional<StructuredError> parse_structured_error(std::string_view text)
{
    auto value = json::parse(text.begin(), text.end(), nullptr, false);
    if (value.is_discarded() || !value.is_object() || value.size() != 4)
        return std::nullopt;
    for (const char* key : {"error", "tool", "path", "check"}) {
        auto it = value.find(key);
        if (it == value.end() || !it->is_string())
            return std::nullopt;
    }
    auto check = check_from_name(value["check"].get<std::string>());
    if (!check)
        return std::nullopt;
    return StructuredError{value["tool"].get<std::string>(), *check, value["path"].get<std::string>(),
                           value["error"].get<std::string>()};
}

namespace {

struct Instance {
    const json* value;
    std::string path;
};

std::string join_path(const std::string& base, const std::string& seg)
{
    return base.empty() ? seg : base + "." + seg;
}

std::vector<Instance> resolve_instances(const json& root, const SchemaPath& path, std::size_t prefix_len)
{
    std::vector<Instance> current{{&root, ""}};
    for (std::size_t i = 0; i < prefix_len; ++i) {
        const auto& seg = path[i];
        std::vector<Instance> next;
        for (const auto& inst : current) {
            if (seg == "[]") {
                if (!inst.value->is_array())
                    continue;
                for (std::size_t k = 0; k < inst.value->size(); ++k)
                    next.push_back({&(*inst.value)[k], join_path(inst.path, std::to_string(k))});
            } else {
                if (!inst.value->is_object())
                    continue;
                auto it = inst.value->find(seg);
                if (it != inst.value->end())
                    next.push_back({&*it, join_path(inst.path, seg)});
            }
        }
        current = std::move(next);
    }
    return current;
}

bool enum_contains(const std::vector<json>& literals, const json& value)
{
    auto needle = canonical_json(value);
    return std::any_of(literals.begin(), literals.end(),
                       [&](const json& lit) { return canonical_json(lit) == needle; });
}

std::string format_bound(double d)
{
    return dump_compact(number_to_json(d));
}

ValidationOutcome validate_against(const std::string& tool_name, const SchemaNode& schema,
                                   const std::vector<ValidationCheck>& checks, const json& value)
{
    auto fail = [&](CheckKind kind, std::string path, std::string message) {
        return ValidationOutcome(StructuredError{tool_name, kind, std::move(path), std::move(message)});
    };

    if (!value_matches_kind(schema.kind, value))
        return fail(CheckKind::TypeMatch, "",
                    "expected " + std::string(kind_name(schema.kind)) + ", got " + describe_type(value));

    for (const auto& check : checks) {
        const SchemaNode* node = resolve_schema_path(schema, check.target);
        if (!node)
            continue;
        if (check.kind == CheckKind::RequiredPresent) {
            const auto& name = check.target.back();
            for (const auto& parent : resolve_instances(value, check.target, check.target.size() - 1)) {
                if (parent.value->is_object() && !parent.value->contains(name))
                    return fail(check.kind, join_path(parent.path, name),
                                "missing required property '" + join_path(parent.path, name) + "'");
            }
            continue;
        }
        for (const auto& inst : resolve_instances(value, check.target, check.target.size())) {
            const json& v = *inst.value;
            switch (check.kind) {
            case CheckKind::TypeMatch:
                if (!value_matches_kind(node->kind, v))
                    return fail(check.kind, inst.path,
                                "expected " + std::string(kind_name(node->kind)) + " at '" + inst.path +
                                    "', got " + describe_type(v));
                break;
            case CheckKind::EnumMembership:
                if (!enum_contains(*node->enum_values, v))
                    return fail(check.kind, inst.path, "value at '" + inst.path + "' is not one of " +
                                                           dump_compact(json(*node->enum_values)));
                break;
            case CheckKind::RegexMatch:
                if (v.is_string() &&
                    !std::regex_search(v.get<std::string>(), std::regex(*node->pattern, std::regex::ECMAScript)))
                    return fail(check.kind, inst.path,
                                "value at '" + inst.path + "' does not match pattern " + *node->pattern);
                break;
            case CheckKind::Range:
                if (v.is_number()) {
                    double d = v.get<double>();
                    if ((node->minimum && d < *node->minimum) || (node->maximum && d > *node->maximum)) {
                        std::string lo = node->minimum ? format_bound(*node->minimum) : "-inf";
                        std::string hi = node->maximum ? format_bound(*node->maximum) : "inf";
                        return fail(check.kind, inst.path,
                                    "value at '" + inst.path + "' is outside [" + lo + ", " + hi + "]");
                    }
                }
                break;
            default: break;
            }
        }
    }
    return {};
}

} // namespace

ValidationOutcome validate_args(const ToolInterface& tool, const json& args)
{
    return validate_against(tool.name, tool.input, tool.checks, args);
}

ValidationOutcome validate_output(const ToolInterface& tool, const json& observation)
{
    if (!tool.output)
        return {};
    return validate_against(tool.name, *tool.output, derive_checks(*tool.output), observation);
}

ToolInterface tool_from_json(const json& element)
{
    if (!element.is_object() || element.value("type", json()) != "function")
        throw Error(Errc::MissingFunctionWrapper, "element lacks \"type\": \"function\"");
    auto fn = element.find("function");
    if (fn == element.end() || !fn->is_object())
        throw Error(Errc::MissingFunctionWrapper, "element lacks a \"function\" object");
    auto name = fn->find("name");
    if (name == fn->end() || !name->is_string())
        throw Error(Errc::MissingFunctionWrapper, "function object lacks a string \"name\"");

    std::string description;
    if (auto d = fn->find("description"); d != fn->end() && d->is_string())
        description = d->get<std::string>();

    SchemaNode input;
    if (auto p = fn->find("parameters"); p != fn->end())
        input = parse_schema(*p);

    std::optional<SchemaNode> output;
    if (auto o = fn->find("output_schema"); o != fn->end())
        output = parse_schema(*o);

    return make_tool(name->get<std::string>(), std::move(description), std::move(input), std::move(output));
}

json tool_to_json(const ToolInterface& tool)
{
    json fn = json::object();
    fn["name"] = tool.name;
    fn["description"] = tool.description;
    fn["parameters"] = schema_to_json(tool.input);
    if (tool.output)
        fn["output_schema"] = schema_to_json(*tool.output);
    json out = json::object();
    out["type"] = "function";
    out["function"] = std::move(fn);
    return out;
}

std::vector<ToolInterface> parse_tool_set(std::string_view text)
{
    auto parsed = parse_json_lenient(text);
    if (!parsed)
        throw Error(Errc::MalformedJson, "tool set is not valid JSON");
    if (parsed->is_object()) {
        if (parsed->contains("tools"))
            throw Error(Errc::WrappedObject, "tool set must be a bare JSON array, not {\"tools\": [...]}");
        throw Error(Errc::MalformedJson, "tool set must be a JSON array");
    }
    if (!parsed->is_array())
        throw Error(Errc::MalformedJson, "tool set must be a JSON array");

    std::vector<ToolInterface> tools;
    std::set<std::string> seen;
    for (const auto& element : *parsed) {
        auto tool = tool_from_json(element);
        if (!seen.insert(tool.name).second)
            throw Error(Errc::DuplicateToolName, tool.name);
        tools.push_back(std::move(tool));
    }
    return tools;
}

std::string serialize_tool_set(const std::vector<ToolInterface>& tools)
{
    json arr = json::array();
    for (const auto& tool : tools)
        arr.push_back(tool_to_json(tool));
    return arr.dump(2, ' ', false, json::error_handler_t::replace);
}

ToolInterface answer_summarizer_tool()
{
    auto text_param = [](std::string description) {
        SchemaNode node;
        node.kind = SchemaKind::String;
        node.description = std::move(description);
        return node;
    };
    SchemaNode params;
    params.kind = SchemaKind::Object;
    params.properties.push_back({"research_findings", text_param("Evidence gathered by earlier tool calls")});
    params.properties.push_back({"task_query", text_param("The original question")});
    params.properties.push_back({"final_answer", text_param("The concise final answer")});
    params.required = {"research_findings", "task_query", "final_answer"};
    return make_tool(std::string(kAnswerSummarizer),
                     "Summarizes research findings and formats the final answer for <answer> tags",
                     std::move(params));
}

} // namespace mtr
