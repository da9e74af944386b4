// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtr/json_text.hpp"

namespace mtr {

enum class SchemaKind { Object, String, Integer, Number, Boolean, Array };

std::string_view kind_name(SchemaKind kind) noexcept;
std::optional<SchemaKind> kind_from_name(std::string_view name) noexcept;

/// Deep-copying owner for a recursive member. Compares by pointee.
template <class T>
class Indirect {
public:
    Indirect() = default;
    explicit Indirect(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
    Indirect(const Indirect& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
    Indirect(Indirect&&) noexcept = default;
    Indirect& operator=(const Indirect& other)
    {
        if (this != &other)
            ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
        return *this;
    }
    Indirect& operator=(Indirect&&) noexcept = default;

    explicit operator bool() const noexcept { return ptr_ != nullptr; }
    const T& operator*() const { return *ptr_; }
    const T* operator->() const { return ptr_.get(); }
    T& operator*() { return *ptr_; }
    T* operator->() { return ptr_.get(); }

    friend bool operator==(const Indirect& a, const Indirect& b)
    {
        if (!a.ptr_ || !b.ptr_)
            return !a.ptr_ && !b.ptr_;
        return *a.ptr_ == *b.ptr_;
    }

private:
    std::unique_ptr<T> ptr_;
};

struct SchemaProperty;

/// The JSON Schema subset tools are described with. Keywords outside the
/// subset are kept in `extra` and re-emitted, but never validated.
struct SchemaNode {
    SchemaKind kind = SchemaKind::Object;
    std::string description;
    std::vector<SchemaProperty> properties;  // declaration order
    std::vector<std::string> required;
    Indirect<SchemaNode> items;
    std::optional<std::vector<json>> enum_values;
    std::optional<std::string> pattern;
    std::optional<double> minimum;
    std::optional<double> maximum;
    json extra = json::object();

    const SchemaNode* property(std::string_view name) const;

    friend bool operator==(const SchemaNode&, const SchemaNode&);
};

struct SchemaProperty {
    std::string name;
    SchemaNode schema;

    friend bool operator==(const SchemaProperty&, const SchemaProperty&) = default;
};

inline constexpr int kMaxSchemaDepth = 8;

/// Throws Error(InvalidSchema) when the node violates the subset's invariants.
SchemaNode parse_schema(const json& value);
json schema_to_json(const SchemaNode& node);

enum class CheckKind {
    RequiredPresent,
    TypeMatch,
    EnumMembership,
    RegexMatch,
    Range,
    // Raised by the orchestrator, never derived from a schema.
    UnknownTool,
    MalformedCall,
};

std::string_view check_name(CheckKind kind) noexcept;
std::optional<CheckKind> check_from_name(std::string_view name) noexcept;

/// A schema path uses property names as segments and "[]" for array items,
/// e.g. {"filters", "[]", "field"}.
using SchemaPath = std::vector<std::string>;

std::string schema_path_string(const SchemaPath& path);

struct ValidationCheck {
    CheckKind kind;
    SchemaPath target;

    friend bool operator==(const ValidationCheck&, const ValidationCheck&) = default;
};

/// All checks implied by `schema`, grouped by kind in evaluation order
/// (required, type, enum, regex, range), each group in pre-order.
std::vector<ValidationCheck> derive_checks(const SchemaNode& schema);

/// Resolves a schema path to the node it names, or nullptr.
const SchemaNode* resolve_schema_path(const SchemaNode& root, const SchemaPath& path);

struct ToolInterface {
    std::string name;
    std::string description;
    SchemaNode input;
    std::optional<SchemaNode> output;
    std::vector<ValidationCheck> checks;

    friend bool operator==(const ToolInterface&, const ToolInterface&) = default;
};

bool is_valid_tool_name(std::string_view name);

/// Builds the tool and its derived checks. Throws on an invalid name or a
/// non-object input schema.
ToolInterface make_tool(std::string name, std::string description, SchemaNode input,
                        std::optional<SchemaNode> output = std::nullopt);

struct StructuredError {
    std::string tool;
    CheckKind check = CheckKind::TypeMatch;
    std::string path;  // dot path into the validated value; "" is the root
    std::string message;

    json to_json() const;
    std::string dump() const;

    friend bool operator==(const StructuredError&, const StructuredError&) = default;
};

/// Recognises a serialized StructuredError (exactly the four wire keys).
std::optional<StructuredError> parse_structured_error(std::string_view text);

class ValidationOutcome {
public:
    ValidationOutcome() = default;
    ValidationOutcome(StructuredError error) : error_(std::move(error)) {}

    bool valid() const noexcept { return !error_; }
    explicit operator bool() const noexcept { return valid(); }
    const StructuredError& error() const { return *error_; }

    friend bool operator==(const ValidationOutcome&, const ValidationOutcome&) = default;

private:
    std::optional<StructuredError> error_;
};

/// The validation predicate over a tool's input schema.
ValidationOutcome validate_args(const ToolInterface& tool, const json& args);

/// Same semantics against S_out; always valid when the tool declares none.
ValidationOutcome validate_output(const ToolInterface& tool, const json& observation);

/// Parses ToolMaker output: a JSON array of {"type":"function","function":{...}}.
std::vector<ToolInterface> parse_tool_set(std::string_view text);

json tool_to_json(const ToolInterface& tool);
ToolInterface tool_from_json(const json& element);
std::string serialize_tool_set(const std::vector<ToolInterface>& tools);

/// The pre-defined summarizer every AutoAgent tool set carries.
ToolInterface answer_summarizer_tool();
inline constexpr std::string_view kAnswerSummarizer = "answer_summarizer";

} // namespace mtr
