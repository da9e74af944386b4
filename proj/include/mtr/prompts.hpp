// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mtr/backend.hpp"

namespace mtr {

using PromptBindings = std::map<std::string, std::string, std::less<>>;

/// Substitutes {name} placeholders; "{{" and "}}" are literal braces.
/// Throws UnboundPlaceholder for any name missing from `bindings`.
std::string render_template(std::string_view text, const PromptBindings& bindings);

/// Placeholder names in order of first appearance.
std::vector<std::string> template_placeholders(std::string_view text);

struct RolePrompt {
    AgentRole role;
    std::string system_template;

    std::string render(const PromptBindings& bindings) const { return render_template(system_template, bindings); }
};

/// Placeholders: task_type, complexity, domain, toolmaker_guidance.
const RolePrompt& toolmaker_prompt();
/// Placeholders: tools.
const RolePrompt& autoagent_prompt();
/// No placeholders.
const RolePrompt& toolactor_prompt();

/// User turn for the ToolActor. Placeholders: tool_definition, arguments.
std::string_view toolactor_request_template();

struct TaskClassification {
    std::string task_type = "question_answering";
    std::string complexity = "medium";
    std::string domain = "general";
    std::string guidance;  // empty selects a default for task_type
};

std::string default_guidance(std::string_view task_type);

} // namespace mtr
