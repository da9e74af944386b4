// SPDX-License-Identifier: Apache-2.0
#include "mtr/config.hpp"

#include <cstdlib>
#include <set>

#include "mtr/error.hpp"

namespace mtr {

namespace {

class Section {
public:
    Section(const json& root, std::string name) : name_(std::move(name))
    {
        auto it = root.find(name_);
        if (it == root.end())
            return;
        if (!it->is_object())
            throw Error(Errc::Config, "section \"" + name_ + "\" must be an object");
        value_ = &*it;
    }

    template <class T>
    void read(const char* key, T& out)
    {
        seen_.insert(key);
        if (!value_)
            return;
        auto it = value_->find(key);
        if (it == value_->end())
            return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw Error(Errc::Config, name_ + "." + key + " has the wrong type");
        }
    }

    void finish() const
    {
        if (!value_)
            return;
        for (auto it = value_->begin(); it != value_->end(); ++it) {
            if (!seen_.count(it.key()))
                throw Error(Errc::Config, "unknown key " + name_ + "." + it.key());
        }
    }

private:
    std::string name_;
    const json* value_ = nullptr;
    std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value)
{
    if (value.empty())
        return {};
    std::filesystem::path p(value);
    return p.is_absolute() || base.empty() ? p : base / p;
}

} // namespace

void PipelineConfig::validate(bool with_backend) const
{
    if (with_backend)
        backend.validate();
    orchestrator.validate();
    check_filter_criteria(filter);
    if (reward.loop_penalty < 0.0)
        throw Error(Errc::Config, "reward.loop_penalty must be >= 0");
    if (reward.kl_beta < 0.0)
        throw Error(Errc::Config, "reward.kl_beta must be >= 0");
}

PipelineConfig config_from_json(const json& value, const std::filesystem::path& base_dir)
{
    if (!value.is_object())
        throw Error(Errc::Config, "config must be a JSON object");
    static const std::set<std::string> sections{"backend", "orchestrator", "reward", "filter", "paths"};
    for (auto it = value.begin(); it != value.end(); ++it) {
        if (!sections.count(it.key()))
            throw Error(Errc::Config, "unknown section \"" + it.key() + "\"");
    }

    PipelineConfig config;

    Section backend(value, "backend");
    std::string kind = "scripted";
    std::string script;
    backend.read("kind", kind);
    backend.read("endpoint", config.backend.endpoint);
    backend.read("model", config.backend.model);
    backend.read("temperature", config.backend.temperature);
    backend.read("max_tokens", config.backend.max_tokens);
    backend.read("timeout_seconds", config.backend.timeout_seconds);
    backend.read("max_retries", config.backend.max_retries);
    backend.read("script", script);
    backend.finish();
    if (kind == "scripted")
        config.backend.kind = BackendKind::Scripted;
    else if (kind == "live")
        config.backend.kind = BackendKind::Live;
    else
        throw Error(Errc::Config, "backend.kind must be \"live\" or \"scripted\"");
    config.backend.script = resolve(base_dir, script);

    Section orch(value, "orchestrator");
    orch.read("max_steps", config.orchestrator.max_steps);
    orch.read("min_tools", config.orchestrator.min_tools);
    orch.read("max_tools", config.orchestrator.max_tools);
    orch.read("validation_retry_limit", config.orchestrator.validation_retry_limit);
    orch.read("rollouts", config.orchestrator.rollouts);
    orch.read("workers", config.orchestrator.workers);
    orch.finish();

    Section reward(value, "reward");
    reward.read("loop_penalty", config.reward.loop_penalty);
    reward.read("kl_beta", config.reward.kl_beta);
    reward.finish();

    Section filter(value, "filter");
    filter.read("min_tool_calls", config.filter.min_tool_calls);
    filter.read("max_tool_calls", config.filter.max_tool_calls);
    filter.read("require_no_validation_errors", config.filter.require_no_validation_errors);
    filter.finish();

    Section paths(value, "paths");
    std::string questions;
    std::string output_dir = config.paths.output_dir.string();
    paths.read("questions", questions);
    paths.read("output_dir", output_dir);
    paths.finish();
    config.paths.questions = resolve(base_dir, questions);
    config.paths.output_dir = resolve(base_dir, output_dir);

    return config;
}

PipelineConfig load_config(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw Error(Errc::Config, e.what());
    }
    auto parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded())
        throw Error(Errc::Config, path.string() + " is not valid JSON");
    auto config = config_from_json(parsed, path.parent_path());
    apply_environment(config);
    return config;
}

void apply_environment(PipelineConfig& config)
{
    if (const char* key = std::getenv("MTR_API_KEY"); key && *key)
        config.backend.api_key = key;
    if (const char* endpoint = std::getenv("MTR_ENDPOINT"); endpoint && *endpoint)
        config.backend.endpoint = endpoint;
}

} // namespace mtr
