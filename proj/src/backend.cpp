// SPDX-License-Identifier: Apache-2.0
#include "mtr/backend.hpp"

#include <chrono>
#include <deque>
#include <map>
#include <random>
#include <thread>

#include <httplib.h>

#include "mtr/error.hpp"

namespace mtr {

std::string_view role_name(AgentRole role) noexcept
{
    switch (role) {
    case AgentRole::ToolMaker: return "toolmaker";
    case AgentRole::AutoAgent: return "autoagent";
    case AgentRole::ToolActor: return "toolactor";
    }
    return "autoagent";
}

void ChatBackendConfig::validate() const
{
    if (temperature < 0.0)
        throw Error(Errc::Config, "backend.temperature must be >= 0");
    if (max_retries < 0)
        throw Error(Errc::Config, "backend.max_retries must be >= 0");
    if (max_tokens < 1)
        throw Error(Errc::Config, "backend.max_tokens must be >= 1");
    if (timeout_seconds <= 0.0)
        throw Error(Errc::Config, "backend.timeout_seconds must be > 0");
    if (kind == BackendKind::Live && endpoint.empty())
        throw Error(Errc::Config, "backend.endpoint is required for a live backend");
    if (kind == BackendKind::Scripted && script.empty())
        throw Error(Errc::Config, "backend.script is required for a scripted backend");
}

void ExchangeLog::record(Exchange exchange)
{
    std::lock_guard lock(mutex_);
    exchanges_.push_back(std::move(exchange));
}

std::vector<Exchange> ExchangeLog::snapshot() const
{
    std::lock_guard lock(mutex_);
    return exchanges_;
}

// ---------------------------------------------------------------------------
// Scripted

namespace {

class ScriptedSession : public ChatBackend {
public:
    ScriptedSession(SessionKey key, std::map<AgentRole, std::deque<json>> replies,
                    std::optional<std::string> forced_fault, std::shared_ptr<ExchangeLog> log)
        : key_(std::move(key)), replies_(std::move(replies)), forced_fault_(std::move(forced_fault)),
          log_(std::move(log))
    {
    }

    std::string complete(AgentRole role, std::span<const ChatMessage> messages) override
    {
        if (forced_fault_)
            raise(*forced_fault_, role);
        auto& queue = replies_[role];
        if (queue.empty())
            throw Error(Errc::BackendError,
                        "scripted " + std::string(role_name(role)) + " replies exhausted for " + describe());
        json entry = std::move(queue.front());
        queue.pop_front();
        if (entry.is_object()) {
            if (entry.value("timeout", false))
                raise("timeout", role);
            if (auto err = entry.find("error"); err != entry.end())
                raise(err->is_string() ? err->get<std::string>() : "error", role);
        }
        if (!entry.is_string())
            throw Error(Errc::BackendError, "scripted reply must be a string");
        auto reply = entry.get<std::string>();
        if (log_)
            log_->record({key_, role, {messages.begin(), messages.end()}, reply});
        return reply;
    }

    std::string id() const override { return "scripted"; }

private:
    [[noreturn]] void raise(const std::string& fault, AgentRole role) const
    {
        auto where = std::string(role_name(role)) + " in " + describe();
        if (fault == "timeout")
            throw Error(Errc::BackendTimeout, "scripted timeout for " + where);
        throw Error(Errc::BackendError, "scripted failure for " + where + ": " + fault);
    }

    std::string describe() const
    {
        return "query '" + key_.query_id + "' rollout " + std::to_string(key_.rollout);
    }

    SessionKey key_;
    std::map<AgentRole, std::deque<json>> replies_;
    std::optional<std::string> forced_fault_;
    std::shared_ptr<ExchangeLog> log_;
};

constexpr AgentRole kRoles[] = {AgentRole::ToolMaker, AgentRole::AutoAgent, AgentRole::ToolActor};

const json* role_list(const json& scope, AgentRole role)
{
    if (!scope.is_object())
        return nullptr;
    auto it = scope.find(std::string(role_name(role)));
    if (it == scope.end() || !it->is_array())
        return nullptr;
    return &*it;
}

} // namespace

ScriptedBackendFactory::ScriptedBackendFactory(json script, std::uint64_t seed, std::shared_ptr<ExchangeLog> log)
    : script_(std::move(script)), seed_(seed), log_(std::move(log))
{
    if (!script_.is_object())
        throw Error(Errc::Config, "scripted backend script must be a JSON object");
}

std::unique_ptr<ScriptedBackendFactory> ScriptedBackendFactory::from_file(const std::filesystem::path& path,
                                                                          std::uint64_t seed)
{
    auto parsed = json::parse(read_file(path), nullptr, false);
    if (parsed.is_discarded())
        throw Error(Errc::Config, "script " + path.string() + " is not valid JSON");
    return std::make_unique<ScriptedBackendFactory>(std::move(parsed), seed);
}

std::unique_ptr<ChatBackend> ScriptedBackendFactory::open(const SessionKey& key)
{
    const json* scope = &script_;
    if (auto queries = script_.find("queries"); queries != script_.end() && queries->contains(key.query_id))
        scope = &(*queries)[key.query_id];

    const json* variant = nullptr;
    if (auto variants = scope->find("variants"); variants != scope->end() && variants->is_array() &&
                                                 !variants->empty()) {
        std::size_t pick = 0;
        if (key.rollout >= 0) {
            if (seed_ == 0) {
                pick = static_cast<std::size_t>(key.rollout) % variants->size();
            } else {
                std::seed_seq seq{seed_, static_cast<std::uint64_t>(key.query_index),
                                  static_cast<std::uint64_t>(key.rollout)};
                std::mt19937_64 rng(seq);
                pick = static_cast<std::size_t>(rng() % variants->size());
            }
        }
        variant = &(*variants)[pick];
    }

    std::map<AgentRole, std::deque<json>> replies;
    for (auto role : kRoles) {
        const json* list = variant ? role_list(*variant, role) : nullptr;
        if (!list)
            list = role_list(*scope, role);
        if (!list)
            list = role_list(script_, role);
        if (list)
            replies[role] = std::deque<json>(list->begin(), list->end());
    }

    std::optional<std::string> fault;
    if (auto failures = script_.find("failures"); failures != script_.end() && failures->is_array()) {
        for (const auto& f : *failures) {
            if (f.value("query_id", std::string()) == key.query_id && f.value("rollout", -2) == key.rollout)
                fault = f.value("error", std::string("error"));
        }
    }
    return std::make_unique<ScriptedSession>(key, std::move(replies), std::move(fault), log_);
}

std::unique_ptr<ChatBackend> ScriptedBackendFactory::session(const json& script, std::shared_ptr<ExchangeLog> log)
{
    ScriptedBackendFactory factory(script, 0, std::move(log));
    return factory.open(SessionKey{});
}

// ---------------------------------------------------------------------------
// Live

namespace {

struct EndpointParts {
    std::string origin;  // scheme://host[:port]
    std::string path;    // .../chat/completions
};

EndpointParts split_endpoint(const std::string& endpoint)
{
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw Error(Errc::Config, "endpoint must include a scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    EndpointParts parts;
    parts.origin = endpoint.substr(0, path_start);
    std::string base = path_start == std::string::npos ? "" : endpoint.substr(path_start);
    while (!base.empty() && base.back() == '/')
        base.pop_back();
    constexpr std::string_view suffix = "/chat/completions";
    if (base.size() >= suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0)
        parts.path = base;
    else
        parts.path = base + std::string(suffix);
    return parts;
}

} // namespace

LiveBackend::LiveBackend(ChatBackendConfig config) : config_(std::move(config)) {}

std::string LiveBackend::id() const
{
    return "live:" + config_.model;
}

json LiveBackend::request_body(const ChatBackendConfig& config, std::span<const ChatMessage> messages)
{
    json body = json::object();
    body["model"] = config.model;
    json msgs = json::array();
    for (const auto& m : messages) {
        json msg = json::object();
        msg["role"] = m.role;
        msg["content"] = m.content;
        msgs.push_back(std::move(msg));
    }
    body["messages"] = std::move(msgs);
    body["temperature"] = config.temperature;
    body["max_tokens"] = config.max_tokens;
    return body;
}

std::string LiveBackend::reply_content(const json& response)
{
    auto choices = response.find("choices");
    if (choices == response.end() || !choices->is_array() || choices->empty())
        throw Error(Errc::BackendError, "response has no choices");
    const auto& message = (*choices)[0].value("message", json::object());
    auto content = message.find("content");
    if (content == message.end() || !content->is_string())
        throw Error(Errc::BackendError, "response choice has no string content");
    return content->get<std::string>();
}

std::string LiveBackend::complete(AgentRole, std::span<const ChatMessage> messages)
{
    auto parts = split_endpoint(config_.endpoint);
    httplib::Client client(parts.origin);
    if (!client.is_valid())
        throw Error(Errc::BackendError, "cannot create client for " + parts.origin);

    auto whole = std::chrono::duration<double>(config_.timeout_seconds);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(whole);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(whole - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    auto body = dump_compact(request_body(config_, messages));

    std::string last_problem;
    bool timed_out = false;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(100) * (1 << std::min(attempt - 1, 6)));
        auto result = client.Post(parts.path, headers, body, "application/json");
        if (!result) {
            auto err = result.error();
            timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                        err == httplib::Error::ConnectionTimeout;
            last_problem = httplib::to_string(err);
            continue;
        }
        timed_out = false;
        if (result->status == 429 || result->status >= 500) {
            last_problem = "HTTP " + std::to_string(result->status);
            continue;
        }
        if (result->status != 200)
            throw Error(Errc::BackendError, "HTTP " + std::to_string(result->status) + ": " + result->body);
        auto parsed = json::parse(result->body, nullptr, false);
        if (parsed.is_discarded())
            throw Error(Errc::BackendError, "response body is not JSON");
        return reply_content(parsed);
    }
    throw Error(timed_out ? Errc::BackendTimeout : Errc::BackendError,
                parts.origin + parts.path + " after " + std::to_string(config_.max_retries + 1) +
                    " attempt(s): " + last_problem);
}

std::unique_ptr<BackendFactory> make_backend_factory(const ChatBackendConfig& config, std::uint64_t seed)
{
    config.validate();
    if (config.kind == BackendKind::Scripted)
        return ScriptedBackendFactory::from_file(config.script, seed);
    return std::make_unique<LiveBackendFactory>(config);
}

} // namespace mtr
