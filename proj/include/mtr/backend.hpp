// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtr/json_text.hpp"

namespace mtr {

enum class AgentRole { ToolMaker, AutoAgent, ToolActor };

std::string_view role_name(AgentRole role) noexcept;

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// One conversation stream. Implementations may keep per-session state, so a
/// session must not be shared between rollouts.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(AgentRole role, std::span<const ChatMessage> messages) = 0;
    virtual std::string id() const = 0;
};

/// Identifies the session a backend is opened for. rollout < 0 is the
/// per-query tool-generation session.
struct SessionKey {
    std::size_t query_index = 0;
    std::string query_id;
    int rollout = -1;
};

class BackendFactory {
public:
    virtual ~BackendFactory() = default;
    virtual std::unique_ptr<ChatBackend> open(const SessionKey& key) = 0;
    virtual bool deterministic() const = 0;
};

enum class BackendKind { Live, Scripted };

struct ChatBackendConfig {
    BackendKind kind = BackendKind::Scripted;
    std::string endpoint = "https://api.openai.com/v1";
    std::string model = "gpt-4o-mini";
    double temperature = 0.7;
    int max_tokens = 4096;
    double timeout_seconds = 120.0;
    int max_retries = 2;
    std::string api_key;
    std::filesystem::path script;  // scripted only

    void validate() const;
};

/// Every request a scripted session answered, in arrival order per session.
struct Exchange {
    SessionKey key;
    AgentRole role;
    std::vector<ChatMessage> messages;
    std::string reply;
};

class ExchangeLog {
public:
    void record(Exchange exchange);
    std::vector<Exchange> snapshot() const;

private:
    mutable std::mutex mutex_;
    std::vector<Exchange> exchanges_;
};

/// Replays canned replies per role. Script layout:
///
///   { "toolmaker": [...], "autoagent": [...], "toolactor": [...],
///     "variants": [ {<role lists>}, ... ],
///     "queries": { "<query id>": {<role lists and/or variants>} },
///     "failures": [ {"query_id": "...", "rollout": 3, "error": "timeout"} ] }
///
/// A reply is a string, or {"timeout": true} / {"error": "..."} to simulate
/// a backend fault. Each session consumes its own copy of the lists, so
/// rollouts are independent of scheduling. With several variants, rollout r
/// uses variant r mod count, or a seeded pick when seed != 0.
class ScriptedBackendFactory : public BackendFactory {
public:
    explicit ScriptedBackendFactory(json script, std::uint64_t seed = 0,
                                    std::shared_ptr<ExchangeLog> log = nullptr);
    static std::unique_ptr<ScriptedBackendFactory> from_file(const std::filesystem::path& path,
                                                             std::uint64_t seed = 0);

    std::unique_ptr<ChatBackend> open(const SessionKey& key) override;
    bool deterministic() const override { return true; }

    /// A single session over an explicit script, for direct tests.
    static std::unique_ptr<ChatBackend> session(const json& script, std::shared_ptr<ExchangeLog> log = nullptr);

private:
    json script_;
    std::uint64_t seed_;
    std::shared_ptr<ExchangeLog> log_;
};

/// OpenAI-compatible chat-completions client.
class LiveBackend : public ChatBackend {
public:
    explicit LiveBackend(ChatBackendConfig config);
    std::string complete(AgentRole role, std::span<const ChatMessage> messages) override;
    std::string id() const override;

    static json request_body(const ChatBackendConfig& config, std::span<const ChatMessage> messages);
    static std::string reply_content(const json& response);

private:
    ChatBackendConfig config_;
};

class LiveBackendFactory : public BackendFactory {
public:
    explicit LiveBackendFactory(ChatBackendConfig config) : config_(std::move(config)) {}
    std::unique_ptr<ChatBackend> open(const SessionKey&) override
    {
        return std::make_unique<LiveBackend>(config_);
    }
    bool deterministic() const override { return false; }

private:
    ChatBackendConfig config_;
};

std::unique_ptr<BackendFactory> make_backend_factory(const ChatBackendConfig& config, std::uint64_t seed);

} // namespace mtr
