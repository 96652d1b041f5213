// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "solsentry/errors.hpp"
#include "solsentry/prompts.hpp"

namespace solsentry::rulegen {

class BackendUnavailable : public Error {
public:
    using Error::Error;
};

class EmptyResponse : public Error {
public:
    EmptyResponse() : Error("backend returned an empty response") {}
    using Error::Error;
};

struct CompletionRequest {
    std::vector<Message> messages;
    std::string model;
    std::uint64_t seed = 0;
};

/// A chat-completion source. Implementations count every call they answer.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
    virtual std::string name() const = 0;
    std::size_t calls() const { return calls_; }

protected:
    std::size_t calls_ = 0;
};

/// Canned responses. In script mode each call consumes the next entry; in map
/// mode the response is looked up by prompt_hash(messages).
class FixtureBackend : public LlmBackend {
public:
    /// A directory holding either `script.json` (array of responses) or
    /// `responses/<prompt hash>.txt` files.
    explicit FixtureBackend(std::filesystem::path dir);
    /// In-memory script.
    explicit FixtureBackend(std::vector<std::string> script);

    std::string complete(const CompletionRequest& request) override;
    std::string name() const override { return "fixture"; }

private:
    std::optional<std::filesystem::path> dir_;
    std::vector<std::string> script_;
    bool scripted_ = false;
    std::size_t next_ = 0;
};

/// SHA-256 of the compact JSON message array; the fixture map key.
std::string prompt_hash(const std::vector<Message>& messages);

struct LiveBackendOptions {
    std::string endpoint; // full URL of the chat-completion endpoint
    std::string model;
    std::string api_key;
    std::chrono::seconds timeout{60};
    std::ostream* log = nullptr; // request/response bodies, key redacted
};

/// OpenAI-style chat-completion client over HTTP(S).
class LiveBackend : public LlmBackend {
public:
    explicit LiveBackend(LiveBackendOptions options);
    std::string complete(const CompletionRequest& request) override;
    std::string name() const override { return "live"; }

private:
    LiveBackendOptions options_;
};

/// Replaces every occurrence of `secret` in `text` with "[REDACTED]".
std::string redact(std::string text, const std::string& secret);

/// Builds the request body sent by LiveBackend.
std::string chat_request_body(const CompletionRequest& request);
/// Pulls choices[0].message.content from a chat-completion response body.
std::string chat_response_content(const std::string& body);

/// Retries BackendUnavailable with exponential backoff. One logical call is
/// counted however many transport attempts it took.
class RetryingBackend : public LlmBackend {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;
    RetryingBackend(std::unique_ptr<LlmBackend> inner, int retries, std::chrono::milliseconds base_delay,
                    Sleeper sleeper = {});
    std::string complete(const CompletionRequest& request) override;
    std::string name() const override { return inner_->name(); }
    const LlmBackend& inner() const { return *inner_; }

private:
    std::unique_ptr<LlmBackend> inner_;
    int retries_;
    std::chrono::milliseconds base_delay_;
    Sleeper sleeper_;
};

} // namespace solsentry::rulegen
