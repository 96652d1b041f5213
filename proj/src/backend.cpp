// SPDX-License-Identifier: Apache-2.0
#include "solsentry/backend.hpp"

#include <thread>

#include <nlohmann/json.hpp>

#include "solsentry/http.hpp"
#include "solsentry/util.hpp"

namespace solsentry::rulegen {

namespace fs = std::filesystem;

std::string prompt_hash(const std::vector<Message>& messages)
{
    return sha256_hex(messages_to_json(messages).dump());
}

FixtureBackend::FixtureBackend(fs::path dir) : dir_(std::move(dir))
{
    const fs::path script = *dir_ / "script.json";
    if (fs::exists(script)) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(read_file(script));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error("fixture script " + script.string() + ": " + e.what());
        }
        if (doc.is_object() && doc.contains("responses")) doc = doc["responses"];
        if (!doc.is_array()) throw Error("fixture script " + script.string() + ": expected an array of responses");
        for (const auto& item : doc) {
            if (!item.is_string()) throw Error("fixture script " + script.string() + ": responses must be text");
            script_.push_back(item.get<std::string>());
        }
        scripted_ = true;
    } else if (!fs::is_directory(*dir_ / "responses")) {
        throw Error("fixture directory " + dir_->string() + " has neither script.json nor responses/");
    }
}

FixtureBackend::FixtureBackend(std::vector<std::string> script) : script_(std::move(script)), scripted_(true) {}

std::string FixtureBackend::complete(const CompletionRequest& request)
{
    if (scripted_) {
        if (next_ >= script_.size()) {
            throw BackendUnavailable("fixture script exhausted after " + std::to_string(script_.size()) + " responses");
        }
        ++calls_;
        return script_[next_++];
    }
    const std::string hash = prompt_hash(request.messages);
    const fs::path file = *dir_ / "responses" / (hash + ".txt");
    if (!fs::exists(file)) {
        throw BackendUnavailable("no fixture response for prompt " + hash);
    }
    ++calls_;
    return read_file(file);
}

std::string redact(std::string text, const std::string& secret)
{
    if (secret.empty()) return text;
    for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos)) {
        text.replace(pos, secret.size(), "[REDACTED]");
    }
    return text;
}

std::string chat_request_body(const CompletionRequest& request)
{
    nlohmann::ordered_json body;
    body["model"] = request.model;
    body["messages"] = messages_to_json(request.messages);
    body["temperature"] = 0;
    body["seed"] = request.seed;
    return body.dump();
}

std::string chat_response_content(const std::string& body)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
        throw EmptyResponse("backend response is not JSON");
    }
    const auto ptr = nlohmann::json::json_pointer("/choices/0/message/content");
    if (!doc.contains(ptr) || !doc[ptr].is_string()) {
        throw EmptyResponse("backend response has no message content");
    }
    std::string content = doc[ptr].get<std::string>();
    if (trim(content).empty()) throw EmptyResponse();
    return content;
}

LiveBackend::LiveBackend(LiveBackendOptions options) : options_(std::move(options))
{
    if (options_.endpoint.empty()) {
        throw BackendUnavailable("no LLM endpoint configured (set SENTRY_LLM_ENDPOINT)");
    }
}

std::string LiveBackend::complete(const CompletionRequest& request)
{
    CompletionRequest req = request;
    if (req.model.empty()) req.model = options_.model;
    const std::string body = chat_request_body(req);
    HttpHeaders headers;
    if (!options_.api_key.empty()) headers["Authorization"] = "Bearer " + options_.api_key;
    if (options_.log) {
        *options_.log << "POST " << options_.endpoint << "\n"
                      << redact(body, options_.api_key) << "\n";
    }
    HttpResponse res;
    try {
        res = http_post(options_.endpoint, headers, body, "application/json", options_.timeout);
    } catch (const Error& e) {
        throw BackendUnavailable(redact(e.what(), options_.api_key));
    }
    if (options_.log) {
        *options_.log << "HTTP " << res.status << "\n" << redact(res.body, options_.api_key) << "\n";
    }
    ++calls_;
    if (res.status == 401 || res.status == 403) {
        throw BackendUnavailable("backend rejected credentials (HTTP " + std::to_string(res.status) + ")");
    }
    if (res.status == 429 || res.status >= 500) {
        throw BackendUnavailable("backend unavailable (HTTP " + std::to_string(res.status) + ")");
    }
    if (res.status != 200) {
        throw BackendUnavailable("unexpected HTTP " + std::to_string(res.status) + " from backend");
    }
    return chat_response_content(res.body);
}

RetryingBackend::RetryingBackend(std::unique_ptr<LlmBackend> inner, int retries, std::chrono::milliseconds base_delay,
                                 Sleeper sleeper)
    : inner_(std::move(inner)), retries_(retries), base_delay_(base_delay), sleeper_(std::move(sleeper))
{
    if (!sleeper_) {
        sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

std::string RetryingBackend::complete(const CompletionRequest& request)
{
    auto delay = base_delay_;
    for (int attempt = 0;; ++attempt) {
        try {
            std::string out = inner_->complete(request);
            ++calls_;
            return out;
        } catch (const BackendUnavailable&) {
            if (attempt >= retries_) throw;
            sleeper_(delay);
            delay *= 2;
        }
    }
}

} // namespace solsentry::rulegen
