#pragma once

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "r2r/errors.hpp"
#include "r2r/util.hpp"

namespace r2r {

struct Message {
    std::string role;  // system | user | assistant
    std::string content;
    bool operator==(const Message&) const = default;
};

struct CompletionRequest {
    std::string model_name;
    std::vector<Message> messages;
    double temperature = 0.0;
    int64_t seed = 0;
    bool want_logprobs = false;
    int top_k = 5;
    int max_tokens = 256;
};

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;
    std::vector<std::pair<std::string, double>> alternatives;
};

struct Completion {
    std::string text;
    std::optional<std::vector<TokenLogprob>> token_logprobs;
    std::string finish_reason;
    int64_t latency_ms = 0;
};

struct ConfidenceReading {
    std::string answer_token;
    double probability = 0.0;
    int rank_in_top_k = 1;
};

// ---------------------------------------------------------------------------
// Canonical form and fingerprints
// ---------------------------------------------------------------------------

// Stable across platforms: nlohmann::json orders object keys, and double
// formatting uses shortest round-trip output.
inline nlohmann::json canonical_request_json(const CompletionRequest& req) {
    nlohmann::json j;
    j["model"] = req.model_name;
    auto& msgs = j["messages"] = nlohmann::json::array();
    for (const auto& m : req.messages) {
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
    j["temperature"] = req.temperature;
    j["seed"] = req.seed;
    j["logprobs"] = req.want_logprobs;
    j["top_logprobs"] = req.want_logprobs ? req.top_k : 0;
    j["max_tokens"] = req.max_tokens;
    return j;
}

inline std::string canonical_request(const CompletionRequest& req) {
    return canonical_request_json(req).dump();
}

inline std::string request_fingerprint(const CompletionRequest& req) {
    return to_hex(fnv1a64(canonical_request(req)));
}

// ---------------------------------------------------------------------------
// Response parsing (de-facto /v1/chat/completions shape)
// ---------------------------------------------------------------------------

inline Completion parse_completion(const nlohmann::json& body) {
    Completion c;
    auto choices = body.find("choices");
    if (choices == body.end() || !choices->is_array() || choices->empty())
        throw ProtocolError("response has no choices");
    const auto& choice = (*choices)[0];
    auto message = choice.find("message");
    if (message == choice.end() || !message->is_object() || !message->contains("content") ||
        !(*message)["content"].is_string())
        throw ProtocolError("response choice has no message content");
    c.text = (*message)["content"].get<std::string>();
    c.finish_reason = choice.value("finish_reason", std::string{});
    auto logprobs = choice.find("logprobs");
    if (logprobs != choice.end() && logprobs->is_object() && logprobs->contains("content") &&
        (*logprobs)["content"].is_array()) {
        std::vector<TokenLogprob> entries;
        for (const auto& e : (*logprobs)["content"]) {
            if (!e.contains("token") || !e.contains("logprob"))
                throw ProtocolError("malformed logprob entry");
            TokenLogprob t;
            t.token = e["token"].get<std::string>();
            t.logprob = e["logprob"].get<double>();
            if (e.contains("top_logprobs") && e["top_logprobs"].is_array()) {
                for (const auto& alt : e["top_logprobs"]) {
                    t.alternatives.emplace_back(alt.value("token", std::string{}),
                                                alt.value("logprob", 0.0));
                }
            }
            entries.push_back(std::move(t));
        }
        c.token_logprobs = std::move(entries);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Cassettes: JSONL of {fingerprint, request, response}
// ---------------------------------------------------------------------------

class Cassette {
public:
    Cassette() = default;

    static Cassette load(const std::filesystem::path& path) {
        Cassette c;
        c.path_ = path;
        if (!std::filesystem::exists(path)) return c;
        size_t lineno = 0;
        for (const auto& line : split_lines(read_file(path))) {
            ++lineno;
            if (trim(line).empty()) continue;
            nlohmann::json entry;
            try {
                entry = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw IoError("cassette " + path.string() + " line " + std::to_string(lineno) +
                              ": " + e.what());
            }
            if (!entry.contains("fingerprint") || !entry.contains("response"))
                throw IoError("cassette " + path.string() + " line " + std::to_string(lineno) +
                              " misses fingerprint/response");
            c.entries_[entry["fingerprint"].get<std::string>()] = entry["response"];
        }
        return c;
    }

    const nlohmann::json* find(const std::string& fingerprint) const {
        auto it = entries_.find(fingerprint);
        return it == entries_.end() ? nullptr : &it->second;
    }

    // At most one stored response per fingerprint; re-recording is a no-op.
    bool append(const std::string& fingerprint, const nlohmann::json& request,
                const nlohmann::json& response) {
        if (entries_.count(fingerprint)) return false;
        entries_[fingerprint] = response;
        nlohmann::json line;
        line["fingerprint"] = fingerprint;
        line["request"] = request;
        line["response"] = response;
        if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        if (!out) throw IoError("cannot append to cassette: " + path_.string());
        out << line.dump() << "\n";
        return true;
    }

    size_t size() const { return entries_.size(); }

private:
    std::filesystem::path path_;
    std::map<std::string, nlohmann::json> entries_;
};

// ---------------------------------------------------------------------------
// Clients
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int attempts = 3;
    int backoff_ms = 100;
};

enum class GatewayMode { live, replay, record };

inline std::optional<GatewayMode> gateway_mode_from(const std::string& s) {
    if (s == "live") return GatewayMode::live;
    if (s == "replay") return GatewayMode::replay;
    if (s == "record") return GatewayMode::record;
    return std::nullopt;
}

struct EndpointConfig {
    std::string name;
    std::string base_url;
    std::string model;
    std::string api_key_env;  // name of the env var holding the key
    GatewayMode mode = GatewayMode::replay;
    std::filesystem::path cassette;
    int max_in_flight = 4;
    RetryPolicy retry;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;

    Completion complete(const CompletionRequest& req) {
        auto t0 = std::chrono::steady_clock::now();
        bool replayed = false;
        nlohmann::json raw = complete_raw(req, replayed);
        Completion c = parse_completion(raw);
        if (req.want_logprobs && !c.text.empty() &&
            (!c.token_logprobs || c.token_logprobs->empty()))
            throw ProtocolError("logprobs requested but missing from response");
        c.latency_ms = replayed ? 0
                                : std::chrono::duration_cast<std::chrono::milliseconds>(
                                      std::chrono::steady_clock::now() - t0)
                                      .count();
        return c;
    }

    virtual nlohmann::json complete_raw(const CompletionRequest& req, bool& replayed) = 0;
};

class HttpChatClient final : public ChatClient {
public:
    explicit HttpChatClient(EndpointConfig config) : config_(std::move(config)) {}

    nlohmann::json complete_raw(const CompletionRequest& req, bool& replayed) override {
        replayed = false;
        Slot slot(*this);

        nlohmann::json body = canonical_request_json(req);
        if (!req.want_logprobs) {
            body.erase("logprobs");
            body.erase("top_logprobs");
        }
        httplib::Headers headers;
        if (!config_.api_key_env.empty()) {
            if (const char* key = std::getenv(config_.api_key_env.c_str()))
                headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        std::string last_error;
        for (int attempt = 0; attempt < config_.retry.attempts; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(config_.retry.backoff_ms << (attempt - 1)));
            }
            httplib::Client client(config_.base_url);
            client.set_connection_timeout(30);
            client.set_read_timeout(120);
            auto res = client.Post("/v1/chat/completions", headers, body.dump(),
                                   "application/json");
            if (!res) {
                last_error = "transport failure (" + httplib::to_string(res.error()) + ")";
                continue;
            }
            if (res->status >= 500) {
                last_error = "server error " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw ProtocolError("endpoint " + config_.name + " returned status " +
                                    std::to_string(res->status) + ": " + res->body);
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error& e) {
                throw ProtocolError("endpoint " + config_.name +
                                    " returned unparseable body: " + e.what());
            }
        }
        throw TransportError("endpoint " + config_.name + " unreachable after " +
                             std::to_string(config_.retry.attempts) +
                             " attempts: " + last_error);
    }

private:
    // Bounds concurrent in-flight requests without busy waiting.
    struct Slot {
        explicit Slot(HttpChatClient& c) : client(c) {
            std::unique_lock lock(client.mutex_);
            client.cv_.wait(lock, [&] { return client.in_flight_ < client.config_.max_in_flight; });
            ++client.in_flight_;
        }
        ~Slot() {
            {
                std::lock_guard lock(client.mutex_);
                --client.in_flight_;
            }
            client.cv_.notify_one();
        }
        HttpChatClient& client;
    };

    EndpointConfig config_;
    std::mutex mutex_;
    std::condition_variable cv_;
    int in_flight_ = 0;
};

class ReplayChatClient final : public ChatClient {
public:
    explicit ReplayChatClient(const std::filesystem::path& cassette)
        : cassette_(Cassette::load(cassette)), path_(cassette) {}

    nlohmann::json complete_raw(const CompletionRequest& req, bool& replayed) override {
        replayed = true;
        std::string fp = request_fingerprint(req);
        const nlohmann::json* stored = cassette_.find(fp);
        if (!stored)
            throw CassetteMiss("no recorded response for fingerprint " + fp + " in " +
                               path_.string());
        return *stored;
    }

private:
    Cassette cassette_;
    std::filesystem::path path_;
};

class RecordingChatClient final : public ChatClient {
public:
    RecordingChatClient(std::unique_ptr<ChatClient> inner, const std::filesystem::path& cassette)
        : inner_(std::move(inner)), cassette_(Cassette::load(cassette)) {}

    nlohmann::json complete_raw(const CompletionRequest& req, bool& replayed) override {
        std::string fp = request_fingerprint(req);
        {
            std::lock_guard lock(mutex_);
            if (const nlohmann::json* stored = cassette_.find(fp)) {
                replayed = true;
                return *stored;
            }
        }
        nlohmann::json raw = inner_->complete_raw(req, replayed);
        std::lock_guard lock(mutex_);
        cassette_.append(fp, canonical_request_json(req), raw);
        return raw;
    }

private:
    std::unique_ptr<ChatClient> inner_;
    Cassette cassette_;
    std::mutex mutex_;
};

inline std::unique_ptr<ChatClient> make_client(const EndpointConfig& config) {
    switch (config.mode) {
        case GatewayMode::live: return std::make_unique<HttpChatClient>(config);
        case GatewayMode::replay: return std::make_unique<ReplayChatClient>(config.cassette);
        case GatewayMode::record:
            return std::make_unique<RecordingChatClient>(std::make_unique<HttpChatClient>(config),
                                                         config.cassette);
    }
    throw ConfigError("unknown gateway mode");
}

// ---------------------------------------------------------------------------
// Confidence
// ---------------------------------------------------------------------------

// Reading for the first non-whitespace content token. probability is
// exp(logprob); rank counts alternatives that scored strictly higher.
inline ConfidenceReading first_token_confidence(const Completion& completion) {
    if (!completion.token_logprobs || completion.token_logprobs->empty())
        throw NoLogprobs("completion carries no token logprobs");
    for (const auto& entry : *completion.token_logprobs) {
        if (trim(entry.token).empty()) continue;
        ConfidenceReading reading;
        reading.answer_token = entry.token;
        reading.probability = std::exp(entry.logprob);
        int higher = 0;
        for (const auto& [token, logprob] : entry.alternatives) {
            if (token != entry.token && logprob > entry.logprob) ++higher;
        }
        reading.rank_in_top_k = 1 + higher;
        return reading;
    }
    throw NoLogprobs("completion contains only whitespace tokens");
}

}  // namespace r2r
