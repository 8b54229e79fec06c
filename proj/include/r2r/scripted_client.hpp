#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "r2r/gateway.hpp"
#include "r2r/util.hpp"

namespace r2r {

// Logprob constants used by the scripted endpoint. Pinned as literals so
// regenerated cassettes are byte-identical everywhere.
inline constexpr double kLogProb067 = -0.40047756659712525;  // log(0.67)
inline constexpr double kLogProb090 = -0.10536051565782628;  // log(0.90)
inline constexpr double kLogProb005 = -2.99573227355399100;  // log(0.05)

// A deterministic offline stand-in for a chat-completions endpoint. Every
// response is a pure function of the request, so recording a run against it
// yields a reproducible cassette. Useful for smoke runs and demos without
// network access; not a language model.
class ScriptedClient final : public ChatClient {
public:
    nlohmann::json complete_raw(const CompletionRequest& req, bool& replayed) override {
        replayed = false;
        const std::string system = find_content(req, "system");
        const std::string user = last_user(req);
        const std::string last = req.messages.empty() ? "" : req.messages.back().content;
        const uint64_t h = fnv1a64(canonical_request(req));

        if (ends_with(trim(last), "Say ok if you understand.")) {
            return wrap(req, "Ok.");
        }
        if (user.find("confidence-67") != std::string::npos) {
            nlohmann::json content = nlohmann::json::array();
            content.push_back(logprob_entry(" ", -0.01, {}));
            content.push_back(logprob_entry("hello", kLogProb067,
                                            {{"hello", kLogProb067}, {"hi", -2.0}}));
            return wrap(req, " hello", content);
        }
        if (user.find("Reply with exactly one label") != std::string::npos ||
            user.find("Answer with exactly one label") != std::string::npos) {
            return judge_reply(req, h);
        }
        if (user.find("Answer with only the year") != std::string::npos) {
            std::string year = system.find("Biden") != std::string::npos   ? "1942"
                               : system.find("Trump") != std::string::npos ? "1946"
                                                                           : "1950";
            nlohmann::json content = nlohmann::json::array();
            content.push_back(logprob_entry(year, kLogProb090,
                                            {{year, kLogProb090}, {"1950", kLogProb005}}));
            return wrap(req, year, content);
        }
        return wrap(req, roleplay_reply(system, user, h));
    }

private:
    static bool ends_with(std::string_view s, std::string_view suffix) {
        return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
    }

    static std::string find_content(const CompletionRequest& req, const std::string& role) {
        for (const auto& m : req.messages) {
            if (m.role == role) return m.content;
        }
        return "";
    }

    static std::string last_user(const CompletionRequest& req) {
        for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
            if (it->role == "user") return it->content;
        }
        return "";
    }

    static std::string character_name(const std::string& system) {
        size_t pos = system.find("You are ");
        if (pos == std::string::npos) return "the speaker";
        size_t start = pos + 8;
        size_t end = system.find_first_of(".,\n", start);
        if (end == std::string::npos) end = system.size();
        std::string name = trim(system.substr(start, end - start));
        return name.empty() ? "the speaker" : name;
    }

    static std::vector<std::string> quoted_snippets(const std::string& text) {
        std::vector<std::string> out;
        size_t pos = 0;
        while ((pos = text.find('"', pos)) != std::string::npos) {
            size_t close = text.find('"', pos + 1);
            if (close == std::string::npos) break;
            std::string snippet = text.substr(pos + 1, close - pos - 1);
            if (!snippet.empty() && snippet.size() < 80) out.push_back(snippet);
            pos = close + 1;
        }
        return out;
    }

    nlohmann::json judge_reply(const CompletionRequest& req, uint64_t h) {
        const std::string user = last_user(req);
        // count presented candidates by their "X: " lines
        int k = 0;
        for (const auto& line : split_lines(user)) {
            if (line.size() > 2 && line[1] == ':' && line[2] == ' ' && line[0] >= 'A' &&
                line[0] <= 'Z')
                k = std::max(k, line[0] - 'A' + 1);
        }
        if (k < 2) return wrap(req, "ABSTAIN");
        uint64_t r = h % static_cast<uint64_t>(k + 3);
        if (r < static_cast<uint64_t>(k)) {
            return wrap(req, std::string(1, static_cast<char>('A' + r)));
        }
        if (r == static_cast<uint64_t>(k)) return wrap(req, "ABSTAIN");
        if (r == static_cast<uint64_t>(k + 1)) {
            char pick = static_cast<char>('A' + (h >> 8) % k);
            return wrap(req, "I think " + std::string(1, pick) +
                                 " is the strongest choice here.");
        }
        return wrap(req, std::string(1, static_cast<char>('A' + (h >> 16) % k)));
    }

    std::string roleplay_reply(const std::string& system, const std::string& user, uint64_t h) {
        std::string name = character_name(system);
        std::string topic = trim(user);
        while (!topic.empty() && (topic.back() == '?' || topic.back() == '.')) topic.pop_back();
        auto snippets = quoted_snippets(system);
        auto pick = [&](size_t i) -> std::string {
            if (snippets.empty()) return "";
            return snippets[(h / (i + 1) + i * 7) % snippets.size()];
        };
        if (system.find("3. Catchphrase Demonstration:") != std::string::npos) {
            return name + " (happy): " + pick(0) + " " + topic +
                   "? It is the best, everybody is saying it. " + pick(1) + " " + pick(2);
        }
        if (system.find("Interviewer:") != std::string::npos) {
            return "Well, let me answer that directly. " + topic +
                   " is an important question and I have strong views on it. " + pick(0);
        }
        return "Speaking as " + name + ", here is my honest answer: " + topic +
               " matters a great deal to me, and I will keep it short.";
    }

    static nlohmann::json logprob_entry(const std::string& token, double logprob,
                                        std::vector<std::pair<std::string, double>> alts) {
        nlohmann::json e;
        e["token"] = token;
        e["logprob"] = logprob;
        auto& top = e["top_logprobs"] = nlohmann::json::array();
        for (const auto& [t, lp] : alts) top.push_back({{"token", t}, {"logprob", lp}});
        return e;
    }

    nlohmann::json wrap(const CompletionRequest& req, const std::string& text,
                        const nlohmann::json& logprob_content = nullptr) {
        nlohmann::json choice;
        choice["message"] = {{"role", "assistant"}, {"content", text}};
        choice["finish_reason"] = "stop";
        if (logprob_content.is_array()) {
            choice["logprobs"] = {{"content", logprob_content}};
        } else if (req.want_logprobs && !text.empty()) {
            nlohmann::json content = nlohmann::json::array();
            content.push_back(logprob_entry(text, kLogProb090, {{text, kLogProb090}}));
            choice["logprobs"] = {{"content", content}};
        } else {
            choice["logprobs"] = nullptr;
        }
        nlohmann::json body;
        body["model"] = req.model_name;
        body["choices"] = nlohmann::json::array({choice});
        return body;
    }
};

// Fixture requests shared by the cassette generator and the tests, so both
// sides always agree on the recorded fingerprints.

inline CompletionRequest ok_fixture_request(const std::string& rendered_system_prompt) {
    CompletionRequest req;
    req.model_name = "subject-1";
    req.messages = {{"system", rendered_system_prompt}};
    req.temperature = 0.1;
    req.seed = 42;
    req.max_tokens = 16;
    return req;
}

inline CompletionRequest confidence67_fixture_request() {
    CompletionRequest req;
    req.model_name = "subject-1";
    req.messages = {{"user", "confidence-67"}};
    req.temperature = 0.0;
    req.seed = 7;
    req.want_logprobs = true;
    req.max_tokens = 8;
    return req;
}

inline CompletionRequest year_fixture_request() {
    CompletionRequest req;
    req.model_name = "subject-1";
    req.messages = {{"system", "You are Trump."},
                    {"user", "In what year were you born? Answer with only the year."}};
    req.temperature = 0.0;
    req.seed = 7;
    req.want_logprobs = true;
    req.max_tokens = 8;
    return req;
}

}  // namespace r2r
