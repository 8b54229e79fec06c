#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "r2r/errors.hpp"
#include "r2r/gateway.hpp"
#include "r2r/util.hpp"

namespace r2r {

enum class Setting { election, tv, ceo, authenticity };

inline std::string to_string(Setting s) {
    switch (s) {
        case Setting::election: return "election";
        case Setting::tv: return "tv";
        case Setting::ceo: return "ceo";
        default: return "authenticity";
    }
}

inline std::optional<Setting> setting_from(const std::string& s) {
    if (s == "election") return Setting::election;
    if (s == "tv") return Setting::tv;
    if (s == "ceo") return Setting::ceo;
    if (s == "authenticity") return Setting::authenticity;
    return std::nullopt;
}

struct JudgePersona {
    std::string name;
    std::string system_prompt;
    std::vector<std::string> demonstration_responses;  // authenticity judges only
    bool operator==(const JudgePersona&) const = default;
};

struct JudgePanel {
    Setting setting = Setting::election;
    std::vector<JudgePersona> judges;
    std::string action_verb;
    std::string abstain_action;
};

// The panels: five electorate archetypes for debates, three audience
// segments for TV hosting, four board archetypes for the CEO interview, and
// the two detection experts for authenticity.
inline JudgePanel build_panel(Setting setting) {
    JudgePanel panel;
    panel.setting = setting;
    switch (setting) {
        case Setting::election:
            panel.action_verb = "votes for";
            panel.abstain_action = "abstaining";
            panel.judges = {
                {"Far-left voter",
                 "You are a far-left American voter. You want sweeping structural change, "
                 "wealth redistribution, and bold collective action, and you distrust "
                 "establishment politics. Judge every answer by how well it serves ordinary "
                 "people over corporations.",
                 {}},
                {"Liberal voter",
                 "You are a liberal American voter. You support progressive policy delivered "
                 "through stable institutions, civil rights, and evidence-based government. "
                 "Judge every answer on competence and fairness.",
                 {}},
                {"Moderate voter",
                 "You are a moderate American swing voter. You dislike partisanship and grade "
                 "candidates on pragmatism, credibility, and respect for the other side.",
                 {}},
                {"Conservative voter",
                 "You are a conservative American voter. You value limited government, low "
                 "taxes, strong borders, and traditional values. Judge every answer by how "
                 "well it defends those priorities.",
                 {}},
                {"Far-right voter",
                 "You are a far-right American voter. You want an uncompromising nationalist "
                 "agenda and you distrust mainstream media and institutions. Judge every "
                 "answer by loyalty to that agenda.",
                 {}},
            };
            break;
        case Setting::tv:
            panel.action_verb = "keeps watching";
            panel.abstain_action = "changing the channel";
            panel.judges = {
                {"Men's audience",
                 "You are a television viewer representing adult men in the studio audience. "
                 "You keep watching hosts who are funny, confident, and quick.",
                 {}},
                {"Women's audience",
                 "You are a television viewer representing adult women in the studio "
                 "audience. You keep watching hosts who are warm, witty, and genuinely "
                 "interested in their guests.",
                 {}},
                {"Children's audience",
                 "You are a television viewer representing children in the studio audience. "
                 "You keep watching hosts who are silly, kind, and easy to follow.",
                 {}},
            };
            break;
        case Setting::ceo:
            panel.action_verb = "hires";
            panel.abstain_action = "abstaining";
            panel.judges = {
                {"Shareholder Maximizer",
                 "You are a board member known as the Shareholder Maximizer. You hire the "
                 "CEO candidate who will deliver the strongest returns, margins, and market "
                 "confidence.",
                 {}},
                {"Corporate Contributors",
                 "You are a board member known as the Corporate Contributor. You hire the "
                 "CEO candidate who invests in employees, partners, and the communities the "
                 "company depends on.",
                 {}},
                {"Impact Integrator",
                 "You are a board member known as the Impact Integrator. You hire the CEO "
                 "candidate who ties financial performance to measurable social and "
                 "environmental outcomes.",
                 {}},
                {"Social Innovator",
                 "You are a board member known as the Social Innovator. You hire the CEO "
                 "candidate who treats social change as the core of the business model.",
                 {}},
            };
            break;
        case Setting::authenticity:
            panel.action_verb = "flags as LLM";
            panel.abstain_action = "abstaining";
            panel.judges = {
                {"LLM expert",
                 "You are an expert at recognizing text written by large language models. "
                 "Look for hedging, over-structured answers, assistant mannerisms, and "
                 "breaks in persona.",
                 {"As an AI language model, I cannot impersonate real people, but here is a "
                  "balanced summary of both perspectives.",
                  "Certainly! Here are three key points to consider: 1) context, 2) "
                  "accuracy, and 3) tone. I hope this helps!"}},
                {"Human expert",
                 "You are an expert at recognizing text written by real people. Look for "
                 "lived detail, inconsistency, humor, and natural speech rhythm.",
                 {"Honestly I don't remember the exact year, it was around the time we "
                  "moved house. Why do you ask?",
                  "Ha! No. Next question. Look, I talk fast and I repeat myself, that's "
                  "just me."}},
            };
            break;
    }
    return panel;
}

// ---------------------------------------------------------------------------
// Persona asset files: `name: X` front-matter line, blank line, system
// prompt, then optional `--- demonstration ---` blocks.
// ---------------------------------------------------------------------------

inline std::string persona_file_text(const JudgePersona& persona) {
    std::string out = "name: " + persona.name + "\n\n" + persona.system_prompt + "\n";
    for (const auto& demo : persona.demonstration_responses) {
        out += "\n--- demonstration ---\n" + demo + "\n";
    }
    return out;
}

inline JudgePersona parse_persona_file(std::string_view content, const std::string& where) {
    auto lines = split_lines(content);
    if (lines.empty() || lines[0].rfind("name: ", 0) != 0)
        throw SchemaError("persona file " + where + " must start with a 'name: ' line");
    JudgePersona persona;
    persona.name = trim(lines[0].substr(6));
    if (persona.name.empty()) throw SchemaError("persona file " + where + " has an empty name");

    std::vector<std::string> chunks{""};
    for (size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]) == "--- demonstration ---") {
            chunks.emplace_back();
        } else {
            auto& chunk = chunks.back();
            if (!chunk.empty()) chunk += "\n";
            chunk += lines[i];
        }
    }
    persona.system_prompt = trim(chunks[0]);
    for (size_t i = 1; i < chunks.size(); ++i) {
        std::string demo = trim(chunks[i]);
        if (!demo.empty()) persona.demonstration_responses.push_back(std::move(demo));
    }
    return persona;
}

inline JudgePersona load_persona_file(const std::filesystem::path& path) {
    return parse_persona_file(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Ballots
// ---------------------------------------------------------------------------

inline constexpr std::string_view kAbstain = "ABSTAIN";

struct Candidate {
    std::string id;
    std::string response;
};

enum class ParseStatus { clean, recovered, forced_abstain };

inline std::string to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::clean: return "clean";
        case ParseStatus::recovered: return "recovered";
        default: return "forced_abstain";
    }
}

struct Ballot {
    std::string judge_name;
    std::string question_id;
    std::vector<std::string> presented_order;  // candidate ids as shown
    std::string choice;                        // candidate id or ABSTAIN
    std::string raw_judge_text;
    ParseStatus parse_status = ParseStatus::clean;
};

struct BallotOptions {
    std::string model;
    double temperature = 0.0;
    int max_tokens = 64;
};

namespace detail {

inline std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

// Exact single-label (or ABSTAIN) answers parse clean; otherwise the text is
// scanned for a unique uppercase label word. Lowercase letters are ignored in
// the scan so the article "a" never reads as a vote for A.
inline std::optional<std::pair<std::string, ParseStatus>> parse_judge_choice(
    const std::string& raw, const std::vector<std::string>& labels) {
    std::string t = trim(raw);
    while (!t.empty() && (t.back() == '.' || t.back() == '!' || t.back() == ')')) t.pop_back();
    if (!t.empty() && t.front() == '(') t.erase(t.begin());
    std::string tu = upper(t);
    if (tu == kAbstain) return {{std::string(kAbstain), ParseStatus::clean}};
    for (const auto& label : labels) {
        if (tu == label) return {{label, ParseStatus::clean}};
    }

    std::set<std::string> seen;
    for (auto word : split_whitespace(raw)) {
        while (!word.empty() && !std::isalnum(static_cast<unsigned char>(word.back())))
            word.pop_back();
        while (!word.empty() && !std::isalnum(static_cast<unsigned char>(word.front())))
            word.erase(word.begin());
        if (word.size() == 1) {
            for (const auto& label : labels) {
                if (word == label) seen.insert(label);  // uppercase match only
            }
        } else if (upper(word) == kAbstain) {
            seen.insert(std::string(kAbstain));
        }
    }
    if (seen.size() == 1) return {{*seen.begin(), ParseStatus::recovered}};
    return std::nullopt;
}

inline std::vector<std::string> candidate_labels(size_t n) {
    std::vector<std::string> labels;
    for (size_t i = 0; i < n; ++i) labels.push_back(std::string(1, static_cast<char>('A' + i)));
    return labels;
}

inline std::string label_list(const std::vector<std::string>& labels) {
    if (labels.size() == 2) return labels[0] + " or " + labels[1];
    std::string out;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (i > 0) out += i + 1 == labels.size() ? " or " : ", ";
        out += labels[i];
    }
    return out;
}

struct BallotPrompt {
    std::string system;
    std::string user;
};

inline BallotPrompt build_ballot_prompt(const JudgePanel& panel, const JudgePersona& judge,
                                        const std::string& question,
                                        const std::vector<Candidate>& presented,
                                        bool authenticity) {
    BallotPrompt p;
    p.system = judge.system_prompt;
    if (!judge.demonstration_responses.empty()) {
        p.system += "\n\nDemonstration responses you have studied:";
        for (const auto& demo : judge.demonstration_responses) p.system += "\n- " + demo;
    }
    auto labels = candidate_labels(presented.size());
    p.user = "Question: " + question + "\n\nCandidate responses:\n";
    for (size_t i = 0; i < presented.size(); ++i) {
        p.user += labels[i] + ": " + presented[i].response + "\n";
    }
    p.user += "\n";
    if (authenticity) {
        p.user += "Decide which response is most likely an LLM.";
    } else {
        p.user += "Decide which candidate this judge " + panel.action_verb + ".";
    }
    p.user += " Reply with exactly one label (" + label_list(labels) + ") and nothing else, or "
              "reply ABSTAIN (meaning: " + panel.abstain_action + ").";
    return p;
}

inline Ballot run_ballot(const JudgePanel& panel, const JudgePersona& judge,
                         const std::string& question_id, const std::string& question,
                         const std::vector<Candidate>& candidates, ChatClient& client,
                         const BallotOptions& opts, uint64_t rng_seed, bool authenticity) {
    if (candidates.size() < 2)
        throw std::invalid_argument("ballot needs at least 2 candidates, got " +
                                    std::to_string(candidates.size()));
    if (candidates.size() > 26) throw std::invalid_argument("ballot supports at most 26 candidates");
    for (const auto& c : candidates) {
        if (trim(c.response).empty())
            throw std::invalid_argument("candidate '" + c.id + "' has an empty response");
    }

    std::vector<Candidate> presented = candidates;
    std::mt19937_64 rng(rng_seed);
    deterministic_shuffle(presented, rng);

    Ballot ballot;
    ballot.judge_name = judge.name;
    ballot.question_id = question_id;
    for (const auto& c : presented) ballot.presented_order.push_back(c.id);

    auto labels = candidate_labels(presented.size());
    BallotPrompt prompt = build_ballot_prompt(panel, judge, question, presented, authenticity);

    CompletionRequest req;
    req.model_name = opts.model;
    req.temperature = opts.temperature;
    req.seed = static_cast<int64_t>(rng_seed);
    req.max_tokens = opts.max_tokens;
    req.messages = {{"system", prompt.system}, {"user", prompt.user}};

    auto resolve = [&](const std::string& raw) -> std::optional<std::pair<std::string, ParseStatus>> {
        auto parsed = parse_judge_choice(raw, labels);
        if (!parsed) return std::nullopt;
        if (parsed->first == kAbstain) return parsed;
        for (size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == parsed->first) return {{presented[i].id, parsed->second}};
        }
        return std::nullopt;
    };

    Completion first = client.complete(req);
    ballot.raw_judge_text = first.text;
    if (auto parsed = resolve(first.text)) {
        ballot.choice = parsed->first;
        ballot.parse_status = parsed->second;
        return ballot;
    }

    // one clarifying retry, then a forced abstention
    CompletionRequest retry = req;
    retry.messages.push_back({"assistant", first.text});
    retry.messages.push_back({"user", "Answer with exactly one label (" + label_list(labels) +
                                          ") or ABSTAIN, and nothing else."});
    Completion second = client.complete(retry);
    ballot.raw_judge_text += "\n---\n" + second.text;
    if (auto parsed = resolve(second.text)) {
        ballot.choice = parsed->first;
        ballot.parse_status = ParseStatus::recovered;
        return ballot;
    }
    ballot.choice = kAbstain;
    ballot.parse_status = ParseStatus::forced_abstain;
    return ballot;
}

}  // namespace detail

// Shuffles candidates with the seeded generator, asks the judge for a
// single-label verdict, and parses it; unparseable output triggers one
// clarifying retry, then a forced abstention. Never throws on judge prose.
inline Ballot cast_ballot(const JudgePanel& panel, const JudgePersona& judge,
                          const std::string& question_id, const std::string& question,
                          const std::vector<Candidate>& candidates, ChatClient& client,
                          const BallotOptions& opts, uint64_t rng_seed) {
    return detail::run_ballot(panel, judge, question_id, question, candidates, client, opts,
                              rng_seed, /*authenticity=*/false);
}

// Same protocol, but the judge is asked which response is most likely an LLM
// and its demonstration responses are embedded in the system prompt.
inline Ballot authenticity_ballot(const JudgePanel& panel, const JudgePersona& judge,
                                  const std::string& question_id, const std::string& question,
                                  const std::vector<Candidate>& candidates, ChatClient& client,
                                  const BallotOptions& opts, uint64_t rng_seed) {
    return detail::run_ballot(panel, judge, question_id, question, candidates, client, opts,
                              rng_seed, /*authenticity=*/true);
}

// ---------------------------------------------------------------------------
// Tally
// ---------------------------------------------------------------------------

struct Tally {
    std::map<std::string, int> per_candidate;
    int abstentions = 0;
    int ballots_cast = 0;
};

inline Tally tally(const std::vector<Ballot>& ballots) {
    Tally t;
    if (ballots.empty()) return t;
    std::set<std::string> universe(ballots[0].presented_order.begin(),
                                   ballots[0].presented_order.end());
    for (const auto& b : ballots) {
        std::set<std::string> candidates(b.presented_order.begin(), b.presented_order.end());
        if (candidates != universe)
            throw MixedUniverse("ballots disagree on the candidate universe");
    }
    for (const auto& id : universe) t.per_candidate[id] = 0;
    for (const auto& b : ballots) {
        ++t.ballots_cast;
        if (b.choice == kAbstain) {
            ++t.abstentions;
        } else {
            ++t.per_candidate.at(b.choice);
        }
    }
    return t;
}

}  // namespace r2r
