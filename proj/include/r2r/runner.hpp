#pragma once

#include <ctime>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "r2r/corpus.hpp"
#include "r2r/crowdvote.hpp"
#include "r2r/errors.hpp"
#include "r2r/gateway.hpp"
#include "r2r/metrics.hpp"
#include "r2r/promptgen.hpp"

namespace r2r {

struct Question {
    std::string id;
    std::string text;
    std::optional<std::string> category;
    bool single_token_answer = false;
    std::optional<std::string> expected_answer;
};

struct SettingSpec {
    std::string name;
    std::filesystem::path questions_path;
    Setting panel = Setting::election;
    std::string blurb;  // zero-shot framing, e.g. "ahead of the 2024 election"
    std::optional<std::string> context_notes;
    std::optional<std::vector<std::string>> characters;  // names; absent -> all
    std::optional<std::filesystem::path> human_responses;
};

struct ExperimentConfig {
    std::vector<std::filesystem::path> characters;
    std::vector<Framework> frameworks;
    std::vector<SettingSpec> settings;
    int trials = 3;
    double temperature = 0.1;
    int64_t base_seed = 0;
    size_t token_budget = 4096;
    int max_tokens = 256;
    std::string subject_endpoint;
    std::vector<std::string> judge_endpoints;
    std::map<std::string, EndpointConfig> endpoints;
    std::optional<std::filesystem::path> tokenizer_dir;
    std::optional<std::filesystem::path> stopwords_path;
    std::filesystem::path output_dir;
};

// ---------------------------------------------------------------------------
// Config / question loading
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown_config_keys(const nlohmann::json& obj,
                                       const std::set<std::string>& allowed,
                                       const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

inline std::filesystem::path resolve_path(const std::filesystem::path& base,
                                          const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace detail

inline std::vector<Question> load_questions(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("question file " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("questions") || !doc["questions"].is_array())
        throw ConfigError("question file " + path.string() + " must contain a 'questions' array");
    std::vector<Question> questions;
    std::set<std::string> ids;
    for (const auto& q : doc["questions"]) {
        detail::reject_unknown_config_keys(
            q, {"id", "text", "category", "single_token_answer", "expected_answer"},
            "question file " + path.string());
        Question question;
        if (!q.contains("id") || !q["id"].is_string())
            throw ConfigError("question in " + path.string() + " misses a string 'id'");
        question.id = q["id"].get<std::string>();
        if (!ids.insert(question.id).second)
            throw ConfigError("duplicate question id '" + question.id + "' in " + path.string());
        if (!q.contains("text") || !q["text"].is_string())
            throw ConfigError("question '" + question.id + "' in " + path.string() +
                              " misses a string 'text'");
        question.text = q["text"].get<std::string>();
        if (q.contains("category") && !q["category"].is_null())
            question.category = q["category"].get<std::string>();
        if (q.contains("single_token_answer") && !q["single_token_answer"].is_null())
            question.single_token_answer = q["single_token_answer"].get<bool>();
        if (q.contains("expected_answer") && !q["expected_answer"].is_null())
            question.expected_answer = q["expected_answer"].get<std::string>();
        questions.push_back(std::move(question));
    }
    if (questions.empty())
        throw ConfigError("question file " + path.string() + " contains no questions");
    return questions;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    const std::filesystem::path base = path.has_parent_path()
                                           ? path.parent_path()
                                           : std::filesystem::path(".");
    detail::reject_unknown_config_keys(
        doc,
        {"characters", "frameworks", "settings", "trials", "temperature", "base_seed",
         "token_budget", "max_tokens", "subject_endpoint", "judge_endpoints", "endpoints",
         "tokenizer", "stopwords", "output_dir"},
        "config");

    ExperimentConfig config;
    for (const auto& c : doc.value("characters", nlohmann::json::array()))
        config.characters.push_back(detail::resolve_path(base, c.get<std::string>()));
    for (const auto& f : doc.value("frameworks", nlohmann::json::array())) {
        auto fw = framework_from(f.get<std::string>());
        if (!fw) throw ConfigError("unknown framework '" + f.get<std::string>() + "'");
        config.frameworks.push_back(*fw);
    }
    if (!doc.contains("settings") || !doc["settings"].is_array() || doc["settings"].empty())
        throw ConfigError("config needs at least one setting");
    for (const auto& s : doc["settings"]) {
        detail::reject_unknown_config_keys(s,
                                           {"name", "questions", "panel", "blurb",
                                            "context_notes", "characters", "human_responses"},
                                           "setting");
        SettingSpec spec;
        spec.name = s.value("name", std::string{});
        if (spec.name.empty()) throw ConfigError("setting misses a 'name'");
        if (!s.contains("questions"))
            throw ConfigError("setting '" + spec.name + "' misses 'questions'");
        spec.questions_path = detail::resolve_path(base, s["questions"].get<std::string>());
        auto panel = setting_from(s.value("panel", std::string{}));
        if (!panel)
            throw ConfigError("setting '" + spec.name + "' has an unknown panel '" +
                              s.value("panel", std::string{}) + "'");
        spec.panel = *panel;
        spec.blurb = s.value("blurb", std::string{});
        if (s.contains("context_notes") && !s["context_notes"].is_null())
            spec.context_notes = s["context_notes"].get<std::string>();
        if (s.contains("characters") && !s["characters"].is_null()) {
            std::vector<std::string> names;
            for (const auto& n : s["characters"]) names.push_back(n.get<std::string>());
            spec.characters = std::move(names);
        }
        if (s.contains("human_responses") && !s["human_responses"].is_null())
            spec.human_responses =
                detail::resolve_path(base, s["human_responses"].get<std::string>());
        config.settings.push_back(std::move(spec));
    }
    config.trials = doc.value("trials", 3);
    if (config.trials < 1) throw ConfigError("trials must be >= 1");
    config.temperature = doc.value("temperature", 0.1);
    config.base_seed = doc.value("base_seed", int64_t{0});
    config.token_budget = doc.value("token_budget", size_t{4096});
    config.max_tokens = doc.value("max_tokens", 256);
    config.subject_endpoint = doc.value("subject_endpoint", std::string{});
    for (const auto& j : doc.value("judge_endpoints", nlohmann::json::array()))
        config.judge_endpoints.push_back(j.get<std::string>());
    if (doc.contains("endpoints")) {
        for (auto it = doc["endpoints"].begin(); it != doc["endpoints"].end(); ++it) {
            const auto& e = *it;
            detail::reject_unknown_config_keys(e,
                                               {"base_url", "model", "api_key_env", "mode",
                                                "cassette", "max_in_flight", "retries",
                                                "backoff_ms"},
                                               "endpoint '" + it.key() + "'");
            EndpointConfig endpoint;
            endpoint.name = it.key();
            endpoint.base_url = e.value("base_url", std::string{});
            endpoint.model = e.value("model", std::string{});
            endpoint.api_key_env = e.value("api_key_env", std::string{});
            auto mode = gateway_mode_from(e.value("mode", std::string{"replay"}));
            if (!mode)
                throw ConfigError("endpoint '" + it.key() + "' has an unknown mode '" +
                                  e.value("mode", std::string{}) + "'");
            endpoint.mode = *mode;
            if (e.contains("cassette") && !e["cassette"].is_null())
                endpoint.cassette = detail::resolve_path(base, e["cassette"].get<std::string>());
            endpoint.max_in_flight = e.value("max_in_flight", 4);
            endpoint.retry.attempts = e.value("retries", 3);
            endpoint.retry.backoff_ms = e.value("backoff_ms", 100);
            config.endpoints.emplace(it.key(), std::move(endpoint));
        }
    }
    if (doc.contains("tokenizer") && !doc["tokenizer"].is_null())
        config.tokenizer_dir = detail::resolve_path(base, doc["tokenizer"].get<std::string>());
    if (doc.contains("stopwords") && !doc["stopwords"].is_null())
        config.stopwords_path = detail::resolve_path(base, doc["stopwords"].get<std::string>());
    config.output_dir = detail::resolve_path(base, doc.value("output_dir", std::string{"runs/out"}));

    if (config.characters.empty()) throw ConfigError("config needs at least one character");
    if (config.frameworks.empty()) throw ConfigError("config needs at least one framework");
    if (config.subject_endpoint.empty() || !config.endpoints.count(config.subject_endpoint))
        throw ConfigError("config needs a subject_endpoint defined under endpoints");
    for (const auto& j : config.judge_endpoints) {
        if (!config.endpoints.count(j))
            throw ConfigError("judge endpoint '" + j + "' is not defined under endpoints");
    }
    return config;
}

// ---------------------------------------------------------------------------
// Resolution and enumeration
// ---------------------------------------------------------------------------

struct ResolvedSetting {
    SettingSpec spec;
    std::vector<Question> questions;
    std::map<std::string, std::string> human_responses;  // question id -> text
    std::vector<std::string> character_names;            // applicable, config order
};

struct ResolvedExperiment {
    ExperimentConfig config;
    std::vector<CharacterCorpus> corpora;  // parallel to config.characters
    std::vector<ResolvedSetting> settings;
};

inline ResolvedExperiment resolve_experiment(const ExperimentConfig& config) {
    ResolvedExperiment exp;
    exp.config = config;
    std::vector<std::string> names;
    for (const auto& path : config.characters) {
        CharacterCorpus corpus = load_corpus(path);
        ValidationReport report = validate_corpus(corpus);
        if (!report.ok())
            throw ConfigError("corpus " + path.string() + " has " +
                              std::to_string(report.error_count()) + " validation error(s)");
        names.push_back(corpus.character_name);
        exp.corpora.push_back(std::move(corpus));
    }
    for (const auto& spec : config.settings) {
        ResolvedSetting rs;
        rs.spec = spec;
        rs.questions = load_questions(spec.questions_path);
        if (spec.human_responses) {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(read_file(*spec.human_responses));
            } catch (const nlohmann::json::parse_error& e) {
                throw ConfigError("human responses file " + spec.human_responses->string() +
                                  " is not valid JSON: " + e.what());
            }
            for (auto it = doc.begin(); it != doc.end(); ++it)
                rs.human_responses[it.key()] = it->get<std::string>();
        }
        if (spec.characters) {
            for (const auto& want : *spec.characters) {
                bool known = false;
                for (const auto& have : names) known |= have == want;
                if (!known)
                    throw ConfigError("setting '" + spec.name + "' names unknown character '" +
                                      want + "'");
            }
            for (const auto& have : names) {
                for (const auto& want : *spec.characters) {
                    if (have == want) rs.character_names.push_back(have);
                }
            }
        } else {
            rs.character_names = names;
        }
        exp.settings.push_back(std::move(rs));
    }
    return exp;
}

struct Cell {
    std::string character;
    Framework framework = Framework::r2r;
    std::string setting;
    std::string question_id;
    int trial = 0;
    bool operator==(const Cell&) const = default;
};

// Deterministic (character, framework, setting, question, trial) ordering.
inline std::vector<Cell> enumerate_cells(const ResolvedExperiment& exp) {
    std::vector<Cell> cells;
    for (const auto& corpus : exp.corpora) {
        for (Framework framework : exp.config.frameworks) {
            for (const auto& setting : exp.settings) {
                bool applicable = false;
                for (const auto& n : setting.character_names)
                    applicable |= n == corpus.character_name;
                if (!applicable) continue;
                for (const auto& question : setting.questions) {
                    for (int trial = 0; trial < exp.config.trials; ++trial) {
                        cells.push_back({corpus.character_name, framework, setting.spec.name,
                                         question.id, trial});
                    }
                }
            }
        }
    }
    return cells;
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct InteractionRecord {
    std::string character;
    Framework framework = Framework::r2r;
    std::string setting;
    std::string question_id;
    int trial = 0;
    std::string prompt_fingerprint;
    std::string response;
    MetricReport metrics;
    std::optional<ConfidenceReading> confidence;
    std::string started_at;
    std::string finished_at;
};

inline nlohmann::json metric_report_to_json(const MetricReport& m) {
    nlohmann::json j;
    j["ioo"] = m.ioo ? nlohmann::json(*m.ioo) : nlohmann::json(nullptr);
    j["ior"] = m.ior ? nlohmann::json(*m.ior) : nlohmann::json(nullptr);
    j["lcs"] = m.lcs;
    j["nlcs"] = m.nlcs;
    j["nlcs_by_out"] = m.nlcs_by_out;
    j["ld"] = m.ld;
    j["nld"] = m.nld;
    j["ref_len"] = m.ref_len;
    j["out_len"] = m.out_len;
    return j;
}

inline MetricReport metric_report_from_json(const nlohmann::json& j) {
    MetricReport m;
    if (j.contains("ioo") && !j["ioo"].is_null()) m.ioo = j["ioo"].get<double>();
    if (j.contains("ior") && !j["ior"].is_null()) m.ior = j["ior"].get<double>();
    m.lcs = j.value("lcs", size_t{0});
    m.nlcs = j.value("nlcs", 0.0);
    m.nlcs_by_out = j.value("nlcs_by_out", 0.0);
    m.ld = j.value("ld", size_t{0});
    m.nld = j.value("nld", 0.0);
    m.ref_len = j.value("ref_len", size_t{0});
    m.out_len = j.value("out_len", size_t{0});
    return m;
}

inline nlohmann::json record_to_json(const InteractionRecord& r) {
    nlohmann::json j;
    j["character"] = r.character;
    j["framework"] = to_string(r.framework);
    j["setting"] = r.setting;
    j["question_id"] = r.question_id;
    j["trial"] = r.trial;
    j["prompt_fingerprint"] = r.prompt_fingerprint;
    j["response"] = r.response;
    j["metrics"] = metric_report_to_json(r.metrics);
    if (r.confidence) {
        j["confidence"] = {{"answer_token", r.confidence->answer_token},
                           {"probability", r.confidence->probability},
                           {"rank_in_top_k", r.confidence->rank_in_top_k}};
    } else {
        j["confidence"] = nullptr;
    }
    j["started_at"] = r.started_at;
    j["finished_at"] = r.finished_at;
    return j;
}

inline InteractionRecord record_from_json(const nlohmann::json& j) {
    InteractionRecord r;
    r.character = j.at("character").get<std::string>();
    r.framework = *framework_from(j.at("framework").get<std::string>());
    r.setting = j.at("setting").get<std::string>();
    r.question_id = j.at("question_id").get<std::string>();
    r.trial = j.at("trial").get<int>();
    r.prompt_fingerprint = j.value("prompt_fingerprint", std::string{});
    r.response = j.value("response", std::string{});
    r.metrics = metric_report_from_json(j.at("metrics"));
    if (j.contains("confidence") && !j["confidence"].is_null()) {
        ConfidenceReading c;
        c.answer_token = j["confidence"].value("answer_token", std::string{});
        c.probability = j["confidence"].value("probability", 0.0);
        c.rank_in_top_k = j["confidence"].value("rank_in_top_k", 1);
        r.confidence = c;
    }
    r.started_at = j.value("started_at", std::string{});
    r.finished_at = j.value("finished_at", std::string{});
    return r;
}

struct BallotRecord {
    std::string setting;
    std::string character;
    std::string backbone;
    Ballot ballot;
    int trial = 0;
};

inline nlohmann::json ballot_record_to_json(const BallotRecord& b) {
    nlohmann::json j;
    j["setting"] = b.setting;
    j["character"] = b.character;
    j["backbone"] = b.backbone;
    j["judge"] = b.ballot.judge_name;
    j["question_id"] = b.ballot.question_id;
    j["trial"] = b.trial;
    j["presented_order"] = b.ballot.presented_order;
    j["choice"] = b.ballot.choice;
    j["parse_status"] = to_string(b.ballot.parse_status);
    j["raw_judge_text"] = b.ballot.raw_judge_text;
    return j;
}

inline BallotRecord ballot_record_from_json(const nlohmann::json& j) {
    BallotRecord b;
    b.setting = j.at("setting").get<std::string>();
    b.character = j.at("character").get<std::string>();
    b.backbone = j.at("backbone").get<std::string>();
    b.ballot.judge_name = j.at("judge").get<std::string>();
    b.ballot.question_id = j.at("question_id").get<std::string>();
    b.trial = j.at("trial").get<int>();
    for (const auto& id : j.at("presented_order")) b.ballot.presented_order.push_back(id);
    b.ballot.choice = j.at("choice").get<std::string>();
    std::string status = j.value("parse_status", std::string{"clean"});
    b.ballot.parse_status = status == "clean"       ? ParseStatus::clean
                            : status == "recovered" ? ParseStatus::recovered
                                                    : ParseStatus::forced_abstain;
    b.ballot.raw_judge_text = j.value("raw_judge_text", std::string{});
    return b;
}

// ---------------------------------------------------------------------------
// The experiment loop
// ---------------------------------------------------------------------------

namespace detail {

inline std::string utc_now_iso8601() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline constexpr const char* kEpochIso8601 = "1970-01-01T00:00:00Z";

inline uint64_t ballot_seed(int64_t base_seed, const std::string& setting,
                            const std::string& character, const std::string& question_id,
                            int trial, const std::string& backbone, const std::string& judge) {
    std::string key = std::to_string(base_seed) + '\x1f' + setting + '\x1f' + character + '\x1f' +
                      question_id + '\x1f' + std::to_string(trial) + '\x1f' + backbone + '\x1f' +
                      judge;
    return fnv1a64(key);
}

}  // namespace detail

nlohmann::json emit_reports(const std::filesystem::path& run_dir);  // report.hpp

struct RunOptions {
    std::optional<std::filesystem::path> output_dir;  // overrides config
    std::shared_ptr<ChatClient> subject_client;       // test/synth injection
    std::map<std::string, std::shared_ptr<ChatClient>> judge_clients;
};

inline nlohmann::json build_manifest(const ResolvedExperiment& exp, bool replay_only) {
    nlohmann::ordered_json m;
    auto& chars = m["characters"] = nlohmann::ordered_json::array();
    for (const auto& corpus : exp.corpora) {
        chars.push_back({{"name", corpus.character_name},
                         {"description", corpus.character_description}});
    }
    auto& fws = m["frameworks"] = nlohmann::ordered_json::array();
    for (auto f : exp.config.frameworks) fws.push_back(to_string(f));
    auto& settings = m["settings"] = nlohmann::ordered_json::array();
    for (const auto& s : exp.settings) {
        nlohmann::ordered_json js;
        js["name"] = s.spec.name;
        js["panel"] = to_string(s.spec.panel);
        js["blurb"] = s.spec.blurb;
        js["context_notes"] =
            s.spec.context_notes ? nlohmann::json(*s.spec.context_notes) : nlohmann::json(nullptr);
        js["characters"] = s.character_names;
        auto& qs = js["questions"] = nlohmann::ordered_json::array();
        for (const auto& q : s.questions) {
            nlohmann::ordered_json jq;
            jq["id"] = q.id;
            jq["text"] = q.text;
            jq["category"] = q.category ? nlohmann::json(*q.category) : nlohmann::json(nullptr);
            jq["single_token_answer"] = q.single_token_answer;
            jq["expected_answer"] =
                q.expected_answer ? nlohmann::json(*q.expected_answer) : nlohmann::json(nullptr);
            qs.push_back(std::move(jq));
        }
        if (s.human_responses.empty()) {
            js["human_responses"] = nullptr;
        } else {
            nlohmann::ordered_json hr;
            for (const auto& [qid, text] : s.human_responses) hr[qid] = text;
            js["human_responses"] = std::move(hr);
        }
        settings.push_back(std::move(js));
    }
    m["trials"] = exp.config.trials;
    m["temperature"] = exp.config.temperature;
    m["base_seed"] = exp.config.base_seed;
    m["token_budget"] = exp.config.token_budget;
    m["max_tokens"] = exp.config.max_tokens;
    m["subject_endpoint"] = exp.config.subject_endpoint;
    m["subject_model"] = exp.config.endpoints.count(exp.config.subject_endpoint)
                             ? exp.config.endpoints.at(exp.config.subject_endpoint).model
                             : "";
    m["judge_endpoints"] = exp.config.judge_endpoints;
    nlohmann::ordered_json judge_models = nlohmann::ordered_json::object();
    for (const auto& name : exp.config.judge_endpoints) {
        judge_models[name] =
            exp.config.endpoints.count(name) ? exp.config.endpoints.at(name).model : "";
    }
    m["judge_models"] = std::move(judge_models);
    m["replay_only"] = replay_only;
    return m;
}

// Runs every enumerated cell, casts panel ballots over the per-question
// candidate responses, persists records/ballots/failures, and emits reports.
// Per-cell gateway failures land in failures.jsonl; nothing is dropped
// silently. Returns the run directory.
inline std::filesystem::path run_experiment(const ExperimentConfig& config,
                                            const RunOptions& run_opts = {}) {
    ResolvedExperiment exp = resolve_experiment(config);

    bool replay_only = true;
    for (const auto& [name, endpoint] : config.endpoints)
        replay_only &= endpoint.mode == GatewayMode::replay;
    if (run_opts.subject_client) replay_only = false;

    std::filesystem::path run_dir = run_opts.output_dir.value_or(config.output_dir);
    std::filesystem::create_directories(run_dir);

    write_file(run_dir / "manifest.json", build_manifest(exp, replay_only).dump(2) + "\n");

    // metric environment
    NormalizationRules rules;
    if (config.stopwords_path) rules.stopword_list = load_stopwords(*config.stopwords_path);
    TokenizerHandle tokenizer = config.tokenizer_dir
                                    ? TokenizerHandle(SubwordTokenizer::load(*config.tokenizer_dir))
                                    : word_tokenizer();

    // clients
    std::shared_ptr<ChatClient> subject =
        run_opts.subject_client
            ? run_opts.subject_client
            : std::shared_ptr<ChatClient>(make_client(config.endpoints.at(config.subject_endpoint)));
    std::map<std::string, std::shared_ptr<ChatClient>> judges;
    for (const auto& name : config.judge_endpoints) {
        auto it = run_opts.judge_clients.find(name);
        judges[name] = it != run_opts.judge_clients.end()
                           ? it->second
                           : std::shared_ptr<ChatClient>(make_client(config.endpoints.at(name)));
    }

    std::ofstream records_out(run_dir / "records.jsonl", std::ios::binary | std::ios::trunc);
    std::ofstream ballots_out(run_dir / "ballots.jsonl", std::ios::binary | std::ios::trunc);
    std::ofstream failures_out(run_dir / "failures.jsonl", std::ios::binary | std::ios::trunc);

    auto log_failure = [&](const std::string& kind, const Cell& cell, const std::string& stage,
                           const std::string& error) {
        nlohmann::json j;
        j["kind"] = kind;
        j["character"] = cell.character;
        j["framework"] = kind == "interaction" ? to_string(cell.framework) : "*";
        j["setting"] = cell.setting;
        j["question_id"] = cell.question_id;
        j["trial"] = cell.trial;
        j["stage"] = stage;
        j["error"] = error;
        failures_out << j.dump() << "\n";
    };

    // prompt bundles, cached per (character, framework, setting)
    std::map<std::string, PromptBundle> bundles;
    auto bundle_for = [&](size_t char_idx, Framework framework,
                          const ResolvedSetting& setting) -> const PromptBundle& {
        std::string key = std::to_string(char_idx) + '\x1f' + to_string(framework) + '\x1f' +
                          setting.spec.name;
        auto it = bundles.find(key);
        if (it != bundles.end()) return it->second;
        PromptOptions opts;
        opts.token_budget = config.token_budget;
        opts.context_notes = setting.spec.context_notes;
        opts.tokenizer = tokenizer;
        PromptBundle bundle =
            build_prompt(framework, exp.corpora[char_idx], opts, setting.spec.blurb);
        return bundles.emplace(key, std::move(bundle)).first->second;
    };

    const std::string subject_model = config.endpoints.at(config.subject_endpoint).model;

    // interactions, in enumeration order
    struct ResponseKey {
        std::string character, setting, question_id;
        int trial;
        Framework framework;
        auto operator<=>(const ResponseKey&) const = default;
    };
    std::map<ResponseKey, std::string> responses;

    for (size_t char_idx = 0; char_idx < exp.corpora.size(); ++char_idx) {
        const auto& corpus = exp.corpora[char_idx];
        for (Framework framework : config.frameworks) {
            for (const auto& setting : exp.settings) {
                bool applicable = false;
                for (const auto& n : setting.character_names)
                    applicable |= n == corpus.character_name;
                if (!applicable) continue;
                for (const auto& question : setting.questions) {
                    for (int trial = 0; trial < config.trials; ++trial) {
                        Cell cell{corpus.character_name, framework, setting.spec.name,
                                  question.id, trial};
                        try {
                            const PromptBundle& bundle = bundle_for(char_idx, framework, setting);
                            CompletionRequest req;
                            req.model_name = subject_model;
                            req.messages = {{"system", bundle.rendered},
                                            {"user", question.text}};
                            req.temperature = config.temperature;
                            req.seed = config.base_seed + trial;
                            req.want_logprobs = question.single_token_answer;
                            req.max_tokens = config.max_tokens;

                            InteractionRecord record;
                            record.character = cell.character;
                            record.framework = framework;
                            record.setting = cell.setting;
                            record.question_id = cell.question_id;
                            record.trial = trial;
                            record.prompt_fingerprint = request_fingerprint(req);
                            record.started_at = replay_only ? detail::kEpochIso8601
                                                            : detail::utc_now_iso8601();
                            Completion completion = subject->complete(req);
                            record.response = completion.text;
                            record.metrics = score_interaction(bundle.reference_dialogue,
                                                               completion.text, rules, *tokenizer);
                            if (question.single_token_answer && completion.token_logprobs)
                                record.confidence = first_token_confidence(completion);
                            record.finished_at = replay_only ? detail::kEpochIso8601
                                                             : detail::utc_now_iso8601();
                            records_out << record_to_json(record).dump() << "\n";
                            responses[{cell.character, cell.setting, cell.question_id, trial,
                                       framework}] = completion.text;
                        } catch (const Error& e) {
                            log_failure("interaction", cell, "completion", e.what());
                        }
                    }
                }
            }
        }
    }
    records_out.flush();

    // ballots: per setting, per applicable character, per question, per trial
    for (const auto& setting : exp.settings) {
        JudgePanel panel = build_panel(setting.spec.panel);
        for (const auto& character : setting.character_names) {
            for (const auto& question : setting.questions) {
                for (int trial = 0; trial < config.trials; ++trial) {
                    Cell cell{character, Framework::r2r, setting.spec.name, question.id, trial};
                    std::vector<Candidate> candidates;
                    bool missing = false;
                    std::string missing_framework;
                    for (Framework framework : config.frameworks) {
                        auto it = responses.find(
                            {character, setting.spec.name, question.id, trial, framework});
                        if (it == responses.end() || trim(it->second).empty()) {
                            missing = true;
                            missing_framework = to_string(framework);
                            break;
                        }
                        candidates.push_back({to_string(framework), it->second});
                    }
                    if (auto hr = setting.human_responses.find(question.id);
                        !missing && hr != setting.human_responses.end()) {
                        candidates.push_back({"human", hr->second});
                    }
                    if (missing) {
                        log_failure("ballots", cell, "candidates",
                                    "no usable response for framework " + missing_framework);
                        continue;
                    }
                    if (candidates.size() < 2) {
                        log_failure("ballots", cell, "candidates",
                                    "fewer than 2 candidates available");
                        continue;
                    }
                    for (const auto& backbone : config.judge_endpoints) {
                        BallotOptions opts;
                        opts.model = config.endpoints.at(backbone).model;
                        for (const auto& judge : panel.judges) {
                            uint64_t seed = detail::ballot_seed(config.base_seed,
                                                                setting.spec.name, character,
                                                                question.id, trial, backbone,
                                                                judge.name);
                            try {
                                Ballot ballot =
                                    setting.spec.panel == Setting::authenticity
                                        ? authenticity_ballot(panel, judge, question.id,
                                                              question.text, candidates,
                                                              *judges.at(backbone), opts, seed)
                                        : cast_ballot(panel, judge, question.id, question.text,
                                                      candidates, *judges.at(backbone), opts,
                                                      seed);
                                BallotRecord record{setting.spec.name, character, backbone,
                                                    std::move(ballot), trial};
                                ballots_out << ballot_record_to_json(record).dump() << "\n";
                            } catch (const Error& e) {
                                log_failure("ballots", cell, "judge:" + judge.name, e.what());
                            }
                        }
                    }
                }
            }
        }
    }
    ballots_out.flush();
    failures_out.flush();
    records_out.close();
    ballots_out.close();
    failures_out.close();

    emit_reports(run_dir);
    return run_dir;
}

}  // namespace r2r

#include "r2r/report.hpp"  // provides emit_reports for run_experiment callers
