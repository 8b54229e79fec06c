#pragma once

#include <compare>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "r2r/errors.hpp"
#include "r2r/text.hpp"
#include "r2r/util.hpp"

namespace r2r {

enum class EmotiveLabel { angry, happy, neutral };
enum class DemonstrationKind { catchphrase_standalone, long_form };
enum class PseudoDatumKind { boundary_enforcement, parody };

inline std::string to_string(EmotiveLabel e) {
    switch (e) {
        case EmotiveLabel::angry: return "angry";
        case EmotiveLabel::happy: return "happy";
        default: return "neutral";
    }
}

inline std::string to_string(DemonstrationKind k) {
    return k == DemonstrationKind::catchphrase_standalone ? "catchphrase_standalone"
                                                          : "long_form";
}

inline std::string to_string(PseudoDatumKind k) {
    return k == PseudoDatumKind::boundary_enforcement ? "boundary_enforcement" : "parody";
}

inline std::optional<EmotiveLabel> emotive_label_from(const std::string& s) {
    if (s == "angry") return EmotiveLabel::angry;
    if (s == "happy") return EmotiveLabel::happy;
    if (s == "neutral") return EmotiveLabel::neutral;
    return std::nullopt;
}

struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;

    static std::optional<Date> parse(const std::string& s) {
        Date d;
        char extra;
        if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &d.year, &d.month, &d.day, &extra) != 3)
            return std::nullopt;
        if (s.size() != 10 || d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
            return std::nullopt;
        return d;
    }

    std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
        return buf;
    }
};

struct CatchphraseGroup {
    std::string usage_label;
    std::vector<std::string> phrases;
    bool operator==(const CatchphraseGroup&) const = default;
};

struct Demonstration {
    EmotiveLabel emotive_label = EmotiveLabel::neutral;
    std::optional<std::string> scenario;
    DemonstrationKind kind = DemonstrationKind::long_form;
    std::string text;
    bool operator==(const Demonstration&) const = default;
};

struct PseudoDatum {
    PseudoDatumKind kind = PseudoDatumKind::boundary_enforcement;
    std::string text;
    bool operator==(const PseudoDatum&) const = default;
};

struct SourceRecord {
    std::string source_description;
    Date event_date;
    bool transcribed_from_audio = false;
    bool after_training_cutoff = false;
    bool operator==(const SourceRecord&) const = default;
};

// Demonstrations are always the character's own lines; the data model has no
// dialogue-partner slot, so interviewer context can never leak into a corpus.
struct CharacterCorpus {
    std::string character_name;
    std::string character_description;
    std::vector<CatchphraseGroup> catchphrase_groups;
    std::vector<Demonstration> demonstrations;
    std::vector<PseudoDatum> pseudo_data;
    std::vector<SourceRecord> provenance;
    bool operator==(const CharacterCorpus&) const = default;
};

// ---------------------------------------------------------------------------
// File schema. Top-level keys: character, description, catchphrases,
// demonstrations, pseudo_data, sources. Unknown keys are errors anywhere.
// ---------------------------------------------------------------------------

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw SchemaError("unknown key '" + it.key() + "' in " + where);
    }
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError("missing key '" + std::string(key) + "' in " + where);
    return *it;
}

inline std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string()) throw SchemaError("key '" + std::string(key) + "' in " + where + " must be a string");
    return v.get<std::string>();
}

inline bool require_bool(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_boolean()) throw SchemaError("key '" + std::string(key) + "' in " + where + " must be a boolean");
    return v.get<bool>();
}

inline const json& require_array(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_array()) throw SchemaError("key '" + std::string(key) + "' in " + where + " must be an array");
    return v;
}

}  // namespace detail

inline CharacterCorpus parse_corpus(const nlohmann::json& doc) {
    using detail::reject_unknown_keys;
    using detail::require;
    using detail::require_array;
    using detail::require_bool;
    using detail::require_string;

    if (!doc.is_object()) throw SchemaError("corpus document must be an object");
    reject_unknown_keys(doc, {"character", "description", "catchphrases", "demonstrations",
                              "pseudo_data", "sources"},
                        "corpus document");

    CharacterCorpus corpus;
    corpus.character_name = require_string(doc, "character", "corpus document");
    corpus.character_description = require_string(doc, "description", "corpus document");

    size_t i = 0;
    for (const auto& g : require_array(doc, "catchphrases", "corpus document")) {
        std::string where = "catchphrases[" + std::to_string(i++) + "]";
        if (!g.is_object()) throw SchemaError(where + " must be an object");
        reject_unknown_keys(g, {"label", "phrases"}, where);
        CatchphraseGroup group;
        group.usage_label = require_string(g, "label", where);
        for (const auto& p : require_array(g, "phrases", where)) {
            if (!p.is_string()) throw SchemaError("phrases in " + where + " must be strings");
            group.phrases.push_back(p.get<std::string>());
        }
        corpus.catchphrase_groups.push_back(std::move(group));
    }

    i = 0;
    for (const auto& d : require_array(doc, "demonstrations", "corpus document")) {
        std::string where = "demonstrations[" + std::to_string(i++) + "]";
        if (!d.is_object()) throw SchemaError(where + " must be an object");
        reject_unknown_keys(d, {"emotion", "scenario", "kind", "text"}, where);
        Demonstration demo;
        std::string emotion = require_string(d, "emotion", where);
        auto label = emotive_label_from(emotion);
        if (!label)
            throw SchemaError("bad value '" + emotion + "' for key 'emotion' in " + where +
                              " (expected angry|happy|neutral)");
        demo.emotive_label = *label;
        if (auto it = d.find("scenario"); it != d.end() && !it->is_null()) {
            if (!it->is_string()) throw SchemaError("key 'scenario' in " + where + " must be a string");
            demo.scenario = it->get<std::string>();
        }
        std::string kind = require_string(d, "kind", where);
        if (kind == "catchphrase_standalone") demo.kind = DemonstrationKind::catchphrase_standalone;
        else if (kind == "long_form") demo.kind = DemonstrationKind::long_form;
        else
            throw SchemaError("bad value '" + kind + "' for key 'kind' in " + where +
                              " (expected catchphrase_standalone|long_form)");
        demo.text = require_string(d, "text", where);
        corpus.demonstrations.push_back(std::move(demo));
    }

    i = 0;
    for (const auto& p : require_array(doc, "pseudo_data", "corpus document")) {
        std::string where = "pseudo_data[" + std::to_string(i++) + "]";
        if (!p.is_object()) throw SchemaError(where + " must be an object");
        reject_unknown_keys(p, {"kind", "text"}, where);
        PseudoDatum datum;
        std::string kind = require_string(p, "kind", where);
        if (kind == "boundary_enforcement") datum.kind = PseudoDatumKind::boundary_enforcement;
        else if (kind == "parody") datum.kind = PseudoDatumKind::parody;
        else
            throw SchemaError("bad value '" + kind + "' for key 'kind' in " + where +
                              " (expected boundary_enforcement|parody)");
        datum.text = require_string(p, "text", where);
        corpus.pseudo_data.push_back(std::move(datum));
    }

    i = 0;
    for (const auto& s : require_array(doc, "sources", "corpus document")) {
        std::string where = "sources[" + std::to_string(i++) + "]";
        if (!s.is_object()) throw SchemaError(where + " must be an object");
        reject_unknown_keys(s, {"description", "date", "transcribed", "after_cutoff"}, where);
        SourceRecord rec;
        rec.source_description = require_string(s, "description", where);
        std::string date = require_string(s, "date", where);
        auto parsed = Date::parse(date);
        if (!parsed)
            throw SchemaError("bad value '" + date + "' for key 'date' in " + where +
                              " (expected YYYY-MM-DD)");
        rec.event_date = *parsed;
        rec.transcribed_from_audio = require_bool(s, "transcribed", where);
        rec.after_training_cutoff = require_bool(s, "after_cutoff", where);
        corpus.provenance.push_back(std::move(rec));
    }

    return corpus;
}

inline CharacterCorpus load_corpus(const std::filesystem::path& path) {
    nlohmann::json doc;
    std::string raw = read_file(path);
    try {
        doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("corpus file " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_corpus(doc);
}

inline nlohmann::json corpus_to_json(const CharacterCorpus& corpus) {
    nlohmann::ordered_json doc;
    doc["character"] = corpus.character_name;
    doc["description"] = corpus.character_description;
    auto& groups = doc["catchphrases"] = nlohmann::ordered_json::array();
    for (const auto& g : corpus.catchphrase_groups) {
        groups.push_back({{"label", g.usage_label}, {"phrases", g.phrases}});
    }
    auto& demos = doc["demonstrations"] = nlohmann::ordered_json::array();
    for (const auto& d : corpus.demonstrations) {
        nlohmann::ordered_json j;
        j["emotion"] = to_string(d.emotive_label);
        if (d.scenario) j["scenario"] = *d.scenario;
        j["kind"] = to_string(d.kind);
        j["text"] = d.text;
        demos.push_back(std::move(j));
    }
    auto& pseudo = doc["pseudo_data"] = nlohmann::ordered_json::array();
    for (const auto& p : corpus.pseudo_data) {
        pseudo.push_back({{"kind", to_string(p.kind)}, {"text", p.text}});
    }
    auto& sources = doc["sources"] = nlohmann::ordered_json::array();
    for (const auto& s : corpus.provenance) {
        sources.push_back({{"description", s.source_description},
                           {"date", s.event_date.str()},
                           {"transcribed", s.transcribed_from_audio},
                           {"after_cutoff", s.after_training_cutoff}});
    }
    return doc;
}

inline void save_corpus(const CharacterCorpus& corpus, const std::filesystem::path& path) {
    write_file(path, corpus_to_json(corpus).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationPolicy {
    size_t pseudo_data_word_budget = 150;
    std::optional<Date> training_cutoff = Date{2023, 6, 30};
};

enum class FindingLevel { error, warning };

struct Finding {
    FindingLevel level = FindingLevel::error;
    std::string rule;
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;

    size_t error_count() const {
        size_t n = 0;
        for (const auto& f : findings) n += f.level == FindingLevel::error;
        return n;
    }
    size_t warning_count() const { return findings.size() - error_count(); }
    bool ok() const { return error_count() == 0; }

    size_t count_rule(std::string_view rule) const {
        size_t n = 0;
        for (const auto& f : findings) n += f.rule == rule;
        return n;
    }
};

namespace detail {

inline std::string containment_form(std::string_view text) {
    NormalizationRules rules;
    rules.stopword_list.clear();  // containment ignores stopword filtering
    return normalize(text, rules);
}

inline bool has_stage_directions(std::string_view text) {
    size_t open = text.find('[');
    if (open != std::string_view::npos && text.find(']', open) != std::string_view::npos)
        return true;
    size_t star = text.find('*');
    if (star != std::string_view::npos && text.find('*', star + 1) != std::string_view::npos)
        return true;
    return false;
}

}  // namespace detail

// True when the demonstration text contains at least one catchphrase from any
// group, compared on lowercased punctuation-stripped text.
inline bool demonstration_contains_catchphrase(const Demonstration& demo,
                                               const std::vector<CatchphraseGroup>& groups) {
    std::string text = detail::containment_form(demo.text);
    for (const auto& group : groups) {
        for (const auto& phrase : group.phrases) {
            std::string needle = detail::containment_form(phrase);
            if (needle.empty()) continue;
            if (text.find(needle) != std::string::npos) return true;
        }
    }
    return false;
}

inline ValidationReport validate_corpus(const CharacterCorpus& corpus,
                                        const ValidationPolicy& policy = {}) {
    ValidationReport report;
    auto add = [&](FindingLevel level, std::string rule, std::string message) {
        report.findings.push_back({level, std::move(rule), std::move(message)});
    };

    // structural invariants
    if (corpus.character_name.empty())
        add(FindingLevel::error, "structure", "character name is empty");
    if (corpus.catchphrase_groups.empty())
        add(FindingLevel::error, "structure", "corpus has no catchphrase groups");
    if (corpus.demonstrations.empty())
        add(FindingLevel::error, "structure", "corpus has no demonstrations");
    std::set<std::string> labels;
    for (const auto& g : corpus.catchphrase_groups) {
        if (!labels.insert(g.usage_label).second)
            add(FindingLevel::error, "structure",
                "duplicate catchphrase usage label '" + g.usage_label + "'");
        if (g.phrases.empty())
            add(FindingLevel::error, "structure",
                "catchphrase group '" + g.usage_label + "' has no phrases");
        for (const auto& p : g.phrases) {
            if (trim(p).empty())
                add(FindingLevel::error, "structure",
                    "empty phrase in catchphrase group '" + g.usage_label + "'");
        }
    }
    for (size_t i = 0; i < corpus.demonstrations.size(); ++i) {
        if (detail::has_stage_directions(corpus.demonstrations[i].text))
            add(FindingLevel::error, "stage_directions",
                "demonstration " + std::to_string(i) +
                    " contains bracketed stage directions or pause annotations");
    }
    if (policy.training_cutoff) {
        for (size_t i = 0; i < corpus.provenance.size(); ++i) {
            const auto& src = corpus.provenance[i];
            bool expected = src.event_date > *policy.training_cutoff;
            if (src.after_training_cutoff != expected)
                add(FindingLevel::error, "cutoff_consistency",
                    "source " + std::to_string(i) + " (" + src.event_date.str() +
                        ") disagrees with its after_cutoff flag");
        }
    }

    // (a) every long-form demonstration embeds a catchphrase
    for (size_t i = 0; i < corpus.demonstrations.size(); ++i) {
        const auto& demo = corpus.demonstrations[i];
        if (demo.kind != DemonstrationKind::long_form) continue;
        if (!demonstration_contains_catchphrase(demo, corpus.catchphrase_groups))
            add(FindingLevel::error, "catchphrase_coverage",
                "long_form demonstration " + std::to_string(i) +
                    " contains no catchphrase from any group");
    }

    // (b) pseudo-data word budget
    size_t pseudo_words = 0;
    for (const auto& p : corpus.pseudo_data) pseudo_words += word_count(p.text);
    if (pseudo_words > policy.pseudo_data_word_budget)
        add(FindingLevel::warning, "pseudo_data_budget",
            "pseudo-data totals " + std::to_string(pseudo_words) + " words (budget " +
                std::to_string(policy.pseudo_data_word_budget) + ")");

    // (c) emotive coverage spans the time domain
    bool have[3] = {false, false, false};
    for (const auto& d : corpus.demonstrations) have[static_cast<int>(d.emotive_label)] = true;
    for (auto label : {EmotiveLabel::angry, EmotiveLabel::happy, EmotiveLabel::neutral}) {
        if (!have[static_cast<int>(label)])
            add(FindingLevel::warning, "emotive_coverage",
                "no demonstration labeled '" + to_string(label) + "'");
    }

    // (d) scenario diversity spans the space domain
    if (!corpus.demonstrations.empty()) {
        std::set<std::string> scenarios;
        for (const auto& d : corpus.demonstrations)
            scenarios.insert(d.scenario.value_or(""));
        if (scenarios.size() == 1)
            add(FindingLevel::warning, "scenario_diversity",
                "all demonstrations share one scenario");
    }

    // (e) kind diversity spans the scale domain
    if (!corpus.demonstrations.empty()) {
        std::set<DemonstrationKind> kinds;
        for (const auto& d : corpus.demonstrations) kinds.insert(d.kind);
        if (kinds.size() == 1)
            add(FindingLevel::warning, "kind_diversity",
                "all demonstrations are " + to_string(*kinds.begin()));
    }

    // (f) provenance freshness
    for (size_t i = 0; i < corpus.provenance.size(); ++i) {
        if (!corpus.provenance[i].after_training_cutoff)
            add(FindingLevel::warning, "provenance_cutoff",
                "source " + std::to_string(i) + " predates the training cutoff");
    }

    return report;
}

}  // namespace r2r
