// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exits non-zero on any failure.

#include <chrono>
#include <cstdio>
#include <random>

#include "r2r/r2r.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

using namespace r2r;

namespace {

int g_failures = 0;

void criterion(int n, const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", n, name.c_str(),
                detail.empty() ? "" : " — ", detail.c_str());
    if (!ok) ++g_failures;
}

TokenSequence make_seq(const std::vector<uint64_t>& ids) {
    TokenSequence seq;
    for (auto id : ids) seq.push(id, std::to_string(id));
    return seq;
}

TokenSequence random_seq(std::mt19937_64& rng, size_t max_len, uint64_t alphabet) {
    std::vector<uint64_t> ids(bounded_rand(rng, max_len + 1));
    for (auto& id : ids) id = bounded_rand(rng, alphabet);
    return make_seq(ids);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- criterion 1: metric-oracle equivalence on 1,000 random pairs ----------
void check_metric_oracles() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(0xACCE97);
    bool ok = true;
    std::string detail;
    for (int i = 0; i < 1000 && ok; ++i) {
        TokenSequence ref = random_seq(rng, 64, 16);
        TokenSequence out = random_seq(rng, 64, 16);
        size_t inter = clipped_intersection_size(ref, out);
        if (inter != oracles::clipped_intersection(ref.ids, out.ids)) {
            ok = false;
            detail = "clipped intersection mismatch at pair " + std::to_string(i);
        }
        if (!out.empty() &&
            ioo(ref, out) != static_cast<double>(inter) / static_cast<double>(out.size())) {
            ok = false;
            detail = "ioo mismatch at pair " + std::to_string(i);
        }
        if (!ref.empty() &&
            ior(ref, out) != static_cast<double>(inter) / static_cast<double>(ref.size())) {
            ok = false;
            detail = "ior mismatch at pair " + std::to_string(i);
        }
        if (lcs(ref, out).length != oracles::lcs_length(ref.ids, out.ids)) {
            ok = false;
            detail = "lcs mismatch at pair " + std::to_string(i);
        }
        if (levenshtein(ref, out).distance != oracles::levenshtein(ref.ids, out.ids)) {
            ok = false;
            detail = "levenshtein mismatch at pair " + std::to_string(i);
        }
    }
    double elapsed = seconds_since(t0);
    if (ok && elapsed >= 5.0) {
        ok = false;
        detail = "runtime " + std::to_string(elapsed) + "s exceeds 5s";
    }
    if (ok) detail = "1000 pairs in " + std::to_string(elapsed).substr(0, 5) + "s";
    criterion(1, "metric-oracle equivalence", ok, detail);
}

// --- criterion 2: shared-numerator identity ---------------------------------
void check_shared_numerator() {
    std::mt19937_64 rng(0x51DE);
    bool ok = true;
    std::string detail;
    for (int i = 0; i < 1000 && ok; ++i) {
        TokenSequence ref = random_seq(rng, 64, 16);
        TokenSequence out = random_seq(rng, 64, 16);
        if (ref.empty() || out.empty()) continue;
        size_t inter = clipped_intersection_size(ref, out);
        size_t inter_flipped = clipped_intersection_size(out, ref);
        if (inter != inter_flipped) {
            ok = false;
            detail = "intersection asymmetry at pair " + std::to_string(i);
        }
        double lhs = ioo(ref, out) * static_cast<double>(out.size());
        double rhs = ior(ref, out) * static_cast<double>(ref.size());
        if (static_cast<size_t>(std::llround(lhs)) != inter ||
            static_cast<size_t>(std::llround(rhs)) != inter) {
            ok = false;
            detail = "integer form broken at pair " + std::to_string(i);
        }
        if (std::abs(lhs - rhs) > 1e-9) {
            ok = false;
            detail = "float identity off by " + std::to_string(std::abs(lhs - rhs));
        }
    }
    criterion(2, "shared-numerator identity", ok, detail);
}

// --- criterion 3: hostile-prompt recall ordering under both tokenizers ------
void check_recall_ordering() {
    bool ok = true;
    std::string detail;
    try {
        CharacterCorpus corpus = load_corpus(testpaths::fixture("corpora/trump.corpus.json"));
        PromptBundle r2r_bundle = build_r2r_prompt(corpus);
        PromptBundle icl_bundle = build_icl_prompt(corpus);
        std::string r2r_response =
            read_file(testpaths::fixture("responses/hostile_r2r_response.txt"));
        std::string icl_response =
            read_file(testpaths::fixture("responses/hostile_icl_response.txt"));
        NormalizationRules rules;

        std::vector<std::pair<std::string, TokenizerHandle>> tokenizers = {
            {"subword", SubwordTokenizer::load(testpaths::asset("tokenizer"))},
            {"word", word_tokenizer()},
        };
        for (const auto& [name, tok] : tokenizers) {
            MetricReport r2r_report =
                score_interaction(r2r_bundle.reference_dialogue, r2r_response, rules, *tok);
            MetricReport icl_report =
                score_interaction(icl_bundle.reference_dialogue, icl_response, rules, *tok);
            if (!r2r_report.ioo || !icl_report.ioo || !(*r2r_report.ioo > *icl_report.ioo)) {
                ok = false;
                detail = name + " tokenizer: ioo(r2r)=" +
                         std::to_string(r2r_report.ioo.value_or(-1)) + " vs ioo(icl)=" +
                         std::to_string(icl_report.ioo.value_or(-1));
                break;
            }
            if (detail.empty()) {
                char buf[96];
                std::snprintf(buf, sizeof(buf), "%s: %.4f > %.4f", name.c_str(),
                              *r2r_report.ioo, *icl_report.ioo);
                detail = buf;
            }
        }
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    criterion(3, "hostile-prompt recall ordering (r2r above icl)", ok, detail);
}

// --- criterion 4: replay-mode regression ------------------------------------
std::filesystem::path g_smoke_run;  // reused by criterion 5

void check_replay_regression() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    try {
        ExperimentConfig config =
            load_experiment_config(testpaths::fixture("smoke.config.json"));
        RunOptions a, b;
        a.output_dir = testpaths::scratch("acceptance_run_a");
        b.output_dir = testpaths::scratch("acceptance_run_b");
        auto dir_a = run_experiment(config, a);
        auto dir_b = run_experiment(config, b);
        g_smoke_run = dir_a;

        size_t records = split_lines(trim(read_file(dir_a / "records.jsonl"))).size();
        if (records != 90) {
            ok = false;
            detail = "expected 90 records, found " + std::to_string(records);
        }
        for (const char* rel :
             {"reports/role_play.csv", "reports/authenticity.csv", "reports/vote_share.csv",
              "reports/tallies.json", "reports/confidence.csv", "reports/plot_data.json"}) {
            if (read_file(dir_a / rel) != read_file(dir_b / rel)) {
                ok = false;
                detail = std::string(rel) + " differs between consecutive executions";
            }
        }
        auto problems = verify_run(dir_a);
        if (!problems.empty()) {
            ok = false;
            detail = "verify: " + problems.front();
        }
        double elapsed = seconds_since(t0);
        if (ok && elapsed >= 10.0) {
            ok = false;
            detail = "runtime " + std::to_string(elapsed) + "s exceeds 10s";
        }
        if (ok)
            detail = "90 cells, byte-identical reports, verify clean, " +
                     std::to_string(elapsed).substr(0, 5) + "s";
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    criterion(4, "replay-mode regression (2x3x5x3 smoke run)", ok, detail);
}

// --- criterion 5: ballot conservation and position-bias control -------------
void check_ballots() {
    bool ok = true;
    std::string detail;
    try {
        auto tallies =
            nlohmann::json::parse(read_file(g_smoke_run / "reports" / "tallies.json"));
        if (tallies.empty()) {
            ok = false;
            detail = "no tallies emitted";
        }
        for (const auto& t : tallies) {
            int sum = 0;
            for (auto it = t["per_candidate"].begin(); it != t["per_candidate"].end(); ++it)
                sum += it->get<int>();
            if (sum + t["abstentions"].get<int>() != t["ballots_cast"].get<int>()) {
                ok = false;
                detail = "conservation violated in " + t["setting"].get<std::string>();
            }
        }

        // position bias: uniform-random mock judge over 1,000 seeded shuffles
        class UniformJudge final : public ChatClient {
        public:
            nlohmann::json complete_raw(const CompletionRequest& req, bool& replayed) override {
                replayed = true;
                std::string label(1, static_cast<char>('A' + bounded_rand(rng_, 3)));
                nlohmann::json body;
                body["choices"] = {{{"message", {{"role", "assistant"}, {"content", label}}},
                                    {"finish_reason", "stop"}}};
                return body;
            }
            std::mt19937_64 rng_{0xB1A5};
        } judge;

        JudgePanel panel = build_panel(Setting::election);
        BallotOptions opts;
        opts.model = "judge-1";
        std::vector<Candidate> candidates = {{"r2r", "response one"},
                                             {"icl", "response two"},
                                             {"zero_shot", "response three"}};
        std::map<std::string, int> selections;
        const int rounds = 1000;
        for (int i = 0; i < rounds; ++i) {
            Ballot b = cast_ballot(panel, panel.judges[0], "q", "Why?", candidates, judge, opts,
                                   static_cast<uint64_t>(i));
            ++selections[b.choice];
        }
        for (const auto& c : candidates) {
            double share = selections[c.id] / static_cast<double>(rounds);
            if (std::abs(share - 1.0 / 3.0) > 0.05) {
                ok = false;
                detail = c.id + " selected with share " + std::to_string(share);
            }
        }
        if (ok && detail.empty()) detail = "conservation + <=5pp bias over 1000 mock ballots";
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    criterion(5, "ballot conservation and position-bias control", ok, detail);
}

// --- criterion 6: prompt golden files ----------------------------------------
void check_prompt_goldens() {
    bool ok = true;
    std::string detail;
    try {
        CharacterCorpus corpus = load_corpus(testpaths::fixture("corpora/trump.corpus.json"));
        PromptOptions opts;  // budget 4096, word-fallback counting
        PromptBundle r2r_bundle = build_r2r_prompt(corpus, opts);
        PromptBundle icl_bundle = build_icl_prompt(corpus, opts);
        PromptBundle zero_bundle = build_zero_shot_prompt(
            corpus.character_name, corpus.character_description, "ahead of the 2024 election");

        auto check_golden = [&](const PromptBundle& bundle, const std::string& name) {
            std::string golden = read_file(testpaths::fixture("goldens/" + name));
            if (bundle.rendered != golden) {
                ok = false;
                detail = name + " is not byte-identical";
            }
        };
        check_golden(r2r_bundle, "trump_r2r.txt");
        check_golden(icl_bundle, "trump_icl.txt");
        check_golden(zero_bundle, "trump_zero_shot.txt");

        const std::string& text = r2r_bundle.rendered;
        size_t p1 = text.find("1. Background:");
        size_t p2 = text.find("2. Here are some catchphrases of");
        size_t p3 = text.find("3. Catchphrase Demonstration:");
        size_t p4 = text.find("4. Instructions:");
        if (!(p1 != std::string::npos && p1 < p2 && p2 < p3 && p3 < p4)) {
            ok = false;
            detail = "template sections missing or out of order";
        }
        if (!r2r_bundle.sections.back().text.ends_with("Say ok if you understand.")) {
            ok = false;
            detail = "instructions do not close with the ok handshake";
        }
        if (r2r_bundle.token_count > opts.token_budget) {
            ok = false;
            detail = "token budget exceeded";
        }
        if (ok) detail = "3 goldens byte-identical, sections ordered, budget respected";
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    criterion(6, "prompt golden files", ok, detail);
}

// --- criterion 7: corpus validation ------------------------------------------
void check_corpus_validation() {
    bool ok = true;
    std::string detail;
    try {
        CharacterCorpus fixture = load_corpus(testpaths::fixture("corpora/trump.corpus.json"));
        if (validate_corpus(fixture).error_count() != 0) {
            ok = false;
            detail = "fixture corpus has validation errors";
        }

        CharacterCorpus bad = fixture;
        bad.demonstrations = {{EmotiveLabel::happy, std::nullopt, DemonstrationKind::long_form,
                               "Nothing characteristic here at all."}};
        if (validate_corpus(bad).error_count() != 1) {
            ok = false;
            detail = "catchphrase-free long_form demonstration should be exactly one error";
        }

        auto dir = testpaths::scratch("acceptance_corpus");
        std::string broken = read_file(testpaths::fixture("corpora/trump.corpus.json"));
        auto pos = broken.find("\"emotion\": \"happy\",");
        broken.erase(pos, std::string("\"emotion\": \"happy\",").size());
        write_file(dir / "missing.json", broken);
        try {
            load_corpus(dir / "missing.json");
            ok = false;
            detail = "missing emotive label loaded without error";
        } catch (const SchemaError&) {
        }
        if (ok) detail = "fixture clean, rule (a) single error, enum enforced at load";
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    criterion(7, "corpus validation", ok, detail);
}

// --- criterion 8: confidence extraction --------------------------------------
void check_confidence() {
    bool ok = true;
    std::string detail;
    try {
        Completion unit;
        unit.text = "1946";
        unit.token_logprobs = {{{"1946", 0.0, {}}}};
        if (first_token_confidence(unit).probability != 1.0) {
            ok = false;
            detail = "exp(0) must be exactly 1.0";
        }

        ReplayChatClient replay(testpaths::fixture("cassettes/confidence.jsonl"));
        Completion c = replay.complete(confidence67_fixture_request());
        ConfidenceReading reading = first_token_confidence(c);
        if (std::abs(reading.probability - 0.67) > 1e-9) {
            ok = false;
            detail = "cassette probability " + std::to_string(reading.probability);
        }
        if (reading.answer_token != "hello") {
            ok = false;
            detail = "leading whitespace token was not skipped";
        }
        if (ok) detail = "exp(0)=1 exact, cassette yields 0.67 within 1e-9";
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    criterion(8, "confidence extraction", ok, detail);
}

// --- criterion 9: normalization properties ------------------------------------
void check_normalization_properties() {
    static const std::vector<std::string> pieces = {
        "a",  "B",  "it's", "TRUE", "look;", "folks", "17",  ",",   "…",    "é",
        "Ü",  "ß",  "中",   "ok?",  "the",   "don't", "\t",  "  ",  "\n",   "—",
        "“q”", "x!", "(y)", "[z]",  "*",     "huge",  "α",   "Ж",   "🙂",   "ও",
    };
    std::mt19937_64 rng(0x901);
    bool ok = true;
    std::string detail;
    NormalizationRules rules;
    for (int i = 0; i < 1000 && ok; ++i) {
        std::string text;
        size_t n = bounded_rand(rng, 30);
        for (size_t k = 0; k < n; ++k) {
            text += pieces[bounded_rand(rng, pieces.size())];
            if (bounded_rand(rng, 3) == 0) text += ' ';
        }
        std::string once = normalize(text, rules);
        if (normalize(once, rules) != once) {
            ok = false;
            detail = "idempotence broken on sample " + std::to_string(i);
        }
        std::string flipped = text;
        for (auto& ch : flipped) {
            if (std::isalpha(static_cast<unsigned char>(ch)) && bounded_rand(rng, 2) == 0)
                ch = static_cast<char>(std::isupper(static_cast<unsigned char>(ch))
                                           ? std::tolower(static_cast<unsigned char>(ch))
                                           : std::toupper(static_cast<unsigned char>(ch)));
        }
        if (normalize(flipped, rules) != once) {
            ok = false;
            detail = "case invariance broken on sample " + std::to_string(i);
        }
    }
    criterion(9, "normalization idempotence and case invariance", ok,
              ok ? "1000 random strings" : detail);
}

}  // namespace

int main() {
    check_metric_oracles();
    check_shared_numerator();
    check_recall_ordering();
    check_replay_regression();
    check_ballots();
    check_prompt_goldens();
    check_corpus_validation();
    check_confidence();
    check_normalization_properties();
    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all 9 criteria passed\n");
    return 0;
}
