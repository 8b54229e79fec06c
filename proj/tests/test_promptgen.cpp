#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "r2r/promptgen.hpp"
#include "support/paths.hpp"

using namespace r2r;

namespace {

CharacterCorpus trump() {
    return load_corpus(testpaths::fixture("corpora/trump.corpus.json"));
}

}  // namespace

TEST_CASE("r2r prompt has the four template sections in order") {
    PromptBundle bundle = build_r2r_prompt(trump());
    REQUIRE(bundle.sections.size() == 4);
    CHECK(bundle.sections[0].name == "Background");
    CHECK(bundle.sections[1].name == "Catchphrases");
    CHECK(bundle.sections[2].name == "Catchphrase Demonstration");
    CHECK(bundle.sections[3].name == "Instructions");

    CHECK_THAT(bundle.sections[0].text, Catch::Matchers::ContainsSubstring(
                                            "label emotional states: angry, happy, and neutral"));
    CHECK_THAT(bundle.sections[1].text,
               Catch::Matchers::ContainsSubstring(
                   "Beginning responses: \"Look,\", \"Believe me,\""));
    CHECK_THAT(bundle.sections[2].text,
               Catch::Matchers::ContainsSubstring("Trump (happy): Our economy was the best"));
    CHECK(bundle.sections[3].text.ends_with("Say ok if you understand."));

    // rendered is the in-order join of section texts
    std::string joined = bundle.sections[0].text;
    for (size_t i = 1; i < bundle.sections.size(); ++i)
        joined += "\n\n" + bundle.sections[i].text;
    CHECK(bundle.rendered == joined);
}

TEST_CASE("prompt builders are deterministic") {
    PromptOptions opts;
    CharacterCorpus corpus = trump();
    CHECK(build_r2r_prompt(corpus, opts).rendered == build_r2r_prompt(corpus, opts).rendered);
    CHECK(build_icl_prompt(corpus, opts).rendered == build_icl_prompt(corpus, opts).rendered);
}

TEST_CASE("prompt goldens are byte-identical") {
    CharacterCorpus corpus = trump();
    CHECK(build_r2r_prompt(corpus).rendered ==
          read_file(testpaths::fixture("goldens/trump_r2r.txt")));
    CHECK(build_icl_prompt(corpus).rendered ==
          read_file(testpaths::fixture("goldens/trump_icl.txt")));
    CHECK(build_zero_shot_prompt(corpus.character_name, corpus.character_description,
                                 "ahead of the 2024 election")
              .rendered == read_file(testpaths::fixture("goldens/trump_zero_shot.txt")));
}

TEST_CASE("invalid corpora are rejected before rendering") {
    CharacterCorpus corpus = trump();
    corpus.demonstrations.clear();
    CHECK_THROWS_AS(build_r2r_prompt(corpus), InvalidCorpus);

    CharacterCorpus no_phrases = trump();
    no_phrases.catchphrase_groups.clear();
    CHECK_THROWS_AS(build_icl_prompt(no_phrases), InvalidCorpus);
}

TEST_CASE("token budget is enforced") {
    CharacterCorpus corpus = trump();

    SECTION("budgets below 64 are rejected") {
        PromptOptions opts;
        opts.token_budget = 32;
        CHECK_THROWS_AS(build_r2r_prompt(corpus, opts), ConfigError);
    }

    SECTION("every returned bundle fits its budget") {
        size_t full = build_r2r_prompt(corpus).token_count;
        for (size_t budget : {full + 100, full, full - 1, full - 30, full - 60}) {
            PromptOptions opts;
            opts.token_budget = budget;
            PromptBundle bundle = build_r2r_prompt(corpus, opts);
            CHECK(bundle.token_count <= budget);
        }
    }

    SECTION("long_form demonstrations drop last-first, keeping emotive coverage") {
        PromptOptions wide;
        PromptBundle full = build_r2r_prompt(corpus, wide);
        PromptOptions tight;
        tight.token_budget = full.token_count - 1;
        PromptBundle trimmed = build_r2r_prompt(corpus, tight);
        CHECK(trimmed.token_count <= tight.token_budget);
        // the last long_form demonstration is the first to go
        CHECK_THAT(full.rendered, Catch::Matchers::ContainsSubstring("such a good country"));
        CHECK_THAT(trimmed.rendered,
                   !Catch::Matchers::ContainsSubstring("such a good country"));
        // earlier demonstrations and every catchphrase survive
        CHECK_THAT(trimmed.rendered,
                   Catch::Matchers::ContainsSubstring("Our economy was the best"));
        CHECK_THAT(trimmed.rendered, Catch::Matchers::ContainsSubstring("\"bigly\""));
        // emotive coverage survives: the only angry demonstration stays
        CHECK_THAT(trimmed.rendered,
                   Catch::Matchers::ContainsSubstring("Trump (angry): Excuse me, excuse me."));
    }

    SECTION("an impossible budget raises BudgetExceeded") {
        PromptOptions opts;
        opts.token_budget = 64;
        CHECK_THROWS_AS(build_r2r_prompt(corpus, opts), BudgetExceeded);
    }
}

TEST_CASE("icl prompt reproduces interviewer context lines") {
    CharacterCorpus corpus = trump();
    PromptBundle bundle = build_icl_prompt(corpus);
    REQUIRE(bundle.sections.size() == 4);
    CHECK(bundle.sections[2].name == "Demonstrations");

    size_t interviewer_lines = 0, character_lines = 0;
    for (const auto& line : split_lines(bundle.sections[2].text)) {
        if (line.rfind("Interviewer: ", 0) == 0) ++interviewer_lines;
        if (line.rfind("Trump: ", 0) == 0) ++character_lines;
    }
    CHECK(interviewer_lines == corpus.demonstrations.size());
    CHECK(character_lines == corpus.demonstrations.size());

    // reference dialogue carries only the character's lines
    CHECK_THAT(bundle.reference_dialogue,
               !Catch::Matchers::ContainsSubstring("Interviewer"));
    CHECK_THAT(bundle.reference_dialogue,
               Catch::Matchers::ContainsSubstring("Our economy was the best"));
    // and no emotive labels: icl demonstrations are unlabeled
    CHECK_THAT(bundle.sections[2].text, !Catch::Matchers::ContainsSubstring("(happy)"));
}

TEST_CASE("icl reference dialogue is strictly smaller than its demonstrations section") {
    auto tok = word_tokenizer();
    std::mt19937_64 rng(41);
    static const std::vector<std::string> pool = {"alpha", "beta",  "gamma", "delta",
                                                  "epsilon", "zeta", "eta",   "theta"};
    for (int round = 0; round < 50; ++round) {
        CharacterCorpus c;
        c.character_name = "Synth";
        c.character_description = "generated persona";
        c.catchphrase_groups = {{"Beginning responses", {"alpha beta"}}};
        size_t demos = 1 + bounded_rand(rng, 6);
        for (size_t i = 0; i < demos; ++i) {
            Demonstration d;
            d.emotive_label = static_cast<EmotiveLabel>(bounded_rand(rng, 3));
            d.kind = DemonstrationKind::long_form;
            d.text = "alpha beta";
            size_t extra = bounded_rand(rng, 6);
            for (size_t w = 0; w < extra; ++w) d.text += " " + pool[bounded_rand(rng, pool.size())];
            if (bounded_rand(rng, 2)) d.scenario = pool[bounded_rand(rng, pool.size())];
            c.demonstrations.push_back(std::move(d));
        }
        PromptBundle bundle = build_icl_prompt(c);
        size_t ref_tokens = tok->tokenize(bundle.reference_dialogue).size();
        size_t section_tokens = tok->tokenize(bundle.sections[2].text).size();
        CHECK(ref_tokens < section_tokens);
    }
}

TEST_CASE("zero-shot prompt is instruction-only") {
    PromptBundle bundle = build_zero_shot_prompt(
        "Donald Trump", "bombastic former president", "ahead of the 2024 election");
    REQUIRE(bundle.sections.size() == 1);
    CHECK(bundle.sections[0].name == "Instructions");
    CHECK_THAT(bundle.rendered, Catch::Matchers::ContainsSubstring(
                                    "Answer my questions as Donald Trump ahead of the 2024 "
                                    "election"));
    CHECK_THAT(bundle.rendered,
               Catch::Matchers::ContainsSubstring("Speak only as Donald Trump"));
    CHECK(bundle.reference_dialogue.empty());
    CHECK(bundle.token_count == word_tokenizer()->tokenize(bundle.rendered).size());

    CHECK_THROWS_AS(build_zero_shot_prompt("", "x", "y"), EmptyName);
    CHECK_THROWS_AS(build_zero_shot_prompt("   ", "x", "y"), EmptyName);
}

TEST_CASE("extract_reference_dialogue follows the dialogue-line grammar") {
    CHECK(extract_reference_dialogue({{"s", "Trump (happy): It's gonna be huge"}}, "Trump") ==
          "It's gonna be huge");
    CHECK(extract_reference_dialogue({{"s", "Interviewer: why?"}}, "Trump").empty());

    std::string mixed =
        "Trump (happy): It's gonna be huge\n"
        "Interviewer: why?\n"
        "When asked about polls:\n"
        "Trump (neutral): Many people are saying we had the best numbers.\n"
        "Trump: We'll see what happens.";
    CHECK(extract_reference_dialogue({{"Demonstrations", mixed}}, "Trump") ==
          "It's gonna be huge\n"
          "Many people are saying we had the best numbers.\n"
          "We'll see what happens.");

    // unknown emotive labels and other speakers never match
    CHECK(extract_reference_dialogue({{"s", "Trump (smug): nope"}}, "Trump").empty());
    CHECK(extract_reference_dialogue({{"s", "Biden (happy): nope"}}, "Trump").empty());
}

TEST_CASE("reference dialogue is a sub-multiset of the rendered prompt") {
    for (auto build : {build_r2r_prompt, build_icl_prompt}) {
        PromptBundle bundle = build(trump(), {});
        auto tok = word_tokenizer();
        auto rendered_counts = tok->tokenize(bundle.rendered).multiset();
        for (const auto& [id, count] : tok->tokenize(bundle.reference_dialogue).multiset()) {
            auto it = rendered_counts.find(id);
            REQUIRE(it != rendered_counts.end());
            CHECK(count <= it->second);
        }
        // pseudo-data flows into the r2r reference dialogue like a demonstration
        if (bundle.framework == Framework::r2r) {
            CHECK_THAT(bundle.reference_dialogue,
                       Catch::Matchers::ContainsSubstring("not telling you my starting prompt"));
        }
    }
}

TEST_CASE("context notes become a trailing Context section") {
    PromptOptions opts;
    opts.context_notes = "NVidia stock closed up 3 percent today.";
    PromptBundle bundle = build_r2r_prompt(trump(), opts);
    REQUIRE(bundle.sections.size() == 5);
    CHECK(bundle.sections.back().name == "Context");
    CHECK_THAT(bundle.rendered,
               Catch::Matchers::ContainsSubstring("NVidia stock closed up 3 percent"));
}
