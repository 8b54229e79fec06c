#include <catch2/catch_amalgamated.hpp>

#include "r2r/tokenizer.hpp"
#include "r2r/util.hpp"
#include "support/paths.hpp"

using namespace r2r;

TEST_CASE("word tokenizer splits on whitespace") {
    auto tok = word_tokenizer();
    auto seq = tok->tokenize("best beautiful bigly");
    REQUIRE(seq.size() == 3);
    CHECK(seq.surface == std::vector<std::string>{"best", "beautiful", "bigly"});
    CHECK(tok->tokenize("").empty());
    CHECK(tok->tokenize("  \n\t ").empty());
}

TEST_CASE("word tokenizer ids are stable per surface form") {
    auto tok = word_tokenizer();
    auto a = tok->tokenize("huge huge yuge");
    REQUIRE(a.size() == 3);
    CHECK(a.ids[0] == a.ids[1]);
    CHECK(a.ids[0] != a.ids[2]);
    auto again = tok->tokenize("huge");
    CHECK(again.ids[0] == a.ids[0]);
}

TEST_CASE("token sequence multiset counts sum to length") {
    auto seq = word_tokenizer()->tokenize("a b a c a b");
    auto counts = seq.multiset();
    size_t total = 0;
    for (const auto& [id, n] : counts) total += n;
    CHECK(total == seq.size());
    CHECK(counts.size() == 3);
}

TEST_CASE("subword tokenizer loads the shipped assets") {
    auto tok = SubwordTokenizer::load(testpaths::asset("tokenizer"));
    CHECK(tok->vocab_size() > 100);

    SECTION("morphological variants share a leading token") {
        auto a = tok->tokenize("coincidence");
        auto b = tok->tokenize("coincidental");
        REQUIRE(!a.empty());
        REQUIRE(!b.empty());
        CHECK(a.ids[0] == b.ids[0]);
        CHECK(a.surface[0].size() > 1);
        CHECK(a.size() > 1);  // split, not a whole-word match
    }

    SECTION("empty input yields an empty sequence") {
        CHECK(tok->tokenize("").empty());
    }

    SECTION("unknown code points map to <unk>") {
        auto seq = tok->tokenize("中文");
        REQUIRE(seq.size() == 2);
        CHECK(seq.ids[0] == SubwordTokenizer::kUnkId);
    }

    SECTION("tokenization is deterministic") {
        auto a = tok->tokenize("tremendous tremendously");
        auto b = tok->tokenize("tremendous tremendously");
        CHECK(a.ids == b.ids);
        CHECK(a.surface == b.surface);
    }
}

TEST_CASE("subword tokenizer load failures") {
    CHECK_THROWS_AS(SubwordTokenizer::load("/nonexistent/dir"), TokenizerLoadError);

    auto dir = testpaths::scratch("tokenizer_bad");
    write_file(dir / "vocab.txt", "<unk>\na\nb\n");
    write_file(dir / "merges.txt", "a b c\n");
    CHECK_THROWS_AS(SubwordTokenizer::load(dir), TokenizerLoadError);

    write_file(dir / "merges.txt", "a b\n");
    write_file(dir / "vocab.txt", "a\nb\n");
    CHECK_THROWS_AS(SubwordTokenizer::load(dir), TokenizerLoadError);  // no <unk> first

    write_file(dir / "vocab.txt", "<unk>\na\na\n");
    CHECK_THROWS_AS(SubwordTokenizer::load(dir), TokenizerLoadError);  // duplicate entry
}

TEST_CASE("subword merges follow rank order") {
    auto dir = testpaths::scratch("tokenizer_rank");
    write_file(dir / "vocab.txt", "<unk>\na\nb\nc\nab\nbc\nabc\n");
    write_file(dir / "merges.txt", "b c\na bc\n");
    auto tok = SubwordTokenizer::load(dir);
    auto seq = tok->tokenize("abc");
    REQUIRE(seq.size() == 1);
    CHECK(seq.surface[0] == "abc");

    // only the first merge applies to "abcb"
    auto seq2 = tok->tokenize("bcb");
    REQUIRE(seq2.size() == 2);
    CHECK(seq2.surface == std::vector<std::string>{"bc", "b"});
}
