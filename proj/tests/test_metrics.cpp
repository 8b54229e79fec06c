#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "r2r/metrics.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

using namespace r2r;

namespace {

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

}  // namespace

TEST_CASE("ioo and ior use the clipped multiset intersection") {
    auto ref = make_seq({1, 2, 3});
    auto out = make_seq({1, 1, 2, 4});
    CHECK(clipped_intersection_size(ref, out) == 2);
    CHECK(ioo(ref, out) == Catch::Approx(0.5).epsilon(0));
    CHECK(ior(ref, out) == Catch::Approx(2.0 / 3.0).margin(1e-12));

    CHECK(ioo(ref, make_seq({7, 8})) == 0.0);
    CHECK(ioo(ref, ref) == 1.0);
    CHECK(ior(ref, make_seq({9})) == 0.0);
    CHECK(ior(ref, ref) == 1.0);

    CHECK_THROWS_AS(ioo(ref, make_seq({})), EmptyOutput);
    CHECK_THROWS_AS(ior(make_seq({}), out), EmptyReference);
}

TEST_CASE("clipped intersection is symmetric") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        auto a = random_seq(rng, 32, 8);
        auto b = random_seq(rng, 32, 8);
        CHECK(clipped_intersection_size(a, b) == clipped_intersection_size(b, a));
    }
}

TEST_CASE("lcs finds the longest contiguous token run") {
    auto r = lcs(make_seq({1, 2, 3, 4}), make_seq({9, 2, 3, 8}));
    CHECK(r.length == 2);
    CHECK(r.normalized == 0.5);

    auto same = make_seq({5, 6, 7});
    auto id = lcs(same, same);
    CHECK(id.length == 3);
    CHECK(id.normalized == 1.0);

    auto disjoint = lcs(make_seq({1, 2}), make_seq({3, 4}));
    CHECK(disjoint.length == 0);
    CHECK(disjoint.normalized == 0.0);

    auto both_empty = lcs(make_seq({}), make_seq({}));
    CHECK(both_empty.length == 0);
    CHECK(both_empty.normalized == 0.0);
}

TEST_CASE("levenshtein computes token edit distance") {
    auto r = levenshtein(make_seq({1, 2, 3}), make_seq({1, 9, 3}));
    CHECK(r.distance == 1);
    CHECK(r.normalized == Catch::Approx(1.0 / 3.0).margin(1e-12));

    auto x = make_seq({4, 5, 6, 7});
    CHECK(levenshtein(x, x).distance == 0);
    CHECK(levenshtein(x, x).normalized == 0.0);

    auto vs_empty = levenshtein(x, make_seq({}));
    CHECK(vs_empty.distance == 4);
    CHECK(vs_empty.normalized == 1.0);

    CHECK(levenshtein(make_seq({}), make_seq({})).distance == 0);
    CHECK(levenshtein(make_seq({}), make_seq({})).normalized == 0.0);
}

TEST_CASE("metrics agree with brute-force oracles on random pairs") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 300; ++i) {
        auto ref = random_seq(rng, 64, 16);
        auto out = random_seq(rng, 64, 16);
        CHECK(clipped_intersection_size(ref, out) ==
              oracles::clipped_intersection(ref.ids, out.ids));
        CHECK(lcs(ref, out).length == oracles::lcs_length(ref.ids, out.ids));
        CHECK(levenshtein(ref, out).distance == oracles::levenshtein(ref.ids, out.ids));
    }
}

TEST_CASE("shared numerator ties ioo and ior together") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 300; ++i) {
        auto ref = random_seq(rng, 48, 12);
        auto out = random_seq(rng, 48, 12);
        if (ref.empty() || out.empty()) continue;
        size_t inter = clipped_intersection_size(ref, out);
        double lhs = ioo(ref, out) * static_cast<double>(out.size());
        double rhs = ior(ref, out) * static_cast<double>(ref.size());
        CHECK(static_cast<size_t>(std::lround(lhs)) == inter);
        CHECK(std::abs(lhs - rhs) <= 1e-9);
    }
}

TEST_CASE("metric bounds hold on random pairs") {
    std::mt19937_64 rng(33);
    for (int i = 0; i < 300; ++i) {
        auto ref = random_seq(rng, 40, 10);
        auto out = random_seq(rng, 40, 10);
        auto l = lcs(ref, out);
        CHECK(l.length <= std::min(ref.size(), out.size()));
        auto d = levenshtein(ref, out);
        size_t lo = ref.size() > out.size() ? ref.size() - out.size() : out.size() - ref.size();
        CHECK(d.distance >= lo);
        CHECK(d.distance <= std::max(ref.size(), out.size()));
        CHECK(d.normalized >= 0.0);
        CHECK(d.normalized <= 1.0);
        if (!ref.empty() && !out.empty()) {
            double o = ioo(ref, out), r = ior(ref, out);
            CHECK(o >= 0.0);
            CHECK(o <= 1.0);
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
        }
    }
}

TEST_CASE("levenshtein is a metric on random triples") {
    std::mt19937_64 rng(55);
    for (int i = 0; i < 200; ++i) {
        auto a = random_seq(rng, 12, 5);
        auto b = random_seq(rng, 12, 5);
        auto c = random_seq(rng, 12, 5);
        size_t ab = levenshtein(a, b).distance;
        size_t ba = levenshtein(b, a).distance;
        size_t ac = levenshtein(a, c).distance;
        size_t cb = levenshtein(c, b).distance;
        CHECK(ab == ba);                       // symmetry
        CHECK(levenshtein(a, a).distance == 0);  // identity
        CHECK(ab <= ac + cb);                  // triangle inequality
        CHECK(ab == oracles::levenshtein(a.ids, b.ids));
    }
}

TEST_CASE("ioo is order-invariant but lcs is not") {
    auto ref = make_seq({1, 2, 3, 4});
    auto out = make_seq({1, 2, 9, 9});
    auto permuted = make_seq({9, 2, 1, 9});
    CHECK(ioo(ref, out) == ioo(ref, permuted));
    CHECK(lcs(ref, out).length == 2);
    CHECK(lcs(ref, permuted).length == 1);
}

TEST_CASE("score_interaction wires normalization, tokenization and metrics") {
    NormalizationRules rules;
    auto tok = word_tokenizer();

    SECTION("output equal to reference maxes recall") {
        std::string text = "Look, we have the greatest people, the best people.";
        MetricReport m = score_interaction(text, text, rules, *tok);
        REQUIRE(m.ioo);
        REQUIRE(m.ior);
        CHECK(*m.ioo == 1.0);
        CHECK(*m.ior == 1.0);
        CHECK(m.ld == 0);
        CHECK(m.nld == 0.0);
        CHECK(m.lcs == m.ref_len);
        CHECK(m.nlcs == 1.0);
    }

    SECTION("empty reference reports ioo/ior as absent") {
        MetricReport m = score_interaction("", "It is gonna be huge.", rules, *tok);
        CHECK(!m.ioo);
        CHECK(!m.ior);
        CHECK(m.ref_len == 0);
        CHECK(m.out_len > 0);
    }

    SECTION("empty output against a real reference propagates EmptyOutput") {
        CHECK_THROWS_AS(score_interaction("greatest people", "", rules, *tok), EmptyOutput);
        // stopword-only output normalizes to empty too
        CHECK_THROWS_AS(score_interaction("greatest people", "it's the of", rules, *tok),
                        EmptyOutput);
    }

    SECTION("scoring ignores letter case") {
        std::string ref = "Believe me, the numbers are tremendous.";
        std::string out = "Tremendous numbers, believe me.";
        MetricReport a = score_interaction(ref, out, rules, *tok);
        MetricReport b = score_interaction(ref, "TREMENDOUS NUMBERS, BELIEVE ME.", rules, *tok);
        CHECK(*a.ioo == *b.ioo);
        CHECK(*a.ior == *b.ior);
        CHECK(a.lcs == b.lcs);
        CHECK(a.ld == b.ld);
    }

    SECTION("identity holds after float conversion") {
        MetricReport m = score_interaction("look best numbers best", "best look look huge",
                                           rules, *tok);
        REQUIRE(m.ioo);
        REQUIRE(m.ior);
        CHECK(std::abs(*m.ioo * m.out_len - *m.ior * m.ref_len) <= 1e-9);
    }
}
