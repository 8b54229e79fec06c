#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "r2r/errors.hpp"
#include "r2r/text.hpp"
#include "r2r/tokenizer.hpp"

namespace r2r {

// |R ∩ f(X)| with clipped multiset semantics: per token id,
// min(count in ref, count in out). Symmetric by construction.
inline size_t clipped_intersection_size(const TokenSequence& ref, const TokenSequence& out) {
    auto ref_counts = ref.multiset();
    size_t inter = 0;
    for (uint64_t id : out.ids) {
        auto it = ref_counts.find(id);
        if (it != ref_counts.end() && it->second > 0) {
            --it->second;
            ++inter;
        }
    }
    return inter;
}

// Intersection over Output: fraction of output tokens drawn from the
// reference. Low values mean the model improvises.
inline double ioo(const TokenSequence& ref, const TokenSequence& out) {
    if (out.empty()) throw EmptyOutput("ioo requires a non-empty output sequence");
    return static_cast<double>(clipped_intersection_size(ref, out)) /
           static_cast<double>(out.size());
}

// Intersection over References: fraction of reference tokens recalled in the
// output — a demonstration-utilization rate.
inline double ior(const TokenSequence& ref, const TokenSequence& out) {
    if (ref.empty()) throw EmptyReference("ior requires a non-empty reference sequence");
    return static_cast<double>(clipped_intersection_size(ref, out)) /
           static_cast<double>(ref.size());
}

struct LcsResult {
    size_t length = 0;
    double normalized = 0.0;  // length / |ref|
    double normalized_by_out = 0.0;
};

// Longest contiguous run of identical token ids shared by the two sequences.
inline LcsResult lcs(const TokenSequence& ref, const TokenSequence& out) {
    LcsResult r;
    const size_t n = ref.size(), m = out.size();
    if (n == 0 || m == 0) return r;
    std::vector<size_t> prev(m + 1, 0), cur(m + 1, 0);
    size_t best = 0;
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            cur[j] = ref.ids[i - 1] == out.ids[j - 1] ? prev[j - 1] + 1 : 0;
            best = std::max(best, cur[j]);
        }
        std::swap(prev, cur);
    }
    r.length = best;
    r.normalized = static_cast<double>(best) / static_cast<double>(n);
    r.normalized_by_out = static_cast<double>(best) / static_cast<double>(m);
    return r;
}

struct LevenshteinResult {
    size_t distance = 0;
    double normalized = 0.0;  // distance / max(|ref|, |out|), 0/0 -> 0
};

// Token-level edit distance with unit insert/delete/substitute costs.
inline LevenshteinResult levenshtein(const TokenSequence& ref, const TokenSequence& out) {
    const size_t n = ref.size(), m = out.size();
    LevenshteinResult r;
    if (n == 0 && m == 0) return r;
    std::vector<size_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = j;
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= m; ++j) {
            size_t sub = prev[j - 1] + (ref.ids[i - 1] == out.ids[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    r.distance = prev[m];
    r.normalized = static_cast<double>(r.distance) / static_cast<double>(std::max(n, m));
    return r;
}

struct MetricReport {
    std::optional<double> ioo;  // absent when the reference dialogue is empty
    std::optional<double> ior;
    size_t lcs = 0;
    double nlcs = 0.0;         // lcs / |ref|
    double nlcs_by_out = 0.0;  // lcs / |out|, kept alongside for audit
    size_t ld = 0;
    double nld = 0.0;
    size_t ref_len = 0;
    size_t out_len = 0;
};

// Normalize then tokenize both sides, then compute every recall metric.
// An empty reference (zero-shot prompts) leaves ioo/ior absent.
inline MetricReport score_interaction(std::string_view reference_dialogue,
                                      std::string_view output,
                                      const NormalizationRules& rules,
                                      const Tokenizer& tokenizer) {
    TokenSequence ref = tokenizer.tokenize(normalize(reference_dialogue, rules));
    TokenSequence out = tokenizer.tokenize(normalize(output, rules));
    MetricReport report;
    report.ref_len = ref.size();
    report.out_len = out.size();
    if (!ref.empty()) {
        report.ioo = ioo(ref, out);  // throws EmptyOutput when out is empty
        report.ior = ior(ref, out);
    }
    LcsResult l = lcs(ref, out);
    report.lcs = l.length;
    report.nlcs = l.normalized;
    report.nlcs_by_out = l.normalized_by_out;
    LevenshteinResult d = levenshtein(ref, out);
    report.ld = d.distance;
    report.nld = d.normalized;
    return report;
}

}  // namespace r2r
