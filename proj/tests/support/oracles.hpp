#pragma once

// Brute-force reference implementations the metric tests check against.
// Deliberately naive and kept independent of the library code paths.

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

namespace oracles {

using Seq = std::vector<uint64_t>;

inline size_t clipped_intersection(const Seq& ref, const Seq& out) {
    std::map<uint64_t, long> ref_counts, out_counts;
    for (auto t : ref) ++ref_counts[t];
    for (auto t : out) ++out_counts[t];
    size_t total = 0;
    for (const auto& [token, n] : ref_counts) {
        auto it = out_counts.find(token);
        if (it != out_counts.end()) total += static_cast<size_t>(std::min(n, it->second));
    }
    return total;
}

// Longest common substring by checking every (start, start) pair.
inline size_t lcs_length(const Seq& ref, const Seq& out) {
    size_t best = 0;
    for (size_t i = 0; i < ref.size(); ++i) {
        for (size_t j = 0; j < out.size(); ++j) {
            size_t k = 0;
            while (i + k < ref.size() && j + k < out.size() && ref[i + k] == out[j + k]) ++k;
            best = std::max(best, k);
        }
    }
    return best;
}

// Full-matrix edit distance straight from the recurrence.
inline size_t levenshtein(const Seq& ref, const Seq& out) {
    const size_t n = ref.size(), m = out.size();
    std::vector<std::vector<size_t>> d(n + 1, std::vector<size_t>(m + 1, 0));
    for (size_t i = 0; i <= n; ++i) d[i][0] = i;
    for (size_t j = 0; j <= m; ++j) d[0][j] = j;
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            size_t sub = d[i - 1][j - 1] + (ref[i - 1] == out[j - 1] ? 0 : 1);
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
        }
    }
    return d[n][m];
}

}  // namespace oracles
