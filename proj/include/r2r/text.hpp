#pragma once

#include <array>
#include <set>
#include <string>
#include <string_view>

#include "r2r/util.hpp"

namespace r2r {

// Stopword snapshot shipped with the library (classic English IR list, 179
// entries). assets/stopwords/english.txt carries the same list in file form;
// a test keeps the two in sync.
inline constexpr std::array<std::string_view, 179> kDefaultStopwords = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're",
    "you've", "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he",
    "him", "his", "himself", "she", "she's", "her", "hers", "herself", "it",
    "it's", "its", "itself", "they", "them", "their", "theirs", "themselves",
    "what", "which", "who", "whom", "this", "that", "that'll", "these", "those",
    "am", "is", "are", "was", "were", "be", "been", "being", "have", "has",
    "had", "having", "do", "does", "did", "doing", "a", "an", "the", "and",
    "but", "if", "or", "because", "as", "until", "while", "of", "at", "by",
    "for", "with", "about", "against", "between", "into", "through", "during",
    "before", "after", "above", "below", "to", "from", "up", "down", "in",
    "out", "on", "off", "over", "under", "again", "further", "then", "once",
    "here", "there", "when", "where", "why", "how", "all", "any", "both",
    "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
    "only", "own", "same", "so", "than", "too", "very", "s", "t", "can",
    "will", "just", "don", "don't", "should", "should've", "now", "d", "ll",
    "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't",
    "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't",
    "haven", "haven't", "isn", "isn't", "ma", "mightn", "mightn't", "mustn",
    "mustn't", "needn", "needn't", "shan", "shan't", "shouldn", "shouldn't",
    "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn", "wouldn't",
};

inline const std::set<std::string>& default_stopword_set() {
    static const std::set<std::string> set = [] {
        std::set<std::string> s;
        for (auto w : kDefaultStopwords) s.emplace(w);
        return s;
    }();
    return set;
}

inline std::set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::set<std::string> words;
    for (const auto& line : split_lines(read_file(path))) {
        std::string w = trim(line);
        if (!w.empty()) words.insert(std::move(w));
    }
    return words;
}

struct NormalizationRules {
    bool lowercase = true;
    bool strip_punctuation = true;
    std::set<std::string> stopword_list = default_stopword_set();
};

namespace detail {

// ASCII plus the Latin-1 supplement; other scripts pass through unchanged.
inline void lowercase_utf8_inplace(std::string& s) {
    for (size_t i = 0; i < s.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (c >= 'A' && c <= 'Z') {
            s[i] = static_cast<char>(c - 'A' + 'a');
        } else if (c == 0xc3 && i + 1 < s.size()) {
            unsigned char d = static_cast<unsigned char>(s[i + 1]);
            if (d >= 0x80 && d <= 0x9e && d != 0x97) {  // À..Þ except ×
                s[i + 1] = static_cast<char>(d + 0x20);
            }
            ++i;
        } else if (c >= 0x80) {
            // skip remaining continuation bytes of this code point
            while (i + 1 < s.size() &&
                   (static_cast<unsigned char>(s[i + 1]) & 0xc0) == 0x80) {
                ++i;
            }
        }
    }
}

inline bool is_ascii_punct(unsigned char c) {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
           (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

// Common multi-byte punctuation: curly quotes, dashes, ellipsis, guillemets,
// inverted marks. Returns the byte length of the match or 0.
inline size_t punct_seq_len(std::string_view s, size_t i) {
    auto at = [&](size_t k) { return static_cast<unsigned char>(s[i + k]); };
    if (i + 2 < s.size() && at(0) == 0xe2 && at(1) == 0x80) {
        unsigned char c = at(2);
        if (c == 0x93 || c == 0x94 || c == 0x98 || c == 0x99 || c == 0x9c ||
            c == 0x9d || c == 0xa6) {
            return 3;
        }
    }
    if (i + 1 < s.size() && at(0) == 0xc2) {
        unsigned char c = at(1);
        if (c == 0xa1 || c == 0xab || c == 0xbb || c == 0xbf) return 2;
    }
    return 0;
}

inline std::string strip_punctuation_to_spaces(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size();) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (c < 0x80) {
            out.push_back(is_ascii_punct(c) ? ' ' : s[i]);
            ++i;
        } else if (size_t n = punct_seq_len(s, i); n > 0) {
            out.push_back(' ');
            i += n;
        } else {
            out.push_back(s[i]);
            ++i;
        }
    }
    return out;
}

}  // namespace detail

// Lowercase, replace punctuation with spaces, drop stopwords at the
// whitespace-word level, collapse whitespace. Idempotent.
inline std::string normalize(std::string_view text, const NormalizationRules& rules) {
    std::string work(text);
    if (rules.lowercase) detail::lowercase_utf8_inplace(work);
    if (rules.strip_punctuation) work = detail::strip_punctuation_to_spaces(work);
    std::vector<std::string> kept;
    for (auto& w : split_whitespace(work)) {
        if (rules.stopword_list.count(w) == 0) kept.push_back(std::move(w));
    }
    return join(kept, " ");
}

}  // namespace r2r
