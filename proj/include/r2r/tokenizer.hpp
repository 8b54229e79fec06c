#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "r2r/errors.hpp"
#include "r2r/util.hpp"

namespace r2r {

struct TokenSequence {
    std::vector<uint64_t> ids;
    std::vector<std::string> surface;

    size_t size() const { return ids.size(); }
    bool empty() const { return ids.empty(); }

    std::unordered_map<uint64_t, size_t> multiset() const {
        std::unordered_map<uint64_t, size_t> counts;
        for (uint64_t id : ids) ++counts[id];
        return counts;
    }

    void push(uint64_t id, std::string token) {
        ids.push_back(id);
        surface.push_back(std::move(token));
    }
};

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual TokenSequence tokenize(std::string_view text) const = 0;
    virtual std::string name() const = 0;
};

using TokenizerHandle = std::shared_ptr<const Tokenizer>;

// Whitespace words, one token per word. Ids are 64-bit FNV-1a hashes of the
// word, so two sequences from the same text always agree on ids.
class WordTokenizer final : public Tokenizer {
public:
    TokenSequence tokenize(std::string_view text) const override {
        TokenSequence seq;
        for (auto& w : split_whitespace(text)) {
            uint64_t id = fnv1a64(w);
            seq.push(id, std::move(w));
        }
        return seq;
    }
    std::string name() const override { return "word"; }
};

inline TokenizerHandle word_tokenizer() {
    static const TokenizerHandle shared = std::make_shared<WordTokenizer>();
    return shared;
}

// Byte-pair tokenizer driven by two plain-text files:
//   vocab.txt  — one token per line, id = line number, line 0 must be <unk>
//   merges.txt — one "left right" pair per line, rank = line number
// Each whitespace word is split into code points, then adjacent pairs are
// merged lowest-rank-first (leftmost occurrence on ties) until no listed
// pair remains.
class SubwordTokenizer final : public Tokenizer {
public:
    static constexpr uint64_t kUnkId = 0;
    static constexpr std::string_view kUnkToken = "<unk>";

    static std::shared_ptr<SubwordTokenizer> load(const std::filesystem::path& dir) {
        auto tok = std::make_shared<SubwordTokenizer>();
        std::string vocab_text, merges_text;
        try {
            vocab_text = read_file(dir / "vocab.txt");
            merges_text = read_file(dir / "merges.txt");
        } catch (const IoError& e) {
            throw TokenizerLoadError(e.what());
        }
        size_t lineno = 0;
        for (const auto& line : split_lines(vocab_text)) {
            ++lineno;
            if (line.empty()) continue;
            if (tok->vocab_.count(line)) {
                throw TokenizerLoadError("duplicate vocab entry '" + line + "' at line " +
                                         std::to_string(lineno));
            }
            tok->vocab_.emplace(line, tok->tokens_.size());
            tok->tokens_.push_back(line);
        }
        if (tok->tokens_.empty() || tok->tokens_[0] != kUnkToken) {
            throw TokenizerLoadError("vocab.txt must start with <unk>");
        }
        lineno = 0;
        for (const auto& line : split_lines(merges_text)) {
            ++lineno;
            if (line.empty()) continue;
            auto parts = split_whitespace(line);
            if (parts.size() != 2) {
                throw TokenizerLoadError("bad merge at line " + std::to_string(lineno) +
                                         ": '" + line + "'");
            }
            tok->merges_.emplace(parts[0] + '\x1f' + parts[1], tok->merges_.size());
        }
        return tok;
    }

    TokenSequence tokenize(std::string_view text) const override {
        TokenSequence seq;
        for (const auto& word : split_whitespace(text)) {
            for (auto& piece : split_word(word)) {
                auto it = vocab_.find(piece);
                uint64_t id = it == vocab_.end() ? kUnkId : it->second;
                seq.push(id, std::move(piece));
            }
        }
        return seq;
    }

    std::string name() const override { return "subword"; }

    size_t vocab_size() const { return tokens_.size(); }

private:
    std::vector<std::string> split_word(std::string_view word) const {
        std::vector<std::string> parts = codepoints(word);
        while (parts.size() > 1) {
            size_t best_rank = SIZE_MAX, best_pos = SIZE_MAX;
            for (size_t i = 0; i + 1 < parts.size(); ++i) {
                auto it = merges_.find(parts[i] + '\x1f' + parts[i + 1]);
                if (it != merges_.end() && it->second < best_rank) {
                    best_rank = it->second;
                    best_pos = i;
                }
            }
            if (best_pos == SIZE_MAX) break;
            parts[best_pos] += parts[best_pos + 1];
            parts.erase(parts.begin() + static_cast<ptrdiff_t>(best_pos) + 1);
        }
        return parts;
    }

    static std::vector<std::string> codepoints(std::string_view s) {
        std::vector<std::string> cps;
        for (size_t i = 0; i < s.size();) {
            unsigned char c = static_cast<unsigned char>(s[i]);
            size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : 4;
            if (i + len > s.size()) len = 1;
            cps.emplace_back(s.substr(i, len));
            i += len;
        }
        return cps;
    }

    std::unordered_map<std::string, uint64_t> vocab_;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, size_t> merges_;
};

}  // namespace r2r
