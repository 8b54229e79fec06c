#!/usr/bin/env python3
"""Train the shipped subword tokenizer fixture.

Learns byte-pair merges over the fixture corpora, question sets, and response
fixtures, then writes assets/tokenizer/vocab.txt and merges.txt. The merge
application rule mirrors the C++ tokenizer: split a whitespace word into code
points, then repeatedly merge the adjacent pair with the lowest rank
(leftmost occurrence first) until no listed pair remains.

Run from the repository root:  python3 scripts/train_tokenizer.py
"""

import json
import pathlib
import string
import sys
from collections import Counter

ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT_DIR = ROOT / "assets" / "tokenizer"
NUM_MERGES = 400
MAX_TOKEN_LEN = 7  # keeps stems like "coincid" subword-sized instead of whole words

# Morphological families the subword tokenizer must split into shared
# prefixes; repeated so their merges win early.
SEED_WORDS = (
    ["coincidence", "coincidental", "coincide", "coincidences", "coinciding"] * 50
    + ["tremendous", "tremendously", "believe", "believer", "telling", "tell"] * 10
)

PUNCT = set(string.punctuation)


def strip_punct(text: str) -> str:
    return "".join(" " if c in PUNCT else c for c in text)


def corpus_words() -> list[str]:
    words: list[str] = []

    def add_text(text: str) -> None:
        words.extend(text.split())
        words.extend(strip_punct(text.lower()).split())

    for path in sorted((ROOT / "fixtures" / "corpora").glob("*.json")):
        doc = json.loads(path.read_text())
        add_text(doc["character"])
        add_text(doc["description"])
        for group in doc["catchphrases"]:
            add_text(group["label"])
            for phrase in group["phrases"]:
                add_text(phrase)
        for demo in doc["demonstrations"]:
            add_text(demo["text"])
            if demo.get("scenario"):
                add_text(demo["scenario"])
        for pseudo in doc["pseudo_data"]:
            add_text(pseudo["text"])
    for path in sorted((ROOT / "fixtures" / "questions").glob("*.json")):
        doc = json.loads(path.read_text())
        for q in doc["questions"]:
            add_text(q["text"])
    for path in sorted((ROOT / "fixtures" / "responses").glob("*.txt")):
        add_text(path.read_text())
    words.extend(SEED_WORDS)
    return words


def train(words: list[str], num_merges: int):
    freq = Counter(tuple(w) for w in words)
    merges: list[tuple[str, str]] = []
    for _ in range(num_merges):
        pairs: Counter = Counter()
        for symbols, n in freq.items():
            for a, b in zip(symbols, symbols[1:]):
                if len(a) + len(b) <= MAX_TOKEN_LEN:
                    pairs[(a, b)] += n
        if not pairs:
            break
        # deterministic: highest count, ties to the lexicographically smallest pair
        best_count = max(pairs.values())
        if best_count < 2:
            break
        best = sorted(p for p, n in pairs.items() if n == best_count)[0]
        merges.append(best)
        merged = best[0] + best[1]
        new_freq: Counter = Counter()
        for symbols, n in freq.items():
            out = []
            i = 0
            while i < len(symbols):
                if i + 1 < len(symbols) and symbols[i] == best[0] and symbols[i + 1] == best[1]:
                    out.append(merged)
                    i += 2
                else:
                    out.append(symbols[i])
                    i += 1
            new_freq[tuple(out)] += n
        freq = new_freq
    return merges


def apply_merges(word: str, rank: dict[tuple[str, str], int]) -> list[str]:
    parts = list(word)
    while len(parts) > 1:
        best_rank, best_pos = None, None
        for i in range(len(parts) - 1):
            r = rank.get((parts[i], parts[i + 1]))
            if r is not None and (best_rank is None or r < best_rank):
                best_rank, best_pos = r, i
        if best_pos is None:
            break
        parts[best_pos : best_pos + 2] = [parts[best_pos] + parts[best_pos + 1]]
    return parts


def main() -> int:
    words = corpus_words()
    merges = train(words, NUM_MERGES)
    rank = {pair: i for i, pair in enumerate(merges)}

    vocab: list[str] = ["<unk>"]
    seen = {"<unk>"}
    for c in (chr(i) for i in range(0x21, 0x7F)):  # printable ASCII singles
        vocab.append(c)
        seen.add(c)
    for w in words:  # singles beyond ASCII observed in the data
        for c in w:
            if c not in seen:
                vocab.append(c)
                seen.add(c)
    for a, b in merges:
        t = a + b
        if t not in seen:
            vocab.append(t)
            seen.add(t)

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    (OUT_DIR / "vocab.txt").write_text("\n".join(vocab) + "\n")
    (OUT_DIR / "merges.txt").write_text("\n".join(f"{a} {b}" for a, b in merges) + "\n")

    for probe in ("coincidence", "coincidental"):
        print(probe, "->", apply_merges(probe, rank))
    print(f"{len(vocab)} vocab entries, {len(merges)} merges")
    return 0


if __name__ == "__main__":
    sys.exit(main())
