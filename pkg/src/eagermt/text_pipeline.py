"""Tokenization, BPE subword segmentation, and the shared vocabulary.

One joint vocabulary serves source input, target input, and the output
layer (forced by three-way weight tying in the model). The padding token
EPS, the sentence boundary EOS, and UNK occupy fixed ids 0, 1, 2.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

EPS_TOKEN = "@@EPS@@"
EOS_TOKEN = "@@EOS@@"
UNK_TOKEN = "@@UNK@@"
RESERVED = (EPS_TOKEN, EOS_TOKEN, UNK_TOKEN)

EPS_ID = 0
EOS_ID = 1
UNK_ID = 2

# Suffix marking a non-final subword of a word. tokenize() never produces a
# token containing this string, so segmentation stays reversible.
CONT_MARKER = "@@"

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Whitespace + punctuation split; every punctuation char is its own token."""
    return _TOKEN_RE.findall(text)


def detokenize(tokens: list[str]) -> str:
    """Join tokens into plain text, attaching closing punctuation to the left."""
    out: list[str] = []
    for tok in tokens:
        if out and len(tok) == 1 and not tok.isalnum() and tok not in "([{«¿¡":
            out[-1] = out[-1] + tok
        else:
            out.append(tok)
    return " ".join(out)


@dataclass
class BpeModel:
    """An ordered list of learned symbol merges."""

    merges: list[tuple[str, str]] = field(default_factory=list)

    @property
    def num_operations(self) -> int:
        return len(self.merges)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for left, right in self.merges:
                f.write(f"{left} {right}\n")

    @classmethod
    def load(cls, path) -> "BpeModel":
        merges = []
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                left, right = line.split(" ")
                merges.append((left, right))
        return cls(merges)


def _merge_word(symbols: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    """Replace every adjacent occurrence of pair, scanning left to right."""
    left, right = pair
    out: list[str] = []
    i = 0
    n = len(symbols)
    while i < n:
        if i < n - 1 and symbols[i] == left and symbols[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def learn_bpe(corpus, num_ops: int) -> BpeModel:
    """Learn the num_ops most frequent adjacent-symbol merges.

    Counting is over word frequencies; merges never cross word boundaries.
    Frequency ties break to the lexicographically smallest pair, so the
    result is deterministic for a given corpus.
    """
    if num_ops < 0:
        raise ValueError("num_ops must be >= 0")
    word_freq: Counter[tuple[str, ...]] = Counter()
    n_words = 0
    for sentence in corpus:
        for word in sentence.split():
            word_freq[tuple(word)] += 1
            n_words += 1
    if n_words == 0:
        raise ValueError("empty corpus")

    merges: list[tuple[str, str]] = []
    for _ in range(num_ops):
        pair_counts: Counter[tuple[str, str]] = Counter()
        for symbols, freq in word_freq.items():
            for a, b in zip(symbols, symbols[1:]):
                pair_counts[(a, b)] += freq
        if not pair_counts:
            break
        best = min(pair_counts, key=lambda p: (-pair_counts[p], p))
        merges.append(best)
        word_freq = Counter(
            {_merge_word(symbols, best): freq for symbols, freq in word_freq.items()}
        )
    return BpeModel(merges)


def _segment_word(model: BpeModel, word: str) -> list[str]:
    symbols: tuple[str, ...] = tuple(word)
    for pair in model.merges:
        if len(symbols) == 1:
            break
        symbols = _merge_word(symbols, pair)
    return [s + CONT_MARKER for s in symbols[:-1]] + [symbols[-1]]


def apply_bpe(model: BpeModel, tokens: list[str]) -> list[str]:
    """Split each token into subwords; non-final subwords carry CONT_MARKER."""
    out: list[str] = []
    for tok in tokens:
        if tok in RESERVED:
            out.append(tok)
        else:
            out.extend(_segment_word(model, tok))
    return out


def merge_subwords(subwords: list[str]) -> list[str]:
    """Inverse of apply_bpe: rejoin continuation-marked subwords into tokens."""
    out: list[str] = []
    pending = ""
    for sub in subwords:
        if sub not in RESERVED and sub.endswith(CONT_MARKER):
            pending += sub[: -len(CONT_MARKER)]
        else:
            out.append(pending + sub)
            pending = ""
    if pending:
        out.append(pending)
    return out


class Vocab:
    """Bidirectional token-string <-> integer id mapping with fixed reserved ids."""

    def __init__(self, tokens: list[str]):
        self.token_of: list[str] = list(RESERVED) + [
            t for t in tokens if t not in RESERVED
        ]
        self.id_of: dict[str, int] = {t: i for i, t in enumerate(self.token_of)}

    def __len__(self) -> int:
        return len(self.token_of)

    @property
    def eps(self) -> int:
        return EPS_ID

    @property
    def eos(self) -> int:
        return EOS_ID

    @property
    def unk(self) -> int:
        return UNK_ID

    def encode(self, tokens: list[str]) -> list[int]:
        unk = UNK_ID
        return [self.id_of.get(t, unk) for t in tokens]

    def decode(self, ids) -> list[str]:
        return [self.token_of[i] for i in ids]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for tok in self.token_of:
                f.write(tok + "\n")

    @classmethod
    def load(cls, path) -> "Vocab":
        with open(path, encoding="utf-8") as f:
            tokens = [line.rstrip("\n") for line in f]
        if tokens[:3] != list(RESERVED):
            raise ValueError("vocab file must start with EPS, EOS, UNK markers")
        return cls(tokens[3:])


def build_vocab(corpora) -> Vocab:
    """Vocabulary over every subword type in the given segmented sentences.

    Ordering is frequency-descending, then lexicographic, after the three
    reserved tokens, so construction is deterministic.
    """
    counts: Counter[str] = Counter()
    for sentence in corpora:
        toks = sentence.split() if isinstance(sentence, str) else sentence
        counts.update(t for t in toks if t not in RESERVED)
    ordered = sorted(counts, key=lambda t: (-counts[t], t))
    return Vocab(ordered)


def strip_eps(tokens: list, eps=EPS_TOKEN) -> list:
    """Drop every padding token, preserving the order of the rest."""
    return [t for t in tokens if t != eps]
