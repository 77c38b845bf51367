"""EM word alignment: lexical translation table with a diagonal position prior.

Each target token aligns to at most one source token (or to NULL). The
lexicon t(target | source) is re-estimated by exact EM; the NULL emission
distribution is held fixed at uniform over the vocabulary, which prevents
the classic NULL-absorbs-everything degeneracy and keeps the data
log-likelihood non-decreasing across iterations. Positions use 1-based
indices everywhere in this module; the Pharaoh file format is 0-based.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

NULL_PRIOR = 0.05  # fixed prior mass on the NULL slot


@dataclass
class SentencePair:
    src: list[int]
    tgt: list[int]


@dataclass
class Alignment:
    """Set of (source index, target index) links, at most one source per target."""

    links: set[tuple[int, int]] = field(default_factory=set)

    def __post_init__(self):
        tgt_seen = set()
        for _, j in self.links:
            if j in tgt_seen:
                raise ValueError(f"target position {j} linked more than once")
            tgt_seen.add(j)

    def source_of(self) -> dict[int, int]:
        return {j: i for i, j in self.links}


def _diagonal_prior(src_len: int, tgt_pos: int, tgt_len: int, tension: float):
    """Prior over {NULL} + 1..src_len for one target position.

    Real-source mass is (1 - NULL_PRIOR), distributed proportionally to
    exp(-tension * |i/m - j/n|).
    """
    distances = [abs(i / src_len - tgt_pos / tgt_len) for i in range(1, src_len + 1)]
    d_min = min(distances)
    # shift by the minimum so the largest weight is exp(0); the constant
    # cancels in the normalization but keeps huge tensions finite
    weights = [math.exp(-tension * (d - d_min)) for d in distances]
    z = sum(weights)
    scale = (1.0 - NULL_PRIOR) / z
    return [NULL_PRIOR] + [w * scale for w in weights]


class LexTable:
    """Lexical translation probabilities t(target | source) plus the prior tension."""

    def __init__(self, vocab_size: int, tension: float):
        self.vocab_size = vocab_size
        self.tension = tension
        self.t_prob: dict[int, dict[int, float]] = {}

    def prob(self, src_id: int, tgt_id: int) -> float:
        dist = self.t_prob.get(src_id)
        if dist is None:
            # unseen source type: uniform fallback, same as NULL emission
            return 1.0 / self.vocab_size
        return dist.get(tgt_id, 0.0)

    def null_prob(self, tgt_id: int) -> float:
        return 1.0 / self.vocab_size

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"{self.vocab_size}\t{self.tension}\n")
            for src_id in sorted(self.t_prob):
                for tgt_id, p in sorted(self.t_prob[src_id].items()):
                    f.write(f"{src_id}\t{tgt_id}\t{p:.17g}\n")

    @classmethod
    def load(cls, path) -> "LexTable":
        with open(path, encoding="utf-8") as f:
            header = f.readline().split("\t")
            table = cls(int(header[0]), float(header[1]))
            for line in f:
                s, t, p = line.split("\t")
                table.t_prob.setdefault(int(s), {})[int(t)] = float(p)
        return table


def em_train(
    corpus: list[SentencePair],
    iterations: int = 5,
    tension: float = 4.0,
    vocab_size: int | None = None,
    log_likelihoods: list[float] | None = None,
) -> LexTable:
    """Estimate the lexicon by expected-count EM over alignment variables.

    If log_likelihoods is given, the per-iteration data log-likelihood
    (evaluated at the parameters entering each E-step) is appended to it.
    """
    if not corpus:
        raise ValueError("empty corpus")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if vocab_size is None:
        vocab_size = 1 + max(max(pair.src + pair.tgt) for pair in corpus)

    table = LexTable(vocab_size, tension)
    # uniform initialization over the joint vocab for every source type seen
    src_types = sorted({s for pair in corpus for s in pair.src})
    uniform = 1.0 / vocab_size
    for s in src_types:
        table.t_prob[s] = defaultdict(lambda: uniform)

    priors_cache: dict[tuple[int, int], list[list[float]]] = {}

    def priors_for(m: int, n: int) -> list[list[float]]:
        key = (m, n)
        if key not in priors_cache:
            priors_cache[key] = [
                _diagonal_prior(m, j, n, tension) for j in range(1, n + 1)
            ]
        return priors_cache[key]

    for _ in range(iterations):
        counts: dict[int, dict[int, float]] = {s: defaultdict(float) for s in src_types}
        totals: dict[int, float] = defaultdict(float)
        ll = 0.0
        for pair in corpus:
            m, n = len(pair.src), len(pair.tgt)
            priors = priors_for(m, n)
            for j, tgt_id in enumerate(pair.tgt):
                prior = priors[j]
                w_null = prior[0] * table.null_prob(tgt_id)
                weights = [
                    prior[i + 1] * table.t_prob[src_id][tgt_id]
                    for i, src_id in enumerate(pair.src)
                ]
                z = w_null + sum(weights)
                ll += math.log(z)
                for src_id, w in zip(pair.src, weights):
                    gamma = w / z
                    counts[src_id][tgt_id] += gamma
                    totals[src_id] += gamma
        if log_likelihoods is not None:
            log_likelihoods.append(ll)
        for s in src_types:
            total = totals[s]
            if total > 0.0:
                table.t_prob[s] = {t: c / total for t, c in counts[s].items()}
    # freeze defaultdicts into plain dicts
    table.t_prob = {s: dict(d) for s, d in table.t_prob.items()}
    return table


def viterbi_align(table: LexTable, pair: SentencePair) -> Alignment:
    """Per target position, argmax over {NULL} + source positions of prior * t.

    A NULL argmax leaves the position unlinked. Ties keep the earliest
    candidate in the order NULL, 1, .., src_len.
    """
    m, n = len(pair.src), len(pair.tgt)
    links: set[tuple[int, int]] = set()
    for j, tgt_id in enumerate(pair.tgt, start=1):
        prior = _diagonal_prior(m, j, n, table.tension)
        best_i = 0
        best_score = prior[0] * table.null_prob(tgt_id)
        for i, src_id in enumerate(pair.src, start=1):
            score = prior[i] * table.prob(src_id, tgt_id)
            if score > best_score:
                best_score = score
                best_i = i
        if best_i > 0:
            links.add((best_i, j))
    return Alignment(links)


def corpus_log_likelihood(table: LexTable, corpus: list[SentencePair]) -> float:
    """Data log-likelihood of the corpus under the table and its prior."""
    ll = 0.0
    for pair in corpus:
        m, n = len(pair.src), len(pair.tgt)
        for j, tgt_id in enumerate(pair.tgt, start=1):
            prior = _diagonal_prior(m, j, n, table.tension)
            z = prior[0] * table.null_prob(tgt_id)
            for i, src_id in enumerate(pair.src, start=1):
                z += prior[i] * table.prob(src_id, tgt_id)
            ll += math.log(z)
    return ll


def write_alignments(alignments: list[Alignment], path) -> None:
    """Pharaoh format: space-separated "i-j" pairs, 0-based, one line per pair."""
    with open(path, "w", encoding="utf-8") as f:
        for align in alignments:
            ordered = sorted(align.links, key=lambda link: (link[1], link[0]))
            f.write(" ".join(f"{i - 1}-{j - 1}" for i, j in ordered) + "\n")


def read_alignments(path) -> list[Alignment]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            links = set()
            for part in line.split():
                i, j = part.split("-")
                links.add((int(i) + 1, int(j) + 1))
            out.append(Alignment(links))
    return out
