"""Corpus-level BLEU with brevity penalty, plus length-bucketed reports.

Scores detokenized text against a single reference per sentence. An
international-style tokenizer (punctuation split off words) is applied
internally, so scores do not depend on upstream tokenization choices.
No smoothing: a zero precision at any order with candidate n-grams gives
a score of zero. Orders for which the candidate corpus has no n-grams at
all (very short corpora) are excluded from the geometric mean.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

_INTL_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
MAX_ORDER = 4


def bleu_tokenize(text: str) -> list[str]:
    return _INTL_TOKEN_RE.findall(text)


@dataclass
class BleuReport:
    bleu: float
    precisions: list[float | None]  # None where the candidate had no n-grams
    brevity_penalty: float
    candidate_length: int
    reference_length: int

    def tsv(self) -> str:
        parts = [f"{self.bleu:.2f}"]
        parts += ["-" if p is None else f"{100 * p:.1f}" for p in self.precisions]
        parts += [
            f"{self.brevity_penalty:.4f}",
            str(self.candidate_length),
            str(self.reference_length),
        ]
        return "\t".join(parts)

    @staticmethod
    def tsv_header() -> str:
        return "bleu\tp1\tp2\tp3\tp4\tbrevity_penalty\tcand_len\tref_len"


def _ngrams(tokens: list[str], order: int) -> Counter:
    return Counter(tuple(tokens[k:k + order]) for k in range(len(tokens) - order + 1))


def corpus_bleu(candidates: list[str], references: list[str]) -> BleuReport:
    """Clipped corpus-level n-gram precision BLEU, single reference."""
    if len(candidates) != len(references):
        raise ValueError(
            f"candidate/reference count mismatch: {len(candidates)} vs {len(references)}"
        )
    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    cand_len = 0
    ref_len = 0
    for cand_text, ref_text in zip(candidates, references):
        cand = bleu_tokenize(cand_text)
        ref = bleu_tokenize(ref_text)
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, MAX_ORDER + 1):
            cand_counts = _ngrams(cand, n)
            if not cand_counts:
                continue
            ref_counts = _ngrams(ref, n)
            for gram, count in cand_counts.items():
                matches[n - 1] += min(count, ref_counts[gram])
                totals[n - 1] += count

    precisions: list[float | None] = [
        (matches[n] / totals[n]) if totals[n] > 0 else None for n in range(MAX_ORDER)
    ]
    if cand_len == 0:
        return BleuReport(0.0, precisions, 0.0, 0, ref_len)
    brevity = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    defined = [p for p in precisions if p is not None]
    if not defined or any(p == 0.0 for p in defined):
        bleu = 0.0
    else:
        bleu = 100.0 * brevity * math.exp(sum(math.log(p) for p in defined) / len(defined))
    return BleuReport(bleu, precisions, brevity, cand_len, ref_len)


def bleu_by_length(
    candidates: list[str],
    references: list[str],
    sources: list[str],
    bucket_edges: list[int],
) -> dict[str, BleuReport]:
    """Corpus BLEU within buckets of source token length.

    bucket_edges like [20, 40, 60, 80] gives buckets 1-20, 21-40, 41-60,
    61-80, 81+. Empty buckets are absent from the result, not zero.
    """
    if not (len(candidates) == len(references) == len(sources)):
        raise ValueError("candidates, references, and sources must align")
    edges = sorted(bucket_edges)
    labels = []
    lo = 1
    for edge in edges:
        labels.append(f"{lo}-{edge}")
        lo = edge + 1
    labels.append(f"{lo}+")

    def bucket_of(length: int) -> str:
        for edge, label in zip(edges, labels):
            if length <= edge:
                return label
        return labels[-1]

    grouped: dict[str, tuple[list[str], list[str]]] = {}
    for cand, ref, src in zip(candidates, references, sources):
        label = bucket_of(len(bleu_tokenize(src)))
        grouped.setdefault(label, ([], []))
        grouped[label][0].append(cand)
        grouped[label][1].append(ref)
    return {
        label: corpus_bleu(*grouped[label]) for label in labels if label in grouped
    }
