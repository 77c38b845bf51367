"""Transform aligned pairs into equal-length, eager-feasible training pairs.

A pair is eager feasible when every aligned target token sits at or after
its source token's position, so a left-to-right reader has already seen
the source word before having to emit its translation. Feasibility is
reached by inserting padding tokens into the target: an optional fixed
run of start padding, then the minimal number of internal insertions,
then trailing padding on the shorter side to equalize lengths.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .aligner import Alignment, SentencePair
from .text_pipeline import EPS_ID

logger = logging.getLogger(__name__)


@dataclass
class EagerizeConfig:
    start_pad: int = 0
    eps: int = EPS_ID
    max_len_ratio: float = 9.0  # drop pairs whose transformed/src length exceeds this


@dataclass
class EagerPair:
    src: list[int]
    tgt: list[int]
    start_pad: int


def make_feasible(pair: SentencePair, align: Alignment, cfg: EagerizeConfig) -> EagerPair:
    """Insert padding so every link (i, j') satisfies i <= j', then equalize.

    Scans target tokens left to right; a token at position j linked to
    source position i > j gets (i - j) padding tokens inserted just before
    it, shifting it (and everything after it) to position i. The start
    padding is prepended first, so it reduces the internal insertions.
    """
    eps = cfg.eps
    source_of = align.source_of()
    tgt: list[int] = [eps] * cfg.start_pad
    for orig_j, tok in enumerate(pair.tgt, start=1):
        i = source_of.get(orig_j)
        j = len(tgt) + 1
        if i is not None and i > j:
            tgt.extend([eps] * (i - j))
        tgt.append(tok)
    src = list(pair.src)
    if len(src) < len(tgt):
        src.extend([eps] * (len(tgt) - len(src)))
    elif len(tgt) < len(src):
        tgt.extend([eps] * (len(src) - len(tgt)))
    return EagerPair(src, tgt, cfg.start_pad)


def shifted_positions(pair: EagerPair, eps: int = EPS_ID) -> dict[int, int]:
    """Map original target index -> position in the transformed target (1-based)."""
    mapping: dict[int, int] = {}
    orig_j = 0
    for pos, tok in enumerate(pair.tgt, start=1):
        if tok != eps:
            orig_j += 1
            mapping[orig_j] = pos
    return mapping


def verify_feasible(pair: EagerPair, align: Alignment, eps: int = EPS_ID) -> bool:
    """True iff every link (i, j) satisfies i <= shifted position of target j."""
    positions = shifted_positions(pair, eps)
    for i, j in align.links:
        j_shifted = positions.get(j)
        if j_shifted is None or i > j_shifted:
            return False
    return True


def internal_eps_count(pair: EagerPair, eps: int = EPS_ID) -> int:
    """Padding inserted between target tokens: excludes start and trailing runs."""
    core = _core_length(pair.tgt, eps)
    n_eps = sum(1 for t in pair.tgt[:core] if t == eps)
    return n_eps - pair.start_pad


def _core_length(tgt: list[int], eps: int) -> int:
    """Length up to and including the last non-padding token (0 if none)."""
    for pos in range(len(tgt), 0, -1):
        if tgt[pos - 1] != eps:
            return pos
    return 0


def eps_stats(corpus: list[EagerPair], eps: int = EPS_ID) -> float:
    """Mean over sentences of internal padding / core target length.

    Start padding and trailing equalization padding are excluded from both
    the count and the denominator; the denominator is the transformed
    target length up to the last real token, minus the start padding.
    """
    if not corpus:
        raise ValueError("empty corpus")
    total = 0.0
    for pair in corpus:
        core = _core_length(pair.tgt, eps)
        denom = core - pair.start_pad
        if denom <= 0:
            continue
        total += internal_eps_count(pair, eps) / denom
    return total / len(corpus)


def eagerize_corpus(
    pairs: list[SentencePair],
    alignments: list[Alignment],
    cfg: EagerizeConfig,
) -> list[EagerPair]:
    """Transform a corpus, dropping pairs that blow past the length-ratio cap."""
    if len(pairs) != len(alignments):
        raise ValueError("pairs and alignments must have equal length")
    out: list[EagerPair] = []
    dropped = 0
    for pair, align in zip(pairs, alignments):
        eager = make_feasible(pair, align, cfg)
        if len(pair.src) > 0 and len(eager.src) / len(pair.src) > cfg.max_len_ratio:
            dropped += 1
            continue
        out.append(eager)
    if dropped:
        logger.warning(
            "dropped %d/%d pairs exceeding length ratio %.1f",
            dropped, len(pairs), cfg.max_len_ratio,
        )
    return out
