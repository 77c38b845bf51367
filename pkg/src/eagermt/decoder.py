"""Constrained beam search for the eager model.

Every step consumes one input token and emits one output token. The input
schedule per hypothesis is: the source tokens in order, then (optionally)
injected padding inputs while the injection budget lasts, then the source
EOS, then padding inputs for a bounded number of rescue steps. Output
constraints: the first start_pad emissions are forced to padding (not
counted against the padding limit), padding probability is zeroed once the
limit is reached, and EOS probability is zeroed until the source EOS has
been consumed, which makes the output length structurally equal to the
consumed input length. Score ties break by (lower token ids, fewer
injections), so decoding is deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .neural_core import RecurrentState, forward_step, softmax
from .text_pipeline import EOS_ID, EPS_ID, strip_eps

logger = logging.getLogger(__name__)


@dataclass
class DecodeConfig:
    beam_size: int = 5
    padding_limit: int = 3
    spi: int = 0
    start_pad: int = 0
    max_extra_steps: int = 5
    # start from the state reached after one boundary step (EOS in, EOS
    # prev) instead of raw zeros: training streams only ever enter a
    # sentence through such a boundary, never from the zero state
    boundary_warmup: bool = True

    def __post_init__(self):
        if self.beam_size < 1 or self.padding_limit < 0 or self.spi < 0:
            raise ValueError("beam_size >= 1, padding_limit >= 0, spi >= 0 required")


@dataclass
class BeamHypothesis:
    tokens: list[int] = field(default_factory=list)
    logprob: float = 0.0
    state: RecurrentState | None = None
    eps_used: int = 0
    spi_used: int = 0
    src_pos: int = 0
    consumed_eos: bool = False
    extra_used: int = 0
    finished: bool = False

    def sort_key(self):
        return (-self.logprob, tuple(self.tokens), self.spi_used)


@dataclass
class DecodeResult:
    best: BeamHypothesis
    output: list[int]  # padding-stripped content, no EOS
    finished: bool


def initial_state(params, cfg: DecodeConfig, eos_id=EOS_ID) -> RecurrentState:
    """Decode starting state: zeros, optionally advanced by one boundary step."""
    state = RecurrentState.zeros(params.config, 1)
    if cfg.boundary_warmup:
        _, state = forward_step(params, state, eos_id, eos_id)
    return state


def _input_choices(hyp: BeamHypothesis, src, cfg: DecodeConfig, eps_id, eos_id):
    """(kind, token) inputs this hypothesis may consume next."""
    if hyp.consumed_eos:
        if hyp.extra_used < cfg.max_extra_steps:
            return [("extra", eps_id)]
        return []
    if hyp.src_pos < len(src):
        return [("src", src[hyp.src_pos])]
    choices = [("eos", eos_id)]
    if hyp.spi_used < cfg.spi:
        choices.append(("inject", eps_id))
    return choices


def masked_distribution(probs, hyp, step, cfg, eps_id, eos_id, input_is_source_eos):
    """Apply the padding limit and pre-source-EOS EOS mask, renormalized."""
    p = probs.copy()
    allow_eos = hyp.consumed_eos or input_is_source_eos
    allow_eps = step < cfg.start_pad or hyp.eps_used < cfg.padding_limit
    if not allow_eos:
        p[eos_id] = 0.0
    if not allow_eps:
        p[eps_id] = 0.0
    total = p.sum()
    if total <= 0.0:
        return p  # all mass masked; no successors
    return p / total


def _successors(hyp, kind, probs, new_state, step, cfg, eps_id, eos_id, top_k):
    """Top-k scored successors of one (hypothesis, input) pair.

    The per-expansion cap is what makes a beam of one reduce exactly to
    greedy argmax decoding: only the single best token survives, so a
    sub-argmax EOS can never sneak into the finished pool.
    """
    p = masked_distribution(probs, hyp, step, cfg, eps_id, eos_id, kind == "eos")
    if step < cfg.start_pad:
        token_ids = [eps_id] if p[eps_id] > 0.0 else []
    else:
        token_ids = np.flatnonzero(p > 0.0).tolist()
        token_ids.sort(key=lambda v: (-p[v], v))
        token_ids = token_ids[:top_k]
    out = []
    consumed_eos = hyp.consumed_eos or kind == "eos"
    for v in token_ids:
        out.append(
            BeamHypothesis(
                tokens=hyp.tokens + [v],
                logprob=hyp.logprob + float(np.log(p[v])),
                state=new_state,
                eps_used=hyp.eps_used + (1 if v == eps_id and step >= cfg.start_pad else 0),
                spi_used=hyp.spi_used + (1 if kind == "inject" else 0),
                src_pos=hyp.src_pos + (1 if kind == "src" else 0),
                consumed_eos=consumed_eos,
                extra_used=hyp.extra_used + (1 if kind == "extra" else 0),
                finished=v == eos_id,
            )
        )
    return out


def step_hypothesis(params, hyp, input_tok, cfg, *, input_is_source_eos=False,
                    eps_id=EPS_ID, eos_id=EOS_ID):
    """Score the successors of one unfinished hypothesis for one input token."""
    if hyp.finished:
        raise ValueError("cannot step a finished hypothesis")
    prev = hyp.tokens[-1] if hyp.tokens else eos_id
    logits, new_state = forward_step(params, hyp.state, input_tok, prev)
    probs = softmax(logits[None, :])[0]
    kind = "eos" if input_is_source_eos else ("extra" if hyp.consumed_eos else "src")
    succ = _successors(
        hyp, kind, probs, new_state, len(hyp.tokens), cfg, eps_id, eos_id, cfg.beam_size
    )
    succ.sort(key=BeamHypothesis.sort_key)
    return succ


def decode_sentence(params, src, cfg: DecodeConfig, eps_id=EPS_ID, eos_id=EOS_ID) -> DecodeResult:
    """Beam-search one sentence; src is the token id sequence without EOS."""
    src = list(src)
    if not src:
        raise ValueError("empty source")
    ids = np.asarray(src)
    if ids.min() < 0 or ids.max() >= params.config.vocab_size:
        raise ValueError("source token id out of range")

    state0 = initial_state(params, cfg, eos_id)
    alive = [BeamHypothesis(state=state0)]
    finished: list[BeamHypothesis] = []
    max_steps = len(src) + cfg.spi + 1 + cfg.max_extra_steps
    for step in range(max_steps):
        expansions = []  # (hyp, kind, input token)
        for hyp in alive:
            for kind, tok in _input_choices(hyp, src, cfg, eps_id, eos_id):
                expansions.append((hyp, kind, tok))
        if not expansions:
            break
        in_toks = np.array([tok for _, _, tok in expansions], dtype=np.int64)
        prev_toks = np.array(
            [hyp.tokens[-1] if hyp.tokens else eos_id for hyp, _, _ in expansions],
            dtype=np.int64,
        )
        stacked = RecurrentState(
            np.concatenate([hyp.state.h for hyp, _, _ in expansions], axis=1),
            np.concatenate([hyp.state.c for hyp, _, _ in expansions], axis=1),
        )
        logits, new_states = forward_step(params, stacked, in_toks, prev_toks)
        all_probs = softmax(logits)

        candidates = []
        for idx, (hyp, kind, _) in enumerate(expansions):
            state_i = RecurrentState(
                new_states.h[:, idx:idx + 1, :], new_states.c[:, idx:idx + 1, :]
            )
            candidates.extend(
                _successors(
                    hyp, kind, all_probs[idx], state_i, step, cfg, eps_id, eos_id,
                    cfg.beam_size,
                )
            )
        # finished successors are held aside; alive slots go to the best rest
        candidates.sort(key=BeamHypothesis.sort_key)
        next_alive = []
        for cand in candidates:
            if cand.finished:
                finished.append(cand)
            elif len(next_alive) < cfg.beam_size:
                next_alive.append(cand)
        alive = next_alive
        if len(finished) >= cfg.beam_size:
            break

    if finished:
        best = min(finished, key=BeamHypothesis.sort_key)
        content = best.tokens[:-1]
        return DecodeResult(best, strip_eps(content, eps=eps_id), True)
    logger.warning("no hypothesis finished within %d steps; returning best unfinished", max_steps)
    best = min(alive, key=BeamHypothesis.sort_key) if alive else BeamHypothesis()
    return DecodeResult(best, strip_eps(best.tokens, eps=eps_id), False)


def translate(params, src, cfg: DecodeConfig, eps_id=EPS_ID, eos_id=EOS_ID) -> list[int]:
    """Best padding-free translation of one source id sequence."""
    return decode_sentence(params, src, cfg, eps_id, eos_id).output
