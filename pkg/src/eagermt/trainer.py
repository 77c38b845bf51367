"""SGD training loop: gradient clipping, LR halving, patience stopping.

Training runs over rebuilt shuffled streams each epoch (recurrent state
carries across batches within an epoch and resets at epoch boundaries).
Validation perplexity is checked every eval_every updates; the learning
rate halves whenever the check fails to improve on the best seen, and
training stops after patience_updates without improvement. The best
checkpoint by validation perplexity is retained.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .neural_core import ParameterSet, RecurrentState, backward, forward_batch
from .stream_batcher import StreamBatcher, build_streams

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr: float = 5.0
    batch_size: int = 32
    bptt: int = 32
    eval_every: int = 200
    patience_updates: int = 2000
    clip_norm: float = 0.25
    seed: int = 0
    max_updates: int | None = None

    def __post_init__(self):
        if self.lr <= 0 or self.eval_every < 1:
            raise ValueError("lr must be > 0 and eval_every >= 1")


@dataclass
class LogEntry:
    update: int
    train_loss: float
    valid_ppl: float
    lr: float

    def tsv(self) -> str:
        return f"{self.update}\t{self.train_loss:.6f}\t{self.valid_ppl:.6f}\t{self.lr:g}"


@dataclass
class TrainResult:
    best_params: ParameterSet
    best_ppl: float
    log: list[LogEntry] = field(default_factory=list)
    updates: int = 0
    diverged: bool = False
    final_lr: float = 0.0


def write_training_log(entries: list[LogEntry], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("update\ttrain_loss\tvalid_ppl\tlr\n")
        for entry in entries:
            f.write(entry.tsv() + "\n")


def perplexity(params: ParameterSet, pairs, cfg: TrainConfig) -> float:
    """exp(mean cross-entropy) over the concatenated streams of the pairs.

    Padding positions count exactly like any other token. The trailing
    remainder shorter than one bptt chunk is dropped, as during training.
    """
    src, tgt = build_streams(pairs)
    # shrink the lane count so short validation streams still fill a batch
    lanes = max(1, min(cfg.batch_size, len(src) // cfg.bptt))
    batcher = StreamBatcher(src, tgt, lanes, cfg.bptt)
    if len(batcher) == 0:
        raise ValueError("empty stream")
    state = RecurrentState.zeros(params.config, batcher.batch_size)
    total_nll = 0.0
    n_positions = 0
    for batch in batcher:
        loss, state, _ = forward_batch(params, state, batch)
        n = batch.src_in.size
        total_nll += loss * n
        n_positions += n
    return math.exp(total_nll / n_positions)


def train(params: ParameterSet, train_pairs, valid_pairs, cfg: TrainConfig) -> TrainResult:
    """SGD with clipped gradients; returns the best checkpoint and the log."""
    if not train_pairs:
        raise ValueError("empty training corpus")
    rng = np.random.default_rng(cfg.seed)
    best = params.copy()
    best_ppl = float("inf")
    lr = cfg.lr
    updates = 0
    last_improvement = 0
    log: list[LogEntry] = []
    loss_accum = 0.0
    loss_count = 0

    while True:
        order = rng.permutation(len(train_pairs))
        src, tgt = build_streams([train_pairs[i] for i in order])
        batcher = StreamBatcher(src, tgt, cfg.batch_size, cfg.bptt)
        if len(batcher) == 0:
            raise ValueError(
                f"training stream too short for batch_size={cfg.batch_size}, bptt={cfg.bptt}"
            )
        state = RecurrentState.zeros(params.config, cfg.batch_size)
        for batch in batcher:
            try:
                loss, state, cache = forward_batch(params, state, batch, train_mode=True, rng=rng)
                backward(params, cache)
            except FloatingPointError as exc:
                logger.error("aborting on divergence at update %d: %s", updates, exc)
                return TrainResult(best, best_ppl, log, updates, diverged=True, final_lr=lr)
            params.clip_grads(cfg.clip_norm)
            params.sgd_step(lr)
            updates += 1
            loss_accum += loss
            loss_count += 1

            if updates % cfg.eval_every == 0:
                try:
                    ppl = perplexity(params, valid_pairs, cfg)
                except FloatingPointError as exc:
                    logger.error("aborting on divergence at eval %d: %s", updates, exc)
                    return TrainResult(best, best_ppl, log, updates, diverged=True, final_lr=lr)
                log.append(LogEntry(updates, loss_accum / loss_count, ppl, lr))
                loss_accum = 0.0
                loss_count = 0
                if ppl < best_ppl:
                    best_ppl = ppl
                    best = params.copy()
                    last_improvement = updates
                else:
                    lr /= 2.0
                logger.info(
                    "update %d: train loss %.4f, valid ppl %.4f, lr %g",
                    updates, log[-1].train_loss, ppl, lr,
                )
            if updates - last_improvement >= cfg.patience_updates:
                return TrainResult(best, best_ppl, log, updates, final_lr=lr)
            if cfg.max_updates is not None and updates >= cfg.max_updates:
                return TrainResult(best, best_ppl, log, updates, final_lr=lr)
