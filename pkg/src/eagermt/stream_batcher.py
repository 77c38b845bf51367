"""Language-model-style batching over concatenated parallel streams.

All transformed pairs have equal source/target lengths, so both sides
concatenate into two token streams of identical length (one EOS after
every sentence on both sides). The streams are cut into batch_size
contiguous lanes; each batch serves the next bptt columns of every lane,
and recurrent state is carried across consecutive batches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eagerize import EagerPair
from .text_pipeline import EOS_ID


@dataclass
class StreamBatch:
    src_in: np.ndarray  # [batch_size, bptt] int64
    tgt_prev: np.ndarray  # same shape; gold targets delayed by one position
    tgt_out: np.ndarray  # same shape
    is_continuation: bool


def build_streams(corpus: list[EagerPair], eos: int = EOS_ID) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate all pairs in order, appending EOS per sentence on both sides."""
    src_parts: list[int] = []
    tgt_parts: list[int] = []
    for k, pair in enumerate(corpus):
        if len(pair.src) != len(pair.tgt):
            raise ValueError(f"pair {k}: src/tgt lengths differ ({len(pair.src)} vs {len(pair.tgt)})")
        src_parts.extend(pair.src)
        src_parts.append(eos)
        tgt_parts.extend(pair.tgt)
        tgt_parts.append(eos)
    return np.asarray(src_parts, dtype=np.int64), np.asarray(tgt_parts, dtype=np.int64)


class StreamBatcher:
    """Serves consecutive [batch_size, bptt] chunks of the lane-split streams.

    Each lane is a contiguous stream slice; the trailing remainder shorter
    than bptt is dropped, as is the remainder of the lane split itself.
    tgt_prev is tgt_out delayed by one position over the whole lane, seeded
    with EOS at the lane start.
    """

    def __init__(self, src_stream, tgt_stream, batch_size: int, bptt: int, eos: int = EOS_ID):
        if batch_size < 1 or bptt < 1:
            raise ValueError("batch_size and bptt must be >= 1")
        src_stream = np.asarray(src_stream, dtype=np.int64)
        tgt_stream = np.asarray(tgt_stream, dtype=np.int64)
        if src_stream.shape != tgt_stream.shape:
            raise ValueError("source and target streams must have equal length")
        lane_len = len(src_stream) // batch_size
        self.num_batches = lane_len // bptt
        self.batch_size = batch_size
        self.bptt = bptt
        n = lane_len * batch_size
        self.src_lanes = src_stream[:n].reshape(batch_size, lane_len)
        self.tgt_lanes = tgt_stream[:n].reshape(batch_size, lane_len)
        self.tgt_prev_lanes = np.concatenate(
            [np.full((batch_size, 1), eos, dtype=np.int64), self.tgt_lanes[:, :-1]],
            axis=1,
        )

    def batches(self):
        """Yield one epoch of batches; the cursor resets when exhausted."""
        for b in range(self.num_batches):
            lo = b * self.bptt
            hi = lo + self.bptt
            yield StreamBatch(
                src_in=self.src_lanes[:, lo:hi],
                tgt_prev=self.tgt_prev_lanes[:, lo:hi],
                tgt_out=self.tgt_lanes[:, lo:hi],
                is_continuation=b > 0,
            )

    def __iter__(self):
        return self.batches()

    def __len__(self) -> int:
        return self.num_batches
