"""The translation model and its gradients, built on plain dense arrays.

Per step the model embeds the current source token and the previously
emitted target token (one shared embedding matrix), concatenates the two
vectors, runs them through a stack of LSTM layers with hidden size twice
the embedding dim, projects the top hidden state back to embedding size,
and scores the vocabulary against the same embedding matrix plus a
per-token bias (three-way weight tying). All reverse-mode gradients are
hand-written; no autodiff framework is involved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class ModelConfig:
    embed_dim: int
    layers: int
    vocab_size: int
    dropout_embed: float = 0.0
    dropout_hidden: float = 0.0
    dtype: str = "float64"

    def __post_init__(self):
        if self.embed_dim <= 0 or self.layers < 1:
            raise ValueError("embed_dim must be > 0 and layers >= 1")

    @property
    def hidden_size(self) -> int:
        return 2 * self.embed_dim

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)


@dataclass
class RecurrentState:
    """Per-layer hidden and cell arrays, shape [layers, batch, hidden]."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, config: ModelConfig, batch_size: int) -> "RecurrentState":
        shape = (config.layers, batch_size, config.hidden_size)
        return cls(np.zeros(shape, config.np_dtype), np.zeros(shape, config.np_dtype))

    def copy(self) -> "RecurrentState":
        return RecurrentState(self.h.copy(), self.c.copy())


class ParameterSet:
    """All trainable weights with paired gradient buffers.

    Gate rows are ordered input, forget, cell, output within each layer's
    4H-row weight matrices. The forget-gate bias initializes to 1.0, all
    weights uniform in [-0.1, 0.1].
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator | None = None):
        self.config = config
        dt = config.np_dtype
        E, H, V, L = config.embed_dim, config.hidden_size, config.vocab_size, config.layers
        if rng is None:
            rng = np.random.default_rng(0)

        def uniform(*shape):
            return rng.uniform(-0.1, 0.1, size=shape).astype(dt)

        self.embedding = uniform(V, E)
        self.lstm_wx = [uniform(4 * H, 2 * E if l == 0 else H) for l in range(L)]
        self.lstm_wh = [uniform(4 * H, H) for l in range(L)]
        self.lstm_b = []
        for _ in range(L):
            b = np.zeros(4 * H, dt)
            b[H:2 * H] = 1.0
            self.lstm_b.append(b)
        self.proj_w = uniform(E, H)
        self.proj_b = np.zeros(E, dt)
        self.out_b = np.zeros(V, dt)
        self.grads = {name: np.zeros_like(arr) for name, arr in self.named()}

    def named(self):
        yield "embedding", self.embedding
        for l in range(self.config.layers):
            yield f"lstm{l}.wx", self.lstm_wx[l]
            yield f"lstm{l}.wh", self.lstm_wh[l]
            yield f"lstm{l}.b", self.lstm_b[l]
        yield "proj.w", self.proj_w
        yield "proj.b", self.proj_b
        yield "out.b", self.out_b

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0.0

    def grad_global_norm(self) -> float:
        total = 0.0
        for g in self.grads.values():
            total += float(np.sum(g * g))
        return float(np.sqrt(total))

    def clip_grads(self, max_norm: float) -> float:
        """Scale all gradients so the global norm is at most max_norm."""
        norm = self.grad_global_norm()
        if norm > max_norm and norm > 0.0:
            scale = max_norm / norm
            for g in self.grads.values():
                g *= scale
        return norm

    def sgd_step(self, lr: float) -> None:
        for name, arr in self.named():
            arr -= lr * self.grads[name]

    def copy(self) -> "ParameterSet":
        dup = ParameterSet.__new__(ParameterSet)
        dup.config = self.config
        dup.embedding = self.embedding.copy()
        dup.lstm_wx = [w.copy() for w in self.lstm_wx]
        dup.lstm_wh = [w.copy() for w in self.lstm_wh]
        dup.lstm_b = [b.copy() for b in self.lstm_b]
        dup.proj_w = self.proj_w.copy()
        dup.proj_b = self.proj_b.copy()
        dup.out_b = self.out_b.copy()
        dup.grads = {name: np.zeros_like(arr) for name, arr in dup.named()}
        return dup


def save_checkpoint(params: ParameterSet, path, vocab_tokens: list[str] | None = None,
                    bpe_merges: list[tuple[str, str]] | None = None) -> None:
    """Write config + all weights (row-major) to an npz container, bit-exact.

    The vocabulary token list and BPE merges ride along when given, so a
    checkpoint alone is enough to translate raw text.
    """
    cfg = params.config
    arrays = {name.replace(".", "_"): arr for name, arr in params.named()}
    arrays["format_version"] = np.array(CHECKPOINT_FORMAT_VERSION)
    arrays["config_json"] = np.array(
        json.dumps(
            {
                "embed_dim": cfg.embed_dim,
                "layers": cfg.layers,
                "vocab_size": cfg.vocab_size,
                "dropout_embed": cfg.dropout_embed,
                "dropout_hidden": cfg.dropout_hidden,
                "dtype": cfg.dtype,
            }
        )
    )
    if vocab_tokens is not None:
        arrays["vocab_tokens"] = np.array(vocab_tokens, dtype=object)
    if bpe_merges is not None:
        arrays["bpe_merges"] = np.array([list(m) for m in bpe_merges], dtype=object)
    with open(path, "wb") as f:
        np.savez(f, **arrays)


def load_checkpoint(path):
    """Load (params, vocab_tokens, bpe_merges) written by save_checkpoint."""
    with np.load(path, allow_pickle=True) as data:
        version = int(data["format_version"])
        if version > CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"checkpoint format v{version} is newer than supported")
        cfg = ModelConfig(**json.loads(str(data["config_json"])))
        params = ParameterSet(cfg)
        for name, arr in params.named():
            arr[...] = data[name.replace(".", "_")]
        tokens = None
        if "vocab_tokens" in data:
            tokens = [str(t) for t in data["vocab_tokens"]]
        merges = None
        if "bpe_merges" in data:
            merges = [(str(a), str(b)) for a, b in data["bpe_merges"]]
    return params, tokens, merges


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


def apply_dropout(vectors: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted dropout: zero entries with probability rate, scale by 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if rate == 0.0:
        return vectors
    return vectors * dropout_mask(vectors.shape, rate, rng, vectors.dtype)


def dropout_mask(shape, rate: float, rng: np.random.Generator, dtype=np.float64) -> np.ndarray:
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    keep = (rng.random(shape) >= rate).astype(dtype)
    return keep / (1.0 - rate)


@dataclass
class _DropoutMasks:
    """Masks fixed for the duration of one batch (variational style)."""

    emb_scale: np.ndarray | None  # [vocab] row scaling for the input roles
    hidden: list  # per layer gap, [batch, hidden] or None


def _sample_masks(config: ModelConfig, batch_size: int, rng) -> _DropoutMasks:
    dt = config.np_dtype
    emb_scale = None
    if config.dropout_embed > 0.0:
        emb_scale = dropout_mask((config.vocab_size,), config.dropout_embed, rng, dt)
    hidden = []
    for _ in range(config.layers - 1):
        if config.dropout_hidden > 0.0:
            hidden.append(dropout_mask((batch_size, config.hidden_size), config.dropout_hidden, rng, dt))
        else:
            hidden.append(None)
    return _DropoutMasks(emb_scale, hidden)


@dataclass
class _StepCache:
    src_tok: np.ndarray
    prev_tok: np.ndarray
    target: np.ndarray
    layers: list  # per layer: (x_in, h_prev, c_prev, i, f, g, o, c, tanh_c)
    h_top: np.ndarray
    y: np.ndarray
    probs: np.ndarray


@dataclass
class BatchCache:
    """Everything backward() needs; produced by forward_batch in train mode."""

    steps: list = field(default_factory=list)
    masks: _DropoutMasks | None = None
    n_positions: int = 0


def _step(params, state, src_tok, prev_tok, masks, cache_layers=None):
    """One model step over a batch of token pairs; mutates nothing."""
    cfg = params.config
    H = cfg.hidden_size
    emb = params.embedding
    if masks is not None and masks.emb_scale is not None:
        x_src = emb[src_tok] * masks.emb_scale[src_tok, None]
        x_tgt = emb[prev_tok] * masks.emb_scale[prev_tok, None]
    else:
        x_src = emb[src_tok]
        x_tgt = emb[prev_tok]
    x = np.concatenate([x_src, x_tgt], axis=1)

    new_h = np.empty_like(state.h)
    new_c = np.empty_like(state.c)
    layer_in = x
    for l in range(cfg.layers):
        h_prev = state.h[l]
        c_prev = state.c[l]
        a = layer_in @ params.lstm_wx[l].T + h_prev @ params.lstm_wh[l].T + params.lstm_b[l]
        i = _sigmoid(a[:, :H])
        f = _sigmoid(a[:, H:2 * H])
        g = np.tanh(a[:, 2 * H:3 * H])
        o = _sigmoid(a[:, 3 * H:])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        new_h[l] = h
        new_c[l] = c
        if cache_layers is not None:
            cache_layers.append((layer_in, h_prev, c_prev, i, f, g, o, c, tc))
        layer_in = h
        if l < cfg.layers - 1 and masks is not None and masks.hidden[l] is not None:
            layer_in = layer_in * masks.hidden[l]

    h_top = new_h[cfg.layers - 1]
    y = h_top @ params.proj_w.T + params.proj_b
    logits = y @ params.embedding.T + params.out_b
    return logits, RecurrentState(new_h, new_c), h_top, y


def forward_step(params, state, src_tok, prev_tgt_tok, train_mode=False, rng=None):
    """Logits over the vocabulary for one input pair, plus the next state.

    Accepts scalar token ids (returns a [vocab] logit vector) or equal-length
    id arrays (returns [batch, vocab]).
    """
    scalar = np.isscalar(src_tok) or (np.ndim(src_tok) == 0)
    src = np.atleast_1d(np.asarray(src_tok, dtype=np.int64))
    prev = np.atleast_1d(np.asarray(prev_tgt_tok, dtype=np.int64))
    V = params.config.vocab_size
    if src.min() < 0 or src.max() >= V or prev.min() < 0 or prev.max() >= V:
        raise ValueError("token id out of range")
    masks = None
    if train_mode:
        if rng is None:
            rng = np.random.default_rng()
        masks = _sample_masks(params.config, len(src), rng)
    logits, new_state, _, _ = _step(params, state, src, prev, masks)
    if scalar:
        return logits[0], new_state
    return logits, new_state


def forward_batch(params, init_state, batch, train_mode=False, rng=None):
    """Mean cross-entropy over all positions of a stream batch.

    Returns (loss, final_state, cache); the cache is populated only in
    train mode. Padding positions contribute to the loss exactly like any
    other token. The returned state is a detached copy.
    """
    cfg = params.config
    src_in = np.asarray(batch.src_in, dtype=np.int64)
    tgt_prev = np.asarray(batch.tgt_prev, dtype=np.int64)
    tgt_out = np.asarray(batch.tgt_out, dtype=np.int64)
    B, T = src_in.shape
    masks = None
    if train_mode:
        if rng is None:
            rng = np.random.default_rng()
        masks = _sample_masks(cfg, B, rng)

    cache = BatchCache(masks=masks, n_positions=B * T) if train_mode else None
    state = init_state
    rows = np.arange(B)
    total_nll = 0.0
    for t in range(T):
        src_t = src_in[:, t]
        prev_t = tgt_prev[:, t]
        cache_layers = [] if train_mode else None
        logits, state, h_top, y = _step(params, state, src_t, prev_t, masks, cache_layers)
        probs = softmax(logits)
        p_target = probs[rows, tgt_out[:, t]]
        with np.errstate(divide="ignore"):
            total_nll -= float(np.sum(np.log(p_target)))
        if train_mode:
            cache.steps.append(
                _StepCache(src_t, prev_t, tgt_out[:, t], cache_layers, h_top, y, probs)
            )
    loss = total_nll / (B * T)
    if not np.isfinite(loss):
        raise FloatingPointError(
            f"non-finite loss {loss} (batch {B}x{T}, src range "
            f"{src_in.min()}..{src_in.max()})"
        )
    return loss, state.copy(), cache


def backward(params: ParameterSet, cache: BatchCache) -> None:
    """Populate params.grads with d(mean loss)/d(theta) for the cached batch.

    The tied embedding accumulates contributions from its source-input,
    target-input, and output roles. Gradient flow truncates at the batch
    boundary (the initial state is treated as constant).
    """
    cfg = params.config
    L, H, E = cfg.layers, cfg.hidden_size, cfg.embed_dim
    masks = cache.masks
    params.zero_grads()
    g = params.grads
    scale = 1.0 / cache.n_positions

    first = cache.steps[0]
    B = first.probs.shape[0]
    dt = cfg.np_dtype
    dh_next = [np.zeros((B, H), dt) for _ in range(L)]
    dc_next = [np.zeros((B, H), dt) for _ in range(L)]
    # input-role embedding grads accumulate unmasked, scaled by row at the end
    d_emb_input = np.zeros_like(params.embedding)
    rows = np.arange(B)

    for step in reversed(cache.steps):
        dlogits = step.probs.copy()
        dlogits[rows, step.target] -= 1.0
        dlogits *= scale

        g["embedding"] += dlogits.T @ step.y
        g["out.b"] += dlogits.sum(axis=0)
        dy = dlogits @ params.embedding
        g["proj.w"] += dy.T @ step.h_top
        g["proj.b"] += dy.sum(axis=0)
        d_above = dy @ params.proj_w  # gradient w.r.t. the top layer's h

        dx_below = None
        for l in range(L - 1, -1, -1):
            x_in, h_prev, c_prev, i, f, gate_g, o, c, tc = step.layers[l]
            dh = d_above if l == L - 1 else dx_below
            if l < L - 1 and masks is not None and masks.hidden[l] is not None:
                dh = dh * masks.hidden[l]
            dh = dh + dh_next[l]
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next[l]
            di = dc * gate_g
            df = dc * c_prev
            dg = dc * i
            dc_next[l] = dc * f
            da = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - gate_g * gate_g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            g[f"lstm{l}.wx"] += da.T @ x_in
            g[f"lstm{l}.wh"] += da.T @ h_prev
            g[f"lstm{l}.b"] += da.sum(axis=0)
            dh_next[l] = da @ params.lstm_wh[l]
            dx_below = da @ params.lstm_wx[l]

        # bottom layer input: concatenated [src_embed, prev_tgt_embed]
        np.add.at(d_emb_input, step.src_tok, dx_below[:, :E])
        np.add.at(d_emb_input, step.prev_tok, dx_below[:, E:])

    if masks is not None and masks.emb_scale is not None:
        d_emb_input *= masks.emb_scale[:, None]
    g["embedding"] += d_emb_input
