"""Figure rendering for the report paths.

Every CLI report that writes delimited output can render a companion PNG:
training curves from the training log, per-bucket BLEU bars from the
scorer, and the inference tuning grid. All figures go straight to files
(Agg backend); nothing opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def plot_training_curves(log_entries, path) -> None:
    """Train loss and validation perplexity per eval, with the lr overlaid."""
    updates = [e.update for e in log_entries]
    fig, (ax_loss, ax_ppl) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax_loss.plot(updates, [e.train_loss for e in log_entries], marker="o", ms=3)
    ax_loss.set_xlabel("updates")
    ax_loss.set_ylabel("train loss")
    ax_ppl.plot(updates, [e.valid_ppl for e in log_entries], marker="o", ms=3, color="tab:red")
    ax_ppl.set_xlabel("updates")
    ax_ppl.set_ylabel("valid perplexity")
    ax_ppl.set_yscale("log")
    ax_lr = ax_ppl.twinx()
    ax_lr.step(updates, [e.lr for e in log_entries], where="post", color="tab:gray", alpha=0.5)
    ax_lr.set_ylabel("lr", color="tab:gray")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_bleu_report(report, path, bucket_reports=None) -> None:
    """N-gram precision bars, plus per-bucket BLEU bars when provided."""
    n_panels = 2 if bucket_reports else 1
    fig, axes = plt.subplots(1, n_panels, figsize=(4.5 * n_panels, 3.5))
    ax = axes[0] if n_panels > 1 else axes
    orders = [1, 2, 3, 4]
    values = [0.0 if p is None else 100.0 * p for p in report.precisions]
    ax.bar([str(n) for n in orders], values, color="tab:blue")
    ax.axhline(report.bleu, color="tab:red", ls="--", label=f"BLEU {report.bleu:.2f}")
    ax.set_xlabel("n-gram order")
    ax.set_ylabel("precision (%)")
    ax.set_ylim(0, 105)
    ax.legend()
    if bucket_reports:
        ax2 = axes[1]
        labels = list(bucket_reports)
        ax2.bar(labels, [bucket_reports[k].bleu for k in labels], color="tab:green")
        ax2.set_xlabel("source length bucket")
        ax2.set_ylabel("BLEU")
        ax2.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_tune_grid(rows, path) -> None:
    """Dev BLEU per (padding_limit, spi) cell, one panel per beam size.

    rows: iterable of (padding_limit, spi, beam, bleu).
    """
    beams = sorted({r[2] for r in rows})
    fig, axes = plt.subplots(1, len(beams), figsize=(4.5 * len(beams), 3.8), squeeze=False)
    for ax, beam in zip(axes[0], beams):
        sub = [r for r in rows if r[2] == beam]
        limits = sorted({r[0] for r in sub})
        spis = sorted({r[1] for r in sub})
        grid = [[float("nan")] * len(spis) for _ in limits]
        for limit, spi, _, bleu in sub:
            grid[limits.index(limit)][spis.index(spi)] = bleu
        im = ax.imshow(grid, aspect="auto", origin="lower", cmap="viridis")
        ax.set_xticks(range(len(spis)), [str(s) for s in spis])
        ax.set_yticks(range(len(limits)), [str(p) for p in limits])
        ax.set_xlabel("source padding injection")
        ax.set_ylabel("padding limit")
        ax.set_title(f"beam {beam}")
        fig.colorbar(im, ax=ax, label="BLEU")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_eps_proportion(values_by_start_pad, path) -> None:
    """Internal padding proportion as a function of the start padding count."""
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    keys = sorted(values_by_start_pad)
    ax.plot(keys, [100.0 * values_by_start_pad[k] for k in keys], marker="o")
    ax.set_xlabel("start padding tokens")
    ax.set_ylabel("internal padding (%)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
