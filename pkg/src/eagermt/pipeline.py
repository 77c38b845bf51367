"""End-to-end orchestration: raw parallel text in, scored translations out.

Stages run in a fixed order (tokenize, BPE, alignment EM, Viterbi links,
padding transform, stream build, training, dev decoding, scoring), each
writing its artifacts into the work directory. A JSON manifest binds the
run together: per-stage input paths, output paths with content hashes,
the full config, the seed, and headline metrics. Identical config + seed
reproduce identical data-stage hashes.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import plots
from .aligner import SentencePair, em_train, viterbi_align, write_alignments
from .decoder import DecodeConfig, decode_sentence
from .eagerize import EagerizeConfig, eagerize_corpus, eps_stats
from .evaluator import corpus_bleu
from .neural_core import ModelConfig, ParameterSet, save_checkpoint
from .stream_batcher import build_streams
from .text_pipeline import (
    BpeModel,
    Vocab,
    apply_bpe,
    build_vocab,
    detokenize,
    learn_bpe,
    merge_subwords,
    tokenize,
)
from .trainer import TrainConfig, train, write_training_log

logger = logging.getLogger(__name__)

# manifest stage order: the raw-input record plus the nine processing stages
STAGES = (
    "inputs",
    "tokenize",
    "bpe",
    "align_em",
    "align_viterbi",
    "eagerize",
    "streams",
    "train",
    "translate",
    "score",
)


@dataclass
class PipelineConfig:
    train_src: str
    train_tgt: str
    dev_src: str
    dev_tgt: str
    work_dir: str
    seed: int = 0
    bpe_ops: int = 300
    align_iterations: int = 5
    align_tension: float = 4.0
    start_pad: int = 0
    max_len_ratio: float = 9.0
    embed_dim: int = 48
    layers: int = 1
    dropout_embed: float = 0.0
    dropout_hidden: float = 0.0
    dtype: str = "float64"
    lr: float = 5.0
    batch_size: int = 32
    bptt: int = 32
    eval_every: int = 200
    patience_updates: int = 2000
    clip_norm: float = 0.25
    max_updates: int | None = None
    beam_size: int = 5
    padding_limit: int = 3
    spi: int = 1
    max_extra_steps: int = 5

    @classmethod
    def from_yaml(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f)
        return cls(**raw)

    def to_yaml(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(asdict(self), f, sort_keys=False)

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            embed_dim=self.embed_dim,
            layers=self.layers,
            vocab_size=0,  # placeholder; set after the vocab exists
            dropout_embed=self.dropout_embed,
            dropout_hidden=self.dropout_hidden,
            dtype=self.dtype,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            batch_size=self.batch_size,
            bptt=self.bptt,
            eval_every=self.eval_every,
            patience_updates=self.patience_updates,
            clip_norm=self.clip_norm,
            seed=self.seed,
            max_updates=self.max_updates,
        )

    def decode_config(self) -> DecodeConfig:
        return DecodeConfig(
            beam_size=self.beam_size,
            padding_limit=self.padding_limit,
            spi=self.spi,
            start_pad=self.start_pad,
            max_extra_steps=self.max_extra_steps,
        )


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class Manifest:
    config: dict
    seed: int
    stages: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    def add_stage(self, name: str, inputs: list, outputs: list) -> None:
        self.stages.append(
            {
                "name": name,
                "inputs": [str(p) for p in inputs],
                "outputs": [{"path": str(p), "sha256": sha256_file(p)} for p in outputs],
            }
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(
                {
                    "config": self.config,
                    "seed": self.seed,
                    "stages": self.stages,
                    "metrics": self.metrics,
                },
                f,
                indent=2,
            )


def _read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def _write_lines(lines, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def run_pipeline(config: PipelineConfig) -> Manifest:
    """Run every stage, writing artifacts and the manifest under work_dir."""
    work = Path(config.work_dir)
    work.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(config=asdict(config), seed=config.seed)
    rng = np.random.default_rng(config.seed)

    stage = "inputs"
    try:
        raw_paths = {
            "train_src": config.train_src,
            "train_tgt": config.train_tgt,
            "dev_src": config.dev_src,
            "dev_tgt": config.dev_tgt,
        }
        manifest.add_stage(stage, [], list(raw_paths.values()))

        stage = "tokenize"
        tok_lines = {}
        tok_paths = {}
        for key, path in raw_paths.items():
            tok_lines[key] = [tokenize(line) for line in _read_lines(path)]
            tok_paths[key] = work / f"{key}.tok"
            _write_lines((" ".join(t) for t in tok_lines[key]), tok_paths[key])
        manifest.add_stage(stage, list(raw_paths.values()), list(tok_paths.values()))

        stage = "bpe"
        joint = [" ".join(t) for t in tok_lines["train_src"] + tok_lines["train_tgt"]]
        bpe = learn_bpe(joint, config.bpe_ops)
        bpe_path = work / "bpe.merges"
        bpe.save(bpe_path)
        seg_lines = {
            key: [apply_bpe(bpe, toks) for toks in tok_lines[key]] for key in tok_lines
        }
        seg_paths = {}
        for key in seg_lines:
            seg_paths[key] = work / f"{key}.bpe"
            _write_lines((" ".join(s) for s in seg_lines[key]), seg_paths[key])
        vocab = build_vocab(
            [" ".join(s) for s in seg_lines["train_src"] + seg_lines["train_tgt"]]
        )
        vocab_path = work / "vocab.txt"
        vocab.save(vocab_path)
        manifest.add_stage(
            stage,
            [tok_paths[k] for k in tok_paths],
            [bpe_path, *seg_paths.values(), vocab_path],
        )

        stage = "align_em"
        train_pairs = [
            SentencePair(vocab.encode(s), vocab.encode(t))
            for s, t in zip(seg_lines["train_src"], seg_lines["train_tgt"])
            if s and t
        ]
        lls: list[float] = []
        table = em_train(
            train_pairs,
            iterations=config.align_iterations,
            tension=config.align_tension,
            vocab_size=len(vocab),
            log_likelihoods=lls,
        )
        table_path = work / "lex_table.tsv"
        table.save(table_path)
        ll_path = work / "align_ll.tsv"
        _write_lines((f"{k}\t{v:.6f}" for k, v in enumerate(lls)), ll_path)
        manifest.add_stage(stage, [seg_paths["train_src"], seg_paths["train_tgt"]], [table_path, ll_path])

        stage = "align_viterbi"
        alignments = [viterbi_align(table, pair) for pair in train_pairs]
        align_path = work / "train.align"
        write_alignments(alignments, align_path)
        manifest.add_stage(
            stage, [table_path, seg_paths["train_src"], seg_paths["train_tgt"]], [align_path]
        )

        stage = "eagerize"
        eager = eagerize_corpus(
            train_pairs,
            alignments,
            EagerizeConfig(start_pad=config.start_pad, max_len_ratio=config.max_len_ratio),
        )
        eager_src_path = work / "train.eager.src"
        eager_tgt_path = work / "train.eager.tgt"
        _write_lines((" ".join(vocab.decode(p.src)) for p in eager), eager_src_path)
        _write_lines((" ".join(vocab.decode(p.tgt)) for p in eager), eager_tgt_path)
        proportion = eps_stats(eager)
        manifest.metrics["eps_internal_proportion"] = proportion
        manifest.add_stage(
            stage, [align_path, seg_paths["train_src"], seg_paths["train_tgt"]],
            [eager_src_path, eager_tgt_path],
        )

        stage = "streams"
        order = rng.permutation(len(eager))
        shuffled = [eager[i] for i in order]
        n_valid = max(1, len(shuffled) // 20)
        valid_pairs = shuffled[:n_valid]
        fit_pairs = shuffled[n_valid:]
        # the artifact is exactly the trainer's first-epoch stream: the
        # trainer draws its first permutation from default_rng(seed)
        first_order = np.random.default_rng(config.seed).permutation(len(fit_pairs))
        src_stream, tgt_stream = build_streams([fit_pairs[i] for i in first_order])
        streams_path = work / "streams.npz"
        with open(streams_path, "wb") as f:
            np.savez(f, src=src_stream, tgt=tgt_stream)
        manifest.add_stage(stage, [eager_src_path, eager_tgt_path], [streams_path])

        stage = "train"
        model_cfg = config.model_config()
        model_cfg.vocab_size = len(vocab)
        params = ParameterSet(model_cfg, np.random.default_rng(config.seed))
        result = train(params, fit_pairs, valid_pairs, config.train_config())
        ckpt_path = work / "checkpoint.npz"
        save_checkpoint(result.best_params, ckpt_path, vocab.token_of, bpe.merges)
        log_path = work / "training_log.tsv"
        write_training_log(result.log, log_path)
        outputs = [ckpt_path, log_path]
        if result.log:
            curve_path = work / "training_curve.png"
            plots.plot_training_curves(result.log, curve_path)
            outputs.append(curve_path)
        manifest.metrics["best_valid_ppl"] = result.best_ppl
        manifest.metrics["train_updates"] = result.updates
        manifest.add_stage(stage, [streams_path], outputs)

        stage = "translate"
        decode_cfg = config.decode_config()
        best = result.best_params
        hyp_lines = []
        for toks in seg_lines["dev_src"]:
            if not toks:
                hyp_lines.append("")
                continue
            out_ids = decode_sentence(best, vocab.encode(toks), decode_cfg).output
            hyp_lines.append(detokenize(merge_subwords(vocab.decode(out_ids))))
        hyp_path = work / "dev.hyp.txt"
        _write_lines(hyp_lines, hyp_path)
        manifest.add_stage(stage, [ckpt_path, seg_paths["dev_src"]], [hyp_path])

        stage = "score"
        refs = [detokenize(toks) for toks in tok_lines["dev_tgt"]]
        report = corpus_bleu(hyp_lines, refs)
        score_path = work / "score.tsv"
        with open(score_path, "w", encoding="utf-8") as f:
            f.write(report.tsv_header() + "\n" + report.tsv() + "\n")
        score_fig = work / "score.png"
        plots.plot_bleu_report(report, score_fig)
        manifest.metrics["dev_bleu"] = report.bleu
        manifest.add_stage(stage, [hyp_path, raw_paths["dev_tgt"]], [score_path, score_fig])
    except Exception as exc:
        manifest.save(work / "manifest.partial.json")
        raise StageError(stage, exc) from exc

    manifest.save(work / "manifest.json")
    return manifest


def sweep_start_pad(config: PipelineConfig, values) -> list[Manifest]:
    """Run the full pipeline once per start-padding value, in subdirectories."""
    manifests = []
    base = Path(config.work_dir)
    for b in values:
        sub = PipelineConfig(**{**asdict(config), "start_pad": b, "work_dir": str(base / f"b{b}")})
        manifests.append(run_pipeline(sub))
    summary = {
        f"b{b}": m.metrics for b, m in zip(values, manifests)
    }
    base.mkdir(parents=True, exist_ok=True)
    with open(base / "sweep_summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)
    return manifests


def tune_inference(params, vocab: Vocab, bpe: BpeModel, dev_src_lines, dev_ref_lines,
                   padding_limits, spis, beams, start_pad: int,
                   max_extra_steps: int = 5):
    """Grid search over (padding_limit, spi, beam) by dev BLEU.

    Returns (best DecodeConfig, rows) where rows are
    (padding_limit, spi, beam, bleu) in grid order. Ties keep the earliest
    grid point.
    """
    grid = [(p, c, k) for p in padding_limits for c in spis for k in beams]
    if not grid:
        raise ValueError("empty grid")
    src_ids = []
    for line in dev_src_lines:
        toks = apply_bpe(bpe, tokenize(line))
        src_ids.append(vocab.encode(toks))
    rows = []
    best_cfg = None
    best_bleu = -1.0
    for p, c, k in grid:
        cfg = DecodeConfig(beam_size=k, padding_limit=p, spi=c, start_pad=start_pad,
                           max_extra_steps=max_extra_steps)
        hyps = []
        for ids in src_ids:
            if not ids:
                hyps.append("")
                continue
            out = decode_sentence(params, ids, cfg).output
            hyps.append(detokenize(merge_subwords(vocab.decode(out))))
        bleu = corpus_bleu(hyps, list(dev_ref_lines)).bleu
        rows.append((p, c, k, bleu))
        if bleu > best_bleu:
            best_bleu = bleu
            best_cfg = cfg
    return best_cfg, rows


def write_tune_table(rows, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("padding_limit\tspi\tbeam\tbleu\n")
        for p, c, k, bleu in rows:
            f.write(f"{p}\t{c}\t{k}\t{bleu:.2f}\n")
