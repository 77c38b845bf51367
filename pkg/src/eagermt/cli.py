"""Command-line surface: one subcommand per pipeline stage plus `pipeline`.

Every subcommand exits 0 on success and nonzero with a stage-tagged
message on stderr otherwise. Report-producing commands (train, score,
tune, pipeline) write PNG figures next to their delimited outputs.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import plots
from .aligner import Alignment, SentencePair, em_train, read_alignments, viterbi_align, write_alignments
from .decoder import DecodeConfig, decode_sentence
from .eagerize import EagerizeConfig, EagerPair, eagerize_corpus, eps_stats
from .evaluator import bleu_by_length, corpus_bleu
from .neural_core import ParameterSet, load_checkpoint, save_checkpoint
from .pipeline import (
    PipelineConfig,
    StageError,
    run_pipeline,
    sweep_start_pad,
    tune_inference,
    write_tune_table,
)
from .text_pipeline import (
    EPS_TOKEN,
    BpeModel,
    Vocab,
    apply_bpe,
    build_vocab,
    detokenize,
    learn_bpe,
    merge_subwords,
    tokenize,
)
from .trainer import train, write_training_log


def _read_lines(path):
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def _write_lines(lines, path):
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part != ""]


def cmd_bpe_learn(args) -> int:
    corpus = []
    for path in args.input:
        corpus.extend(_read_lines(path))
    model = learn_bpe(corpus, args.num_ops)
    model.save(args.out)
    print(f"learned {model.num_operations} merges -> {args.out}")
    return 0


def cmd_bpe_apply(args) -> int:
    model = BpeModel.load(args.model)
    out = []
    for line in _read_lines(args.input):
        out.append(" ".join(apply_bpe(model, line.split())))
    _write_lines(out, args.output)
    return 0


def cmd_align(args) -> int:
    src_lines = [line.split() for line in _read_lines(args.src)]
    tgt_lines = [line.split() for line in _read_lines(args.tgt)]
    if len(src_lines) != len(tgt_lines):
        raise ValueError("source and target files differ in line count")
    vocab = build_vocab([" ".join(t) for t in src_lines + tgt_lines])
    pairs = [
        SentencePair(vocab.encode(s), vocab.encode(t))
        for s, t in zip(src_lines, tgt_lines)
    ]
    nonempty = [p for p in pairs if p.src and p.tgt]
    lls: list[float] = []
    table = em_train(nonempty, iterations=args.iterations, tension=args.tension,
                     vocab_size=len(vocab), log_likelihoods=lls)
    alignments = []
    for pair in pairs:
        if pair.src and pair.tgt:
            alignments.append(viterbi_align(table, pair))
        else:
            alignments.append(Alignment(set()))
    write_alignments(alignments, args.out)
    if args.save_table:
        table.save(args.save_table)
    print(f"aligned {len(pairs)} pairs; final EM log-likelihood {lls[-1]:.3f}")
    return 0


def cmd_eagerize(args) -> int:
    src_lines = [line.split() for line in _read_lines(args.src)]
    tgt_lines = [line.split() for line in _read_lines(args.tgt)]
    alignments = read_alignments(args.align)
    if not (len(src_lines) == len(tgt_lines) == len(alignments)):
        raise ValueError("source, target, and alignment files differ in line count")
    pairs = [SentencePair(s, t) for s, t in zip(src_lines, tgt_lines)]
    cfg = EagerizeConfig(start_pad=args.start_pad, eps=EPS_TOKEN,
                         max_len_ratio=args.max_len_ratio)
    eager = eagerize_corpus(pairs, alignments, cfg)
    _write_lines((" ".join(p.src) for p in eager), f"{args.out}.src")
    _write_lines((" ".join(p.tgt) for p in eager), f"{args.out}.tgt")
    proportion = eps_stats(eager, eps=EPS_TOKEN)
    print(f"internal padding proportion: {100 * proportion:.2f}%")
    return 0


def cmd_train(args) -> int:
    config = PipelineConfig.from_yaml(args.config)
    vocab = Vocab.load(f"{args.data}.vocab")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def load_pairs(split):
        src = [line.split() for line in _read_lines(f"{args.data}.{split}.src")]
        tgt = [line.split() for line in _read_lines(f"{args.data}.{split}.tgt")]
        return [
            EagerPair(vocab.encode(s), vocab.encode(t), config.start_pad)
            for s, t in zip(src, tgt)
        ]

    train_pairs = load_pairs("train")
    valid_pairs = load_pairs("valid")
    model_cfg = config.model_config()
    model_cfg.vocab_size = len(vocab)
    params = ParameterSet(model_cfg, np.random.default_rng(config.seed))
    result = train(params, train_pairs, valid_pairs, config.train_config())
    merges = BpeModel.load(args.bpe).merges if args.bpe else None
    save_checkpoint(result.best_params, out_dir / "checkpoint.npz", vocab.token_of, merges)
    write_training_log(result.log, out_dir / "training_log.tsv")
    if result.log:
        plots.plot_training_curves(result.log, out_dir / "training_curve.png")
    status = "diverged" if result.diverged else "done"
    print(f"{status}: {result.updates} updates, best valid perplexity {result.best_ppl:.4f}")
    return 0


def cmd_translate(args) -> int:
    params, tokens, merges = load_checkpoint(args.model)
    if tokens is None:
        raise ValueError("checkpoint carries no vocabulary; cannot map text")
    vocab = Vocab(tokens[3:])
    bpe = BpeModel(merges or [])
    cfg = DecodeConfig(
        beam_size=args.beam,
        padding_limit=args.padding_limit,
        spi=args.spi,
        start_pad=args.start_pad,
        max_extra_steps=args.max_extra_steps,
    )
    out_lines = []
    for line in _read_lines(args.input):
        toks = apply_bpe(bpe, tokenize(line))
        if not toks:
            out_lines.append("")
            continue
        out_ids = decode_sentence(params, vocab.encode(toks), cfg).output
        out_lines.append(detokenize(merge_subwords(vocab.decode(out_ids))))
    _write_lines(out_lines, args.output)
    return 0


def cmd_score(args) -> int:
    candidates = _read_lines(args.candidates)
    references = _read_lines(args.references)
    report = corpus_bleu(candidates, references)
    print(report.tsv_header())
    print(report.tsv())
    buckets = None
    if args.sources:
        sources = _read_lines(args.sources)
        edges = _int_list(args.buckets)
        buckets = bleu_by_length(candidates, references, sources, edges)
        print("bucket\t" + report.tsv_header())
        for label, rep in buckets.items():
            print(f"{label}\t{rep.tsv()}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(report.tsv_header() + "\n" + report.tsv() + "\n")
            if buckets:
                for label, rep in buckets.items():
                    f.write(f"{label}\t{rep.tsv()}\n")
    if args.figure:
        plots.plot_bleu_report(report, args.figure, buckets)
    return 0


def cmd_pipeline(args) -> int:
    config = PipelineConfig.from_yaml(args.config)
    if args.work_dir:
        config.work_dir = args.work_dir
    if args.sweep_b:
        values = _int_list(args.sweep_b)
        manifests = sweep_start_pad(config, values)
        for b, manifest in zip(values, manifests):
            print(f"b={b}: {manifest.metrics}")
        proportions = {
            b: m.metrics["eps_internal_proportion"] for b, m in zip(values, manifests)
        }
        plots.plot_eps_proportion(proportions, Path(config.work_dir) / "eps_proportion.png")
    else:
        manifest = run_pipeline(config)
        print(f"manifest: {Path(config.work_dir) / 'manifest.json'}")
        for key, value in manifest.metrics.items():
            print(f"{key}\t{value}")
    return 0


def cmd_tune(args) -> int:
    params, tokens, merges = load_checkpoint(args.model)
    if tokens is None:
        raise ValueError("checkpoint carries no vocabulary; cannot map text")
    vocab = Vocab(tokens[3:])
    bpe = BpeModel(merges or [])
    best_cfg, rows = tune_inference(
        params, vocab, bpe,
        _read_lines(args.src), _read_lines(args.refs),
        _int_list(args.padding_limits), _int_list(args.spis), _int_list(args.beams),
        start_pad=args.start_pad, max_extra_steps=args.max_extra_steps,
    )
    print("padding_limit\tspi\tbeam\tbleu")
    for p, c, k, bleu in rows:
        print(f"{p}\t{c}\t{k}\t{bleu:.2f}")
    print(
        f"best: padding_limit={best_cfg.padding_limit}, spi={best_cfg.spi}, "
        f"beam={best_cfg.beam_size}"
    )
    if args.out:
        write_tune_table(rows, args.out)
    if args.figure:
        plots.plot_tune_grid(rows, args.figure)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eagermt",
        description="Attention-free eager translation toolkit",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="enable info logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bpe-learn", help="learn subword merges from text")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--num-ops", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bpe_learn)

    p = sub.add_parser("bpe-apply", help="segment tokenized text with learned merges")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_bpe_apply)

    p = sub.add_parser("align", help="EM-train an aligner and write Pharaoh links")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--tension", type=float, default=4.0)
    p.add_argument("--save-table", default=None)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("eagerize", help="insert padding to make pairs eager feasible")
    p.add_argument("--align", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--start-pad", type=int, default=0)
    p.add_argument("--max-len-ratio", type=float, default=9.0)
    p.add_argument("--out", required=True, help="output prefix (.src/.tgt)")
    p.set_defaults(func=cmd_eagerize)

    p = sub.add_parser("train", help="train on eagerized data")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True, help="prefix of .train/.valid .src/.tgt and .vocab")
    p.add_argument("--out", required=True)
    p.add_argument("--bpe", default=None, help="merge file to embed in the checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("translate", help="decode raw text with a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--beam", type=int, default=5)
    p.add_argument("--padding-limit", type=int, default=3)
    p.add_argument("--spi", type=int, default=0)
    p.add_argument("--start-pad", type=int, default=0)
    p.add_argument("--max-extra-steps", type=int, default=5)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("score", help="corpus BLEU of candidates against references")
    p.add_argument("--candidates", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--sources", default=None)
    p.add_argument("--buckets", default="20,40,60,80")
    p.add_argument("--out", default=None, help="also write the TSV report here")
    p.add_argument("--figure", default=None, help="render a PNG report here")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("pipeline", help="run every stage end to end")
    p.add_argument("--config", required=True)
    p.add_argument("--work-dir", default=None)
    p.add_argument("--sweep-b", default=None, help="comma list of start-pad values")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("tune", help="grid-search inference settings by dev BLEU")
    p.add_argument("--model", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--refs", required=True)
    p.add_argument("--padding-limits", default="3,4,5")
    p.add_argument("--spis", default="0,1")
    p.add_argument("--beams", default="5")
    p.add_argument("--start-pad", type=int, default=0)
    p.add_argument("--max-extra-steps", type=int, default=5)
    p.add_argument("--out", default=None)
    p.add_argument("--figure", default=None)
    p.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except StageError as exc:
        print(f"eagermt {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"eagermt {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
