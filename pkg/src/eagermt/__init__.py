"""eagermt: attention-free eager neural translation toolkit.

Pipeline: subword segmentation and a joint vocabulary, EM word alignment
with a diagonal prior, padding insertion that makes every training pair
readable left to right, language-model-style training over concatenated
parallel streams with a from-scratch LSTM, constrained beam decoding, and
corpus BLEU evaluation.
"""

__version__ = "0.1.0"

from .aligner import Alignment, LexTable, SentencePair, em_train, viterbi_align
from .decoder import BeamHypothesis, DecodeConfig, decode_sentence, translate
from .eagerize import EagerizeConfig, EagerPair, eps_stats, make_feasible, verify_feasible
from .evaluator import BleuReport, bleu_by_length, corpus_bleu
from .neural_core import (
    ModelConfig,
    ParameterSet,
    RecurrentState,
    backward,
    forward_batch,
    forward_step,
    load_checkpoint,
    save_checkpoint,
)
from .pipeline import PipelineConfig, run_pipeline, tune_inference
from .stream_batcher import StreamBatch, StreamBatcher, build_streams
from .text_pipeline import BpeModel, Vocab, apply_bpe, build_vocab, learn_bpe, strip_eps
from .trainer import TrainConfig, TrainResult, perplexity, train

__all__ = [
    "Alignment",
    "BeamHypothesis",
    "BleuReport",
    "BpeModel",
    "DecodeConfig",
    "EagerizeConfig",
    "EagerPair",
    "LexTable",
    "ModelConfig",
    "ParameterSet",
    "PipelineConfig",
    "RecurrentState",
    "SentencePair",
    "StreamBatch",
    "StreamBatcher",
    "TrainConfig",
    "TrainResult",
    "Vocab",
    "apply_bpe",
    "backward",
    "bleu_by_length",
    "build_streams",
    "build_vocab",
    "corpus_bleu",
    "decode_sentence",
    "em_train",
    "eps_stats",
    "forward_batch",
    "forward_step",
    "learn_bpe",
    "load_checkpoint",
    "make_feasible",
    "perplexity",
    "run_pipeline",
    "save_checkpoint",
    "strip_eps",
    "train",
    "translate",
    "tune_inference",
    "verify_feasible",
    "viterbi_align",
]
