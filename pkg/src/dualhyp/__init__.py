"""Dual-stream (ASR + VSR) generative error correction toolkit."""

from __future__ import annotations

from ._kernels import BACKEND as KERNEL_BACKEND
from .align import Alignment, align, edit_distance, normalize, percent, wer, wer_text
from .confusion import ConfusionNetwork, build_cn, oracle_path, vote
from .dataset import DualRecord, load_dataset, write_dataset
from .nbest import DualHypotheses, Hypothesis, Modality, NBestList
from .oracle import corpus_oracle, oracle_compositional, oracle_dual, oracle_nbest
from .prompts import PromptVariant, build_prompt
from .relmask import ReliabilityMask, label_mask

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "Alignment",
    "ConfusionNetwork",
    "DualHypotheses",
    "DualRecord",
    "Hypothesis",
    "Modality",
    "NBestList",
    "PromptVariant",
    "ReliabilityMask",
    "align",
    "build_cn",
    "build_prompt",
    "corpus_oracle",
    "edit_distance",
    "label_mask",
    "load_dataset",
    "normalize",
    "oracle_compositional",
    "oracle_dual",
    "oracle_nbest",
    "oracle_path",
    "percent",
    "vote",
    "wer",
    "wer_text",
    "write_dataset",
]
