"""End-to-end orchestration: one config, one document, one fused memory.

PipelineConfig gathers every hyperparameter of the method. Defaults
follow the reference setting: 1024-token chunks overlapping by 150,
single-row boundaries, 300 sampled interior rows per chunk, and an even
50/50 fusion blend.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from typing import Sequence

from . import cumulation
from .decoder import DecoderConfig, decode_step
from .encoder import ChunkEncoding, EncoderConfig, EncoderWeights, encode_all, init_weights
from .errors import ConfigError
from .numerics import SeededRng, fnv1a64
from .segmenter import SegmentSet, segment


@dataclass(frozen=True)
class PipelineConfig:
    chunk_len: int = 1024
    overlap: int = 150
    boundary_width: int = 1
    middle_count: int = 300
    alpha: float = 0.5
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 128
    vocab_size: int = 512
    seed: int = 1234
    middle_seed: int | None = None

    def __post_init__(self):
        if self.chunk_len < 2:
            raise ConfigError("chunk_len must be >= 2")
        if not 0 <= self.overlap < self.chunk_len:
            raise ConfigError("overlap must satisfy 0 <= overlap < chunk_len")
        if self.boundary_width < 1:
            raise ConfigError("boundary_width must be >= 1")
        if self.middle_count < 0:
            raise ConfigError("middle_count must be >= 0")
        if 2 * self.boundary_width + self.middle_count > self.chunk_len:
            raise ConfigError(
                "a chunk cannot contribute more rows than it has: "
                f"2*{self.boundary_width} + {self.middle_count} > {self.chunk_len}"
            )
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.d_model % self.n_heads != 0:
            raise ConfigError("d_model must be divisible by n_heads")
        if min(self.d_model, self.n_heads, self.n_layers, self.d_ff,
               self.vocab_size) < 1:
            raise ConfigError("model dimensions must be >= 1")

    def effective_middle_seed(self) -> int:
        return self.seed if self.middle_seed is None else self.middle_seed

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            vocab_size=self.vocab_size,
            d_model=self.d_model,
            n_heads=self.n_heads,
            n_layers=self.n_layers,
            d_ff=self.d_ff,
            max_len=self.chunk_len,
            seed=self.seed,
        )

    def decoder_config(self, max_len: int = 256) -> DecoderConfig:
        # decoder weights draw from an offset seed so the two stacks differ
        return DecoderConfig(
            vocab_size=self.vocab_size,
            d_model=self.d_model,
            n_heads=self.n_heads,
            n_layers=self.n_layers,
            d_ff=self.d_ff,
            max_len=max_len,
            seed=(self.seed + 1) & ((1 << 64) - 1),
        )

    def fusion_config(self) -> cumulation.FusionConfig:
        return cumulation.FusionConfig(
            boundary_width=self.boundary_width,
            middle_count=self.middle_count,
            alpha=self.alpha,
            middle_seed=self.effective_middle_seed(),
        )

    def with_vocab(self, vocab_size: int) -> "PipelineConfig":
        return replace(self, vocab_size=vocab_size)

    def canonical_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("ascii")).hexdigest()


@dataclass(frozen=True)
class DocumentRun:
    """Everything one document produced on its way through the pipeline."""

    doc_id: str
    segments: SegmentSet
    encodings: tuple[ChunkEncoding, ...]
    boundaries: cumulation.BoundarySet
    fused: cumulation.FusedSequence


def middle_rng_for(cfg: PipelineConfig, doc_id: str) -> SeededRng:
    """Per-document sampling stream: fixed given (config seed, doc id)."""
    return SeededRng(cfg.effective_middle_seed() ^ fnv1a64(doc_id))


def sample_document_middles(encodings, cfg: PipelineConfig, rng: SeededRng):
    """Interior samples for every chunk: (row blocks, chunk-local indices)."""
    middles, indices = [], []
    for enc in encodings:
        idx = cumulation.sample_middle_indices(
            len(enc), cfg.middle_count, cfg.boundary_width, rng)
        indices.append(idx)
        middles.append(enc.hidden[idx] if idx else enc.hidden[:0])
    return middles, indices


def run_document(
    tokens: Sequence[int],
    cfg: PipelineConfig,
    weights: EncoderWeights | None = None,
    doc_id: str = "doc",
    workers: int = 1,
) -> DocumentRun:
    """Segment, encode, fuse, sample, and assemble one document."""
    if weights is None:
        weights = init_weights(cfg.encoder_config())
    segs = segment(tokens, cfg.chunk_len, cfg.overlap)
    encodings = encode_all(segs, weights, cfg.encoder_config(), workers=workers)
    bset = cumulation.boundaries_from_encodings(
        encodings, cfg.boundary_width, segments=segs, allow_short=True)
    bset = cumulation.fuse(cumulation.with_contexts(bset), cfg.alpha)

    middles, middle_indices = sample_document_middles(
        encodings, cfg, middle_rng_for(cfg, doc_id))
    fused = cumulation.assemble(
        bset, middles, middle_indices=middle_indices,
        middle_requested=cfg.middle_count, alpha=cfg.alpha)
    return DocumentRun(
        doc_id=doc_id,
        segments=segs,
        encodings=tuple(encodings),
        boundaries=bset,
        fused=fused,
    )


def greedy_decode(
    prefix: Sequence[int],
    memory: cumulation.FusedSequence,
    cfg: DecoderConfig,
    steps: int,
) -> list[int]:
    """Repeat decode_step, appending the argmax token each time."""
    out = list(prefix)
    for _ in range(steps):
        logits, _ = decode_step(out, memory, cfg)
        out.append(int(logits[-1].argmax()))
    return out
