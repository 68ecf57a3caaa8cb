"""Empirical scaling checks and decoder-input size accounting.

The pipeline's cost should grow linearly with document length: chunk
count grows linearly, per-chunk encoding cost is constant, and the
context scan is a single pass over chunk boundaries. ``run_scaling``
measures wall time per stage across document lengths and fits the
log-log slope; ``compare_naive_concat`` reports how many rows the
decoder sees here versus the concat-everything baseline, by arithmetic
alone.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np

from . import cumulation
from .encoder import encode_all, init_weights
from .errors import ConfigError
from .metrics import make_random_doc
from .pipeline import PipelineConfig, middle_rng_for, sample_document_middles
from .segmenter import segment, segment_count

# totals under this at the smallest point are too close to timer noise
MIN_RELIABLE_SECONDS = 0.05


@dataclass(frozen=True)
class ScalingPoint:
    n_tokens: int
    n_chunks: int
    encode_seconds: float
    fuse_seconds: float
    total_seconds: float
    memory_rows: int
    naive_rows: int


@dataclass(frozen=True)
class ScalingReport:
    points: tuple[ScalingPoint, ...]
    slope: float
    compression_ratio: float
    fuse_encode_ratio: float
    reliable: bool

    def csv_rows(self) -> list[list]:
        header = ["N", "C", "encode_s", "fuse_s", "total_s", "scale_rows", "naive_rows"]
        rows: list[list] = [header]
        for p in self.points:
            rows.append([p.n_tokens, p.n_chunks, repr(p.encode_seconds),
                         repr(p.fuse_seconds), repr(p.total_seconds),
                         p.memory_rows, p.naive_rows])
        return rows

    def verdict(self, lo: float = 0.8, hi: float = 1.3) -> dict:
        return {"slope": self.slope, "pass": bool(lo <= self.slope <= hi)}


def compare_naive_concat(n_tokens: int, cfg: PipelineConfig) -> tuple[int, int]:
    """(rows the decoder sees here, rows under full concatenation).

    Pure arithmetic: C * (2 * boundary_width + middle_count) versus
    C * chunk_len. Nothing is allocated.
    """
    c = segment_count(n_tokens, cfg.chunk_len, cfg.overlap)
    scale_rows = c * (2 * cfg.boundary_width + cfg.middle_count)
    naive_rows = c * cfg.chunk_len
    return scale_rows, naive_rows


def timed_run(tokens, cfg: PipelineConfig, weights, doc_id: str) -> tuple[float, float, int]:
    """One pipeline pass returning (encode seconds, fuse seconds, rows)."""
    t0 = time.perf_counter()
    segs = segment(tokens, cfg.chunk_len, cfg.overlap)
    encodings = encode_all(segs, weights, cfg.encoder_config())
    t1 = time.perf_counter()

    bset = cumulation.boundaries_from_encodings(
        encodings, cfg.boundary_width, segments=segs, allow_short=True)
    bset = cumulation.fuse(cumulation.with_contexts(bset), cfg.alpha)
    middles, indices = sample_document_middles(
        encodings, cfg, middle_rng_for(cfg, doc_id))
    fused = cumulation.assemble(bset, middles, middle_indices=indices,
                                middle_requested=cfg.middle_count, alpha=cfg.alpha)
    t2 = time.perf_counter()
    return t1 - t0, t2 - t1, fused.rows


def fit_loglog_slope(ns, times) -> float:
    return float(np.polyfit(np.log(np.asarray(ns, dtype=np.float64)),
                            np.log(np.asarray(times, dtype=np.float64)), 1)[0])


def run_scaling(
    lengths: list[int],
    cfg: PipelineConfig,
    repeats: int = 3,
    warmup: bool = True,
    doc_seed: int = 7,
) -> ScalingReport:
    """Time the full encode+fuse pipeline across document lengths.

    Documents are uniform random token ids (content does not affect
    cost). Each point takes the median of ``repeats`` runs; one warm-up
    run at the smallest length is discarded. Runs are sequential by
    design so the slope reflects algorithmic cost.
    """
    if len(lengths) < 4:
        raise ConfigError("run_scaling needs at least 4 lengths")
    if any(b >= a for a, b in zip(lengths[1:], lengths)):
        raise ConfigError("lengths must be strictly increasing")

    weights = init_weights(cfg.encoder_config())
    docs = {n: make_random_doc(n, cfg.vocab_size, doc_seed + n) for n in lengths}

    if warmup:
        timed_run(docs[lengths[0]], cfg, weights, "warmup")

    # interleave repeats across lengths so machine-load drift during the
    # benchmark biases every point alike instead of tilting the slope
    runs: dict[int, list[tuple[float, float, int]]] = {n: [] for n in lengths}
    for _ in range(repeats):
        for n in lengths:
            runs[n].append(timed_run(docs[n], cfg, weights, f"bench-{n}"))

    points = []
    for n in lengths:
        encode_s = statistics.median(r[0] for r in runs[n])
        fuse_s = statistics.median(r[1] for r in runs[n])
        actual_rows = runs[n][0][2]
        scale_rows, naive_rows = compare_naive_concat(n, cfg)
        if actual_rows != scale_rows:
            raise ConfigError(
                f"assembled rows {actual_rows} != formula rows {scale_rows}; "
                "chunks shorter than 2*boundary_width + middle_count?"
            )
        points.append(ScalingPoint(
            n_tokens=n,
            n_chunks=segment_count(n, cfg.chunk_len, cfg.overlap),
            encode_seconds=encode_s,
            fuse_seconds=fuse_s,
            total_seconds=encode_s + fuse_s,
            memory_rows=scale_rows,
            naive_rows=naive_rows,
        ))

    slope = fit_loglog_slope([p.n_tokens for p in points],
                             [p.total_seconds for p in points])
    largest = points[-1]
    return ScalingReport(
        points=tuple(points),
        slope=slope,
        compression_ratio=(2 * cfg.boundary_width + cfg.middle_count) / cfg.chunk_len,
        fuse_encode_ratio=largest.fuse_seconds / largest.encode_seconds,
        reliable=points[0].total_seconds >= MIN_RELIABLE_SECONDS,
    )
