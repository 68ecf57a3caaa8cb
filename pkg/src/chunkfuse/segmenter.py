"""Fixed-length overlapping segmentation of token sequences.

A sequence of N token ids is cut into windows of ``chunk_len`` tokens
that advance by ``chunk_len - overlap``. The final window is anchored
to end exactly at position N instead of being padded, so every emitted
token is a real input token; a window shorter than ``chunk_len`` can
only occur when the whole sequence is shorter than one window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError, ContractError, InputError


@dataclass(frozen=True)
class Segment:
    """One window: 1-based index, 0-based source offset, token slice."""

    index: int
    start: int
    tokens: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class SegmentSet:
    segments: tuple[Segment, ...]
    chunk_len: int
    overlap: int

    @property
    def stride(self) -> int:
        return self.chunk_len - self.overlap

    @property
    def count(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)


def segment_count(n_tokens: int, chunk_len: int, overlap: int) -> int:
    """Closed-form window count for a sequence of ``n_tokens``."""
    _validate_window(chunk_len, overlap)
    if n_tokens < 1:
        raise InputError("token sequence must contain at least one token")
    if n_tokens <= chunk_len:
        return 1
    stride = chunk_len - overlap
    return -(-max(n_tokens - overlap, 1) // stride)


def segment(tokens: Sequence[int], chunk_len: int, overlap: int) -> SegmentSet:
    """Cut ``tokens`` into overlapping windows, left to right.

    Starts advance by ``chunk_len - overlap``; if the last stride would
    overrun the sequence, the final window is shifted left to end at the
    last token (it then shares more than ``overlap`` positions with its
    neighbor, never less).
    """
    _validate_window(chunk_len, overlap)
    toks = tuple(int(t) for t in tokens)
    n = len(toks)
    if n < 1:
        raise InputError("token sequence must contain at least one token")

    if n <= chunk_len:
        segs = (Segment(index=1, start=0, tokens=toks),)
        return SegmentSet(segments=segs, chunk_len=chunk_len, overlap=overlap)

    stride = chunk_len - overlap
    count = segment_count(n, chunk_len, overlap)
    segs = []
    for i in range(count):
        start = i * stride
        if start + chunk_len > n:
            start = n - chunk_len
        segs.append(Segment(index=i + 1, start=start, tokens=toks[start:start + chunk_len]))
    return SegmentSet(segments=tuple(segs), chunk_len=chunk_len, overlap=overlap)


def reconstruct(segment_set: SegmentSet) -> tuple[int, ...]:
    """Recover the original sequence from a SegmentSet.

    The first window is taken whole; each later window contributes only
    the tokens at source positions not yet emitted. Serves as the
    round-trip oracle for :func:`segment`.
    """
    out: list[int] = []
    covered = 0
    for seg in segment_set.segments:
        if seg.start > covered:
            raise ContractError(
                f"segment {seg.index} starts at {seg.start} but only "
                f"{covered} positions are covered"
            )
        if seg.start + len(seg.tokens) < covered:
            raise ContractError(
                f"segment {seg.index} ends before already-covered positions"
            )
        out.extend(seg.tokens[covered - seg.start:])
        covered = seg.start + len(seg.tokens)
    return tuple(out)


def segment_set_to_dict(segment_set: SegmentSet, include_tokens: bool = False) -> dict:
    """JSON-ready form; token payloads included only on request."""
    entries = []
    for seg in segment_set.segments:
        entry: dict = {"i": seg.index, "start": seg.start, "len": len(seg.tokens)}
        if include_tokens:
            entry["tokens"] = list(seg.tokens)
        entries.append(entry)
    return {
        "L": segment_set.chunk_len,
        "O": segment_set.overlap,
        "segments": entries,
    }


def _validate_window(chunk_len: int, overlap: int) -> None:
    if chunk_len < 2:
        raise ConfigError(f"chunk_len must be >= 2, got {chunk_len}")
    if overlap < 0:
        raise ConfigError(f"overlap must be >= 0, got {overlap}")
    if overlap >= chunk_len:
        raise ConfigError(
            f"overlap {overlap} >= chunk_len {chunk_len}: stride would be non-positive"
        )
