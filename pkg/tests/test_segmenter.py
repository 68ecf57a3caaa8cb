import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chunkfuse.errors import ConfigError, ContractError, InputError
from chunkfuse.segmenter import (
    Segment,
    SegmentSet,
    reconstruct,
    segment,
    segment_count,
    segment_set_to_dict,
)


def test_hand_case_n10_l4_o2():
    segs = segment(list(range(10)), 4, 2)
    assert [s.start for s in segs] == [0, 2, 4, 6]
    assert segs.count == 4
    assert all(len(s) == 4 for s in segs)
    assert segs.segments[1].tokens == (2, 3, 4, 5)


def test_short_input_single_window():
    segs = segment([7, 8, 9], 1024, 150)
    assert segs.count == 1
    assert segs.segments[0].tokens == (7, 8, 9)
    assert segs.segments[0].start == 0


def test_reference_defaults_window():
    # 1024-token windows overlapping by 150 are the stock setting
    segs = segment(list(range(5000)), 1024, 150)
    assert segs.chunk_len == 1024 and segs.overlap == 150
    assert all(len(s) == 1024 for s in segs)


def test_anchored_tail_keeps_full_length():
    segs = segment(list(range(11)), 4, 2)
    # stride-2 starts would be 0,2,4,6,8 but 8+4 > 11, so the last
    # window is pulled back to end at the sequence end
    assert [s.start for s in segs] == [0, 2, 4, 6, 7]
    assert all(len(s) == 4 for s in segs)


def test_overlap_must_be_below_chunk_len():
    with pytest.raises(ConfigError, match="non-positive"):
        segment([1, 2, 3], 4, 4)


def test_chunk_len_minimum():
    with pytest.raises(ConfigError):
        segment([1, 2, 3], 1, 0)


def test_negative_overlap():
    with pytest.raises(ConfigError):
        segment([1, 2, 3], 4, -1)


def test_empty_sequence():
    with pytest.raises(InputError):
        segment([], 4, 2)


def test_count_formula_matches_construction():
    rnd = random.Random(0)
    for _ in range(300):
        chunk_len = rnd.randint(2, 40)
        overlap = rnd.randint(0, chunk_len - 1)
        n = rnd.randint(1, 400)
        segs = segment(range(n), chunk_len, overlap)
        assert segs.count == segment_count(n, chunk_len, overlap)


def _check_invariants(segs: SegmentSet, n: int) -> None:
    chunk_len, overlap = segs.chunk_len, segs.overlap
    covered = set()
    for seg in segs:
        covered.update(range(seg.start, seg.start + len(seg)))
    assert covered == set(range(n)), "coverage has gaps"
    if n > chunk_len:
        assert all(len(s) == chunk_len for s in segs)
        pairs = list(zip(segs.segments, segs.segments[1:]))
        for idx, (a, b) in enumerate(pairs):
            shared = (a.start + len(a)) - b.start
            assert shared >= overlap
            if idx < len(pairs) - 1:
                assert shared == overlap


def test_round_trip_and_invariants_random():
    rnd = random.Random(1)
    for _ in range(200):
        chunk_len = rnd.randint(2, 50)
        overlap = rnd.randint(0, chunk_len - 1)
        n = rnd.randint(1, 2000)
        tokens = tuple(rnd.randrange(1000) for _ in range(n))
        segs = segment(tokens, chunk_len, overlap)
        assert reconstruct(segs) == tokens
        _check_invariants(segs, n)


@given(st.integers(2, 30), st.data())
@settings(max_examples=80, deadline=None)
def test_round_trip_property(chunk_len, data):
    overlap = data.draw(st.integers(0, chunk_len - 1))
    tokens = tuple(data.draw(st.lists(st.integers(0, 99), min_size=1, max_size=300)))
    segs = segment(tokens, chunk_len, overlap)
    assert reconstruct(segs) == tokens


def test_linear_growth_of_chunk_count():
    # with overlap at most half a window, doubling the input never more
    # than doubles the window count plus one
    rnd = random.Random(2)
    for _ in range(100):
        chunk_len = rnd.randint(2, 64)
        overlap = rnd.randint(0, chunk_len // 2)
        n = rnd.randint(chunk_len + 1, 5000)
        assert segment_count(2 * n, chunk_len, overlap) <= \
            2 * (segment_count(n, chunk_len, overlap) + 1)


def test_reconstruct_rejects_gap():
    bad = SegmentSet(
        segments=(Segment(1, 0, (1, 2)), Segment(2, 3, (9, 9))),
        chunk_len=2, overlap=0)
    with pytest.raises(ContractError):
        reconstruct(bad)


def test_json_form():
    segs = segment([5, 6, 7, 8, 9, 10], 4, 2)
    d = segment_set_to_dict(segs)
    assert d["L"] == 4 and d["O"] == 2
    assert d["segments"][0] == {"i": 1, "start": 0, "len": 4}
    assert "tokens" not in d["segments"][0]
    with_payload = segment_set_to_dict(segs, include_tokens=True)
    assert with_payload["segments"][0]["tokens"] == [5, 6, 7, 8]
