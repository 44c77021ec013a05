"""Quality gate: strict boundaries and reason accumulation."""

import dataclasses

from hypothesis import given
from hypothesis import strategies as st

from conftest import make_players, make_trace
from msc.preprocess import MIN_APM, MIN_FRAMES, MIN_MMR, filter_header, filter_trace


def players_with(mmr=(3000, 3000), apm=(100.0, 100.0)):
    return make_players(mmr=mmr, apm=apm)


def test_boundaries_are_strict():
    # Values exactly at each threshold are rejected.
    assert not filter_header(MIN_FRAMES, players_with()).passed
    assert filter_header(MIN_FRAMES + 1, players_with()).passed
    assert not filter_header(20000, players_with(apm=(MIN_APM, 100.0))).passed
    assert filter_header(20000, players_with(apm=(MIN_APM + 0.01, 100.0))).passed
    assert not filter_header(20000, players_with(mmr=(MIN_MMR, 3000))).passed
    assert filter_header(20000, players_with(mmr=(MIN_MMR + 1, 3000))).passed


def test_reasons_accumulate_across_checks():
    players = players_with(mmr=(900, 3000), apm=(5.0, 4.0))
    res = filter_header(9000, players)
    assert res.reasons == ["TooShort", "LowApm(1)", "LowApm(2)", "LowMmr(1)"]


def test_reason_names_player():
    res = filter_header(20000, players_with(mmr=(3000, 500)))
    assert res.reasons == ["LowMmr(2)"]


def test_filter_trace_uses_header_fields():
    trace = make_trace([], total_frames=9999)
    assert filter_trace(trace).reasons == ["TooShort"]


@given(
    frames=st.integers(0, 40000),
    apm1=st.floats(0, 300, allow_nan=False),
    apm2=st.floats(0, 300, allow_nan=False),
    mmr1=st.integers(0, 8000),
    mmr2=st.integers(0, 8000),
)
def test_passed_iff_no_reasons(frames, apm1, apm2, mmr1, mmr2):
    players = players_with(mmr=(mmr1, mmr2), apm=(apm1, apm2))
    res = filter_header(frames, players)
    assert res.passed == (not res.reasons)
    expected_pass = (
        frames > MIN_FRAMES
        and apm1 > MIN_APM and apm2 > MIN_APM
        and mmr1 > MIN_MMR and mmr2 > MIN_MMR
    )
    assert res.passed == expected_pass
