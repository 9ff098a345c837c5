import pytest
from hypothesis import given
from hypothesis import strategies as st

from protagent.errors import DegenerateWindowError
from protagent.seq import CANONICAL_RESIDUES, Sequence
from protagent.topology import KYTE_DOOLITTLE, predict_topology, window_means

residues_st = st.text(alphabet=CANONICAL_RESIDUES + "X", min_size=10, max_size=200)


def seq(res: str) -> Sequence:
    return Sequence(id="t", residues=res)


def test_window_means_truncated_edges():
    s = seq("ILVA")  # hydropathies 4.5, 3.8, 4.2, 1.8
    means = window_means(s, 5)
    assert means[0] == pytest.approx((4.5 + 3.8 + 4.2) / 3)
    assert means[1] == pytest.approx((4.5 + 3.8 + 4.2 + 1.8) / 4)
    assert means[3] == pytest.approx((3.8 + 4.2 + 1.8) / 3)


def test_window_must_be_odd_and_big_enough():
    with pytest.raises(ValueError):
        predict_topology(seq("L" * 30), window=8)
    with pytest.raises(ValueError):
        predict_topology(seq("L" * 30), window=3)


def test_degenerate_window_rejected():
    with pytest.raises(DegenerateWindowError):
        predict_topology(seq("L" * 9), window=19)


def test_poly_leucine_all_strong():
    pred = predict_topology(seq("L" * 40))
    states = pred.raw_pred.splitlines()[2]
    assert states == "H" * 40
    assert pred.tm_signal_letter_hits == 40
    assert pred.has_tm_signal_heuristic is True


def test_hydrophilic_sequence_no_signal():
    pred = predict_topology(seq("DEKR" * 10))
    states = pred.raw_pred.splitlines()[2]
    assert states == "." * 40
    assert pred.has_tm_signal_heuristic is False


def test_short_runs_demoted():
    # a short hydrophobic island inside a hydrophilic context cannot
    # produce a window-mean run of 7, so it is demoted entirely
    res = "DEKRDEKRDEKR" + "ILVIL" + "DEKRDEKRDEKR"
    pred = predict_topology(seq(res), window=5)
    states = pred.raw_pred.splitlines()[2]
    assert "H" not in states and "h" not in states


def test_x_is_neutral():
    means = window_means(seq("XXXXX"), 5)
    assert all(m == 0.0 for m in means)


def test_raw_pred_layout():
    s = Sequence(id="myid", residues="L" * 20)
    pred = predict_topology(s)
    lines = pred.raw_pred.splitlines()
    assert lines[0] == ">myid"
    assert lines[1] == "L" * 20
    assert len(lines[2]) == 20


@given(residues_st)
def test_states_align_with_sequence(res):
    pred = predict_topology(seq(res), window=9)
    lines = pred.raw_pred.splitlines()
    assert len(lines) == 3
    assert lines[1] == res
    assert len(lines[2]) == len(res)
    assert set(lines[2]) <= {".", "H", "h"}
    assert pred.tm_signal_letter_hits == lines[2].count("H")
    # no surviving helix-like run shorter than the minimum
    import re

    for m in re.finditer(r"[Hh]+", lines[2]):
        assert m.end() - m.start() >= 7


@given(residues_st)
def test_states_match_window_means(res):
    s = seq(res)
    pred = predict_topology(s, window=9, min_run=1)
    states = pred.raw_pred.splitlines()[2]
    for state, m in zip(states, window_means(s, 9)):
        if m >= 1.6:
            assert state == "H"
        elif m >= 0.9:
            assert state == "h"
        else:
            assert state == "."


def test_hydropathy_table_spot_checks():
    assert KYTE_DOOLITTLE["I"] == 4.5
    assert KYTE_DOOLITTLE["R"] == -4.5
    assert KYTE_DOOLITTLE["G"] == -0.4
    assert len(KYTE_DOOLITTLE) == 21
