from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from hho.errors import NotJoinable
from hho.homology import build_d2, homotopy_basis, lower_bound, rational_rank
from hho.rewriting import LEFTMOST_OUTERMOST, RIGHTMOST_INNERMOST, replay_derivation

from conftest import load

NAMES = ("NotNot", "NotAnd", "NotOr", "NotAll", "NotEx")


# ---------------------------------------------------------------- D₂ for negation normal form


def test_d2_shape_and_labels(nnf_prs):
    d2 = build_d2(nnf_prs)
    assert d2.shape == (5, 5)
    assert d2.rows == NAMES
    assert d2.columns == ("CP1", "CP2", "CP3", "CP4", "CP5")


def test_d2_columns(nnf_prs):
    d2 = build_d2(nnf_prs)
    # Outer leg minus inner leg; the opposite orientation flips every column.
    assert [d2.column(j) for j in range(5)] == [
        (0, 0, 0, 0, 0),
        (-1, -1, -1, 0, 0),
        (-1, -1, -1, 0, 0),
        (0, 0, 0, -1, -1),
        (0, 0, 0, -1, -1),
    ]


def test_cp2_leg_counts(nnf_prs):
    left, right = build_d2(nnf_prs).provenance[1]
    assert left.rule_counts() == {"NotNot": 1}
    assert right.rule_counts() == {"NotAnd": 1, "NotOr": 1, "NotNot": 2}
    assert [s.rule for s in right.steps] == ["NotAnd", "NotOr", "NotNot", "NotNot"]


def test_nnf_rank_and_bound(nnf_prs):
    report = lower_bound(nnf_prs)
    assert (report.rules, report.peaks, report.rank, report.bound) == (5, 5, 2, 3)


@pytest.mark.parametrize("strategy", [LEFTMOST_OUTERMOST, RIGHTMOST_INNERMOST])
def test_column_consistency(nnf_prs, strategy):
    d2 = build_d2(nnf_prs, strategy)
    for j, (left, right) in enumerate(d2.provenance):
        assert left.target == right.target
        assert left.source == right.source == d2.peaks[j].superposition
        ca, cb = left.rule_counts(), right.rule_counts()
        assert d2.column(j) == tuple(ca[n] - cb[n] for n in d2.rows)
        for tr in (left, right):
            assert replay_derivation(nnf_prs, tr.context, tr.source, tr.steps) == tr.target


def test_strategies_agree_on_nnf(nnf_prs):
    lo = lower_bound(nnf_prs, LEFTMOST_OUTERMOST)
    ri = lower_bound(nnf_prs, RIGHTMOST_INNERMOST)
    assert (lo.rank, lo.bound) == (ri.rank, ri.bound) == (2, 3)


def test_bound_is_tight_on_nnf(nnf_prs):
    # NotAnd follows from the three rules NotNot, NotOr, NotEx, and the bound is 3.
    import test_rewriting

    sub = nnf_prs.subsystem(["NotNot", "NotOr", "NotEx"])
    xy, t = test_rewriting.XY, test_rewriting.t
    out = replay_derivation(sub, xy, t("not (and x y)", xy), test_rewriting.chain_steps())
    assert out == t("or (not x) (not y)", xy)
    assert lower_bound(nnf_prs).bound == len(sub)


# ---------------------------------------------------------------- trivial systems


def test_empty_system():
    _, prs = load("empty.prs")
    d2 = build_d2(prs)
    assert d2.shape == (0, 0)
    report = lower_bound(prs)
    assert (report.rank, report.bound) == (0, 0)
    assert homotopy_basis(prs) == []


def test_single_rule():
    _, prs = load("single.prs")
    report = lower_bound(prs)
    assert (report.rules, report.peaks, report.rank, report.bound) == (1, 0, 0, 1)
    assert homotopy_basis(prs) == []


def test_nonjoinable_refused():
    _, prs = load("nonjoinable.prs")
    with pytest.raises(NotJoinable) as info:
        build_d2(prs)
    assert info.value.peak == "CP1"


# ---------------------------------------------------------------- homotopy basis


def test_basis_entries(nnf_prs):
    basis = homotopy_basis(nnf_prs)
    assert [e.peak for e in basis] == ["CP1", "CP2", "CP3", "CP4", "CP5"]
    for e in basis:
        assert e.left.source == e.right.source
        assert e.left.target == e.right.target
    # The data behind each column of D₂.
    assert [(e.left, e.right) for e in basis] == list(build_d2(nnf_prs).provenance)


# ---------------------------------------------------------------- rank


def test_rank_examples():
    assert rational_rank([[0, 0], [0, 0]]) == 0
    assert rational_rank([[1, 0, 0], [0, 1, 0], [0, 0, 1]]) == 3
    assert rational_rank([]) == 0
    assert rational_rank([[], []]) == 0
    assert rational_rank([[Fraction(1, 2), 1], [1, 2]]) == 1
    assert rational_rank([[0, 2, 4], [0, 1, 2], [3, 0, 1]]) == 2


matrices = st.integers(0, 6).flatmap(
    lambda k: st.lists(st.lists(st.integers(-3, 3), min_size=k, max_size=k), max_size=6)
)


@settings(max_examples=300, deadline=None)
@given(matrices)
def test_rank_matches_sympy(rows):
    got = rational_rank(rows)
    if not rows or not rows[0]:
        assert got == 0
        return
    assert got == sympy.Matrix(rows).rank()
    assert got <= min(len(rows), len(rows[0]))


@settings(max_examples=100, deadline=None)
@given(matrices, st.integers(1, 5))
def test_rank_invariant_under_scaling_and_transpose(rows, c):
    if not rows or not rows[0]:
        return
    r = rational_rank(rows)
    assert rational_rank([[Fraction(x, c) for x in row] for row in rows]) == r
    assert rational_rank([list(col) for col in zip(*rows)]) == r


def test_bound_range(nnf_prs):
    report = lower_bound(nnf_prs)
    assert 0 <= report.rank <= min(report.rules, report.peaks)
    assert 0 <= report.bound <= report.rules
