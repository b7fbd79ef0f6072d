"""The second boundary matrix, its rank over ℚ and the resulting lower bound."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence

from .critical import CriticalPeak, critical_pairs
from .errors import FuelExhausted, NotJoinable
from .rewriting import LEFTMOST_OUTERMOST, PRS, Trace, normalize_with_trace


@dataclass(frozen=True)
class BoundaryMatrix:
    """Rows are rules, columns are critical peaks.

    ``provenance[j]`` holds the two paths from the superposition of peak j
    (the diverging step followed by the chosen normalization) that the
    column counts.
    """

    rows: tuple[str, ...]
    columns: tuple[str, ...]
    entries: tuple[tuple[int, ...], ...]
    peaks: tuple[CriticalPeak, ...] = ()
    provenance: tuple[tuple[Trace, Trace], ...] = ()

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.columns)

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(row[j] for row in self.entries)

    def column_dict(self, j: int) -> dict[str, int]:
        return dict(zip(self.rows, self.column(j)))


@dataclass(frozen=True)
class HomotopyBasisEntry:
    peak: str
    left: Trace
    right: Trace


@dataclass(frozen=True)
class BoundReport:
    rules: int
    peaks: int
    rank: int
    bound: int
    strategy: str
    matrix: BoundaryMatrix


def _leg(prs: PRS, peak: CriticalPeak, left: bool, strategy: str, fuel: int | None) -> Trace:
    step = peak.left_step if left else peak.right_step
    start = peak.left if left else peak.right
    try:
        nf, rest = normalize_with_trace(prs, peak.context, start, strategy, fuel)
    except FuelExhausted as e:
        e.peak = peak.id
        raise
    return Trace(
        peak.context,
        peak.superposition,
        (step,) + rest.steps,
        nf,
        (peak.superposition,) + rest.terms,
    )


def _paths(prs: PRS, strategy: str, fuel: int | None) -> list[tuple[CriticalPeak, Trace, Trace]]:
    out = []
    for peak in critical_pairs(prs):
        a = _leg(prs, peak, True, strategy, fuel)
        b = _leg(prs, peak, False, strategy, fuel)
        if a.target != b.target:
            raise NotJoinable(f"critical peak {peak.id} ({peak.outer_rule}/{peak.inner_rule}) is not joinable", peak.id)
        out.append((peak, a, b))
    return out


def build_d2(prs: PRS, strategy: str = LEFTMOST_OUTERMOST, fuel: int | None = None) -> BoundaryMatrix:
    paths = _paths(prs, strategy, fuel)
    names = tuple(r.name for r in prs.rules)
    cols = []
    for _, a, b in paths:
        ca, cb = a.rule_counts(), b.rule_counts()
        cols.append([ca[n] - cb[n] for n in names])
    entries = tuple(tuple(col[i] for col in cols) for i in range(len(names)))
    return BoundaryMatrix(
        names,
        tuple(p.id for p, _, _ in paths),
        entries,
        tuple(p for p, _, _ in paths),
        tuple((a, b) for _, a, b in paths),
    )


def rational_rank(matrix: BoundaryMatrix | Sequence[Sequence[int | Fraction]]) -> int:
    """Rank over ℚ by fraction-free (Bareiss) elimination."""
    rows = matrix.entries if isinstance(matrix, BoundaryMatrix) else matrix
    m = [_integral(r) for r in rows]
    if not m or not m[0]:
        return 0
    n, k = len(m), len(m[0])
    rank, prev = 0, 1
    for c in range(k):
        piv = next((r for r in range(rank, n) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][c]
        for r in range(rank + 1, n):
            f = m[r][c]
            for cc in range(c + 1, k):
                m[r][cc] = (m[r][cc] * p - f * m[rank][cc]) // prev
            m[r][c] = 0
        prev = p
        rank += 1
        if rank == n:
            break
    return rank


def _integral(row: Sequence[int | Fraction]) -> list[int]:
    # Scaling a row by a nonzero integer does not change the rank.
    fr = [Fraction(x) for x in row]
    d = lcm(*(x.denominator for x in fr)) if fr else 1
    return [int(x * d) for x in fr]


def lower_bound(prs: PRS, strategy: str = LEFTMOST_OUTERMOST, fuel: int | None = None) -> BoundReport:
    d2 = build_d2(prs, strategy, fuel)
    r = rational_rank(d2)
    n, k = d2.shape
    return BoundReport(n, k, r, n - r, strategy, d2)


def homotopy_basis(prs: PRS, strategy: str = LEFTMOST_OUTERMOST, fuel: int | None = None) -> list[HomotopyBasisEntry]:
    return [HomotopyBasisEntry(p.id, a, b) for p, a, b in _paths(prs, strategy, fuel)]
