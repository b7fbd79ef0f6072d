"""Text and JSON renderings of command results.

JSON documents are plain dicts built in a fixed key order, so dumping them
without ``sort_keys`` is already deterministic.
"""

from __future__ import annotations

import json
from typing import Any

from .critical import ConfluenceReport, CriticalPeak
from .homology import BoundReport, BoundaryMatrix, HomotopyBasisEntry
from .rewriting import RewriteStep, Trace, ValidationReport
from .syntax import show_context, show_position, show_term
from .terms import Context, Substitution, Term

ORIENTATION = "left leg: outer rule at the root; right leg: inner rule at the overlap position"


def dumps(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _subst(s: Substitution | None) -> dict[str, str]:
    if s is None:
        return {}
    return {k: show_term(v) for k, v in s.items()}


def step_json(step: RewriteStep, result: Term | None = None) -> dict[str, Any]:
    doc = {
        "rule": step.rule,
        "direction": step.direction,
        "position": list(step.position),
        "substitution": _subst(step.substitution),
    }
    if result is not None:
        doc["term"] = show_term(result)
    return doc


def trace_json(trace: Trace) -> dict[str, Any]:
    results = trace.terms[1:] if len(trace.terms) == len(trace.steps) + 1 else [None] * len(trace.steps)
    return {
        "source": show_term(trace.source),
        "target": show_term(trace.target),
        "steps": [step_json(s, t) for s, t in zip(trace.steps, results)],
    }


def step_text(step: RewriteStep) -> str:
    arrow = "->" if step.direction == "forward" else "<-"
    sub = ", ".join(f"{k} := {v}" for k, v in _subst(step.substitution).items())
    return f"{arrow} {step.rule} at {show_position(step.position)}" + (f"  {{{sub}}}" if sub else "")


def trace_text(trace: Trace, indent: str = "  ") -> list[str]:
    lines = [f"{indent}{show_term(trace.source)}"]
    results = trace.terms[1:] if len(trace.terms) == len(trace.steps) + 1 else [None] * len(trace.steps)
    for s, t in zip(trace.steps, results):
        lines.append(f"{indent}  {step_text(s)}")
        if t is not None:
            lines.append(f"{indent}{show_term(t)}")
    return lines


# ---------------------------------------------------------------- validate


def validation_json(report: ValidationReport) -> dict[str, Any]:
    return {
        "command": "validate",
        "ok": report.ok,
        "is_prs": report.is_prs,
        "rules": [
            {
                "name": c.rule,
                "ok": c.ok,
                "lhs_is_pattern": c.lhs_is_pattern,
                "rhs_vars_in_lhs": c.rhs_vars_in_lhs,
                "same_var_multiset": c.same_var_multiset,
                "base_type": c.base_type,
                "inverse_of": c.inverse_of,
                "notes": list(c.notes),
            }
            for c in report.checks
        ],
    }


def validation_text(report: ValidationReport) -> str:
    lines = []
    width = max((len(c.rule) for c in report.checks), default=0)
    for c in report.checks:
        lines.append(f"{c.rule:<{width}}  {'ok' if c.ok else 'FAIL'}")
        lines.extend(f"{'':<{width}}    {n}" for n in c.notes)
    if report.ok:
        verdict = "valid"
    elif report.is_prs:
        verdict = "a pattern rewriting system, but the bound hypotheses fail"
    else:
        verdict = "invalid"
    lines.append(f"{len(report.checks)} rule(s): {verdict}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- peaks


def peak_json(peak: CriticalPeak) -> dict[str, Any]:
    return {
        "id": peak.id,
        "outer": peak.outer_rule,
        "inner": peak.inner_rule,
        "position": list(peak.overlap.position),
        "context": show_context(peak.context),
        "superposition": show_term(peak.superposition),
        "left": show_term(peak.left),
        "right": show_term(peak.right),
        "unifier": _subst(peak.overlap.unifier),
    }


def peaks_json(peaks: list[CriticalPeak]) -> dict[str, Any]:
    return {"command": "cps", "orientation": ORIENTATION, "peaks": [peak_json(p) for p in peaks]}


def peaks_text(peaks: list[CriticalPeak]) -> str:
    lines = []
    for p in peaks:
        lines.append(
            f"{p.id}: {p.outer_rule} / {p.inner_rule} at {show_position(p.overlap.position)}"
        )
        lines.append(f"  {show_context(p.context)} |- {show_term(p.superposition)}")
        lines.append(f"  left:  {show_term(p.left)}")
        lines.append(f"  right: {show_term(p.right)}")
    lines.append(f"{len(peaks)} critical peak(s)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- confluence


def confluence_json(report: ConfluenceReport) -> dict[str, Any]:
    return {
        "command": "confluence",
        "locally_confluent": report.locally_confluent,
        "peaks": [
            {
                "id": v.peak.id,
                "superposition": show_term(v.peak.superposition),
                "joinable": v.joinable,
                "left_normal": None if v.left_normal is None else show_term(v.left_normal),
                "right_normal": None if v.right_normal is None else show_term(v.right_normal),
                "error": v.error,
            }
            for v in report.verdicts
        ],
    }


def confluence_text(report: ConfluenceReport) -> str:
    lines = []
    for v in report.verdicts:
        p = v.peak
        head = f"{p.id} {show_term(p.superposition)}"
        if v.joinable is None:
            lines.append(f"{head}: fuel exhausted ({v.error})")
        elif v.joinable:
            lines.append(f"{head}: joinable at {show_term(v.left_normal)}")
        else:
            lines.append(f"{head}: NOT joinable")
            lines.append(f"  left normal form:  {show_term(v.left_normal)}")
            lines.append(f"  right normal form: {show_term(v.right_normal)}")
    verdict = "locally confluent" if report.locally_confluent else "not locally confluent"
    lines.append(f"{len(report.verdicts)} peak(s): {verdict}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- bound


def matrix_json(m: BoundaryMatrix) -> dict[str, Any]:
    return {
        "rows": list(m.rows),
        "columns": list(m.columns),
        "superpositions": {p.id: show_term(p.superposition) for p in m.peaks},
        "entries": [list(r) for r in m.entries],
    }


def bound_json(report: BoundReport) -> dict[str, Any]:
    return {
        "command": "bound",
        "strategy": report.strategy,
        "orientation": ORIENTATION,
        "rules": report.rules,
        "peaks": report.peaks,
        "matrix": matrix_json(report.matrix),
        "rank": report.rank,
        "bound": report.bound,
    }


def matrix_text(m: BoundaryMatrix) -> list[str]:
    lines = [f"{p.id}: {show_term(p.superposition)}" for p in m.peaks]
    if not m.rows or not m.columns:
        return lines + [f"(empty {len(m.rows)}x{len(m.columns)} matrix)"]
    rw = max(len(r) for r in m.rows)
    cells = [[str(x) for x in row] for row in m.entries]
    cw = max([len(c) for c in m.columns] + [len(x) for row in cells for x in row] + [1])
    lines.append(" " * rw + "".join(f"  {c:>{cw}}" for c in m.columns))
    for name, row in zip(m.rows, cells):
        lines.append(f"{name:<{rw}}" + "".join(f"  {x:>{cw}}" for x in row))
    return lines


def bound_text(report: BoundReport) -> str:
    lines = [
        f"rules: {report.rules}",
        f"critical peaks: {report.peaks}",
        f"strategy: {report.strategy}",
        f"orientation: {ORIENTATION}",
        "D2:",
    ]
    lines += ["  " + x for x in matrix_text(report.matrix)]
    lines += [f"rank: {report.rank}", f"lower bound: {report.bound}"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- basis


def basis_json(entries: list[HomotopyBasisEntry], strategy: str) -> dict[str, Any]:
    return {
        "command": "basis",
        "strategy": strategy,
        "orientation": ORIENTATION,
        "entries": [
            {"peak": e.peak, "left": trace_json(e.left), "right": trace_json(e.right)} for e in entries
        ],
    }


def basis_text(entries: list[HomotopyBasisEntry]) -> str:
    lines = []
    for e in entries:
        lines.append(f"{e.peak}: {show_term(e.left.source)}  ==>  {show_term(e.left.target)}")
        lines.append("  left path:")
        lines += trace_text(e.left, "    ")
        lines.append("  right path:")
        lines += trace_text(e.right, "    ")
    lines.append(f"{len(entries)} basis element(s)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- normalize / replay


def normalize_json(context: Context, trace: Trace, strategy: str) -> dict[str, Any]:
    counts = trace.rule_counts()
    return {
        "command": "normalize",
        "strategy": strategy,
        "context": show_context(context),
        **trace_json(trace),
        "normal_form": show_term(trace.target),
        "rule_counts": {k: counts[k] for k in sorted(counts)},
    }


def normalize_text(context: Context, trace: Trace) -> str:
    lines = trace_text(trace, "")
    lines.append(f"normal form: {show_term(trace.target)}  ({len(trace)} step(s))")
    return "\n".join(lines) + "\n"


def replay_json(context: Context, trace: Trace, expected: Term | None, ok: bool) -> dict[str, Any]:
    return {
        "command": "replay",
        "context": show_context(context),
        **trace_json(trace),
        "expected": None if expected is None else show_term(expected),
        "ok": ok,
    }


def replay_text(context: Context, trace: Trace, expected: Term | None, ok: bool) -> str:
    lines = [f"context: {show_context(context)}"] + trace_text(trace, "")
    lines.append(f"final: {show_term(trace.target)}")
    if expected is not None:
        lines.append("matches expected term" if ok else f"expected {show_term(expected)}")
    lines.append("replay ok" if ok else "replay FAILED")
    return "\n".join(lines) + "\n"
