"""Overlaps, critical peaks and local confluence."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import FuelExhausted, HHOError
from .normalize import normal_form
from .rewriting import (
    LEFTMOST_OUTERMOST,
    PRS,
    RewriteStep,
    Rule,
    normalize_with_trace,
    rewrite_at,
)
from .terms import (
    App,
    Context,
    Position,
    Signature,
    Substitution,
    Term,
    Var,
    abstract_many,
    arrows,
    apply_substitution,
    binders_at,
    first_occurrence_order,
    free_vars,
    fresh_name,
    head_of,
    iter_positions,
    lams,
    open_many,
    rename_vars,
    replace_at,
    subterm_at,
    typecheck,
)
from .unify import unify


@dataclass(frozen=True)
class Overlap:
    """Rule ``outer`` overlapped by rule ``inner`` at ``position`` of the outer lhs."""

    outer: int
    inner: int
    position: Position
    unifier: Substitution


@dataclass(frozen=True)
class CriticalPeak:
    """``left ← superposition → right``; the left leg uses the outer rule at the root."""

    id: str
    overlap: Overlap
    outer_rule: str
    inner_rule: str
    context: Context
    superposition: Term
    left: Term
    right: Term
    left_step: RewriteStep
    right_step: RewriteStep


def _rename_apart(rule: Rule, avoid: set[str]) -> tuple[Context, Term, Term, dict[str, str]]:
    taken = set(avoid)
    renaming = {}
    for n in rule.context.names:
        renaming[n] = fresh_name(n, taken)
        taken.add(renaming[n])
    ctx = Context(tuple((renaming[n], ty) for n, ty in rule.context))
    return ctx, rename_vars(rule.lhs, renaming), rename_vars(rule.rhs, renaming), renaming


def _raw_overlaps(sig: Signature, r1: Rule, r2: Rule, same: bool):
    """Yield (position, unifier, metas, u, left, right) for every overlap."""
    avoid = set(r1.context.names) | set(sig.symbols)
    ctx2, l2, r2rhs, _ = _rename_apart(r2, avoid)
    for pos, _ in iter_positions(r1.lhs):
        if same and not pos:
            continue
        binders = binders_at(r1.lhs, pos)
        taken = avoid | set(ctx2.names)
        names = []
        for hint, _ty in binders:
            names.append(fresh_name(hint or "x", taken))
            taken.add(names[-1])
        local_ctx = r1.context.extend(*((n, ty) for n, (_, ty) in zip(names, binders)))
        sub = open_many(subterm_at(r1.lhs, pos), names)
        head = head_of(sub)
        if isinstance(head, Var) and head.name in r1.context:
            continue
        if typecheck(sig, local_ctx, sub) != r2.type:
            continue
        used = [(n, ty) for n, (_, ty) in zip(names, binders) if n in free_vars(sub)]
        # Lift the inner rule's variables over the binders used at the position.
        lift = {}
        lifted_ctx = []
        for n, ty in ctx2:
            lifted_ctx.append((n, arrows([t for _, t in used], ty)))
            image: Term = Var(n)
            for u, _ in used:
                image = App(image, Var(u))
            lift[n] = image
        metas = Context(tuple(r1.context.entries) + tuple(lifted_ctx))
        used_names = [n for n, _ in used]
        inner_l = apply_substitution(l2, lift)
        inner_r = apply_substitution(r2rhs, lift)
        lhs = lams(used, abstract_many(sub, used_names))
        rhs = lams(used, abstract_many(inner_l, used_names))
        theta = unify(sig, metas, lhs, rhs)
        if theta is None:
            continue
        target = theta.target if theta.target is not None else metas
        u = normal_form(sig, target, apply_substitution(r1.lhs, theta))
        left = normal_form(sig, target, apply_substitution(r1.rhs, theta))
        contractum = abstract_many(inner_r, names)
        right = normal_form(sig, target, apply_substitution(replace_at(r1.lhs, pos, contractum), theta))
        yield pos, theta, target, u, left, right


def find_overlaps(signature: Signature, rule1: Rule, rule2: Rule, outer: int = 0, inner: int = 0) -> list[Overlap]:
    """All overlaps of ``rule2`` into the lhs of ``rule1`` (depaired forms).

    The root overlap of a rule with itself is skipped.
    """
    same = rule1 == rule2 and outer == inner
    r1, r2 = rule1.depaired(signature), rule2.depaired(signature)
    return [Overlap(outer, inner, pos, theta) for pos, theta, *_ in _raw_overlaps(signature, r1, r2, same)]


def _tidy_names(ctx: Context, terms: list[Term]) -> tuple[Context, dict[str, str]]:
    order = [n for n in first_occurrence_order(*terms) if n in ctx]
    order += [n for n in ctx.names if n not in order]
    taken: set[str] = set()
    renaming = {}
    for n in order:
        m = fresh_name(n.rstrip("'") or n, taken)
        taken.add(m)
        renaming[n] = m
    return Context(tuple((renaming[n], ctx.lookup(n)) for n in order)), renaming


def _key(ctx: Context, u: Term, left: Term, right: Term):
    order = first_occurrence_order(u, left, right)
    ren = {n: f"#{i}" for i, n in enumerate(order)}
    return (
        tuple(ctx.lookup(n) for n in order),
        rename_vars(u, ren),
        rename_vars(left, ren),
        rename_vars(right, ren),
    )


def critical_pairs(prs: PRS) -> list[CriticalPeak]:
    sig = prs.signature
    rules = prs.depaired_rules
    found = []
    for i, r1 in enumerate(rules):
        for j, r2 in enumerate(rules):
            for pos, theta, target, u, left, right in _raw_overlaps(sig, r1, r2, i == j):
                if not pos and i > j:
                    continue
                found.append((i, j, pos, theta, target, u, left, right))
    found.sort(key=lambda f: (f[0], f[1], f[2]))
    peaks: list[CriticalPeak] = []
    seen = set()
    for i, j, pos, theta, target, u, left, right in found:
        key = _key(target, u, left, right)
        if key in seen:
            continue
        seen.add(key)
        ctx, ren = _tidy_names(target, [u, left, right])
        u, left, right = (rename_vars(t, ren) for t in (u, left, right))
        outer, inner = prs.rules[i], prs.rules[j]
        ls = rewrite_at(prs, ctx, u, (), outer)
        rs = rewrite_at(prs, ctx, u, pos, inner)
        if ls is None or rs is None or ls[0] != left or rs[0] != right:
            raise HHOError(f"internal error: peak {outer.name}/{inner.name} at {list(pos)} is not a genuine divergence")
        unifier = Substitution({k: rename_vars(v, ren) for k, v in theta.items()}, ctx)
        peaks.append(
            CriticalPeak(
                f"CP{len(peaks) + 1}",
                Overlap(i, j, pos, unifier),
                outer.name,
                inner.name,
                ctx,
                u,
                left,
                right,
                ls[1],
                rs[1],
            )
        )
    return peaks


@dataclass(frozen=True)
class PeakVerdict:
    peak: CriticalPeak
    joinable: bool | None
    left_normal: Term | None = None
    right_normal: Term | None = None
    error: str | None = None


@dataclass(frozen=True)
class ConfluenceReport:
    verdicts: tuple[PeakVerdict, ...]

    @property
    def locally_confluent(self) -> bool:
        return all(v.joinable for v in self.verdicts)

    @property
    def failures(self) -> list[PeakVerdict]:
        return [v for v in self.verdicts if v.joinable is False]

    @property
    def exhausted(self) -> list[PeakVerdict]:
        return [v for v in self.verdicts if v.joinable is None]


def local_confluence_check(
    prs: PRS, fuel: int | None = None, strategy: str = LEFTMOST_OUTERMOST
) -> ConfluenceReport:
    verdicts = []
    for peak in critical_pairs(prs):
        try:
            a, _ = normalize_with_trace(prs, peak.context, peak.left, strategy, fuel)
            b, _ = normalize_with_trace(prs, peak.context, peak.right, strategy, fuel)
        except FuelExhausted as e:
            verdicts.append(PeakVerdict(peak, None, error=str(e)))
            continue
        verdicts.append(PeakVerdict(peak, a == b, a, b))
    return ConfluenceReport(tuple(verdicts))

