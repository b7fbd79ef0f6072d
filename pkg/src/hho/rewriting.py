"""Pattern rewriting systems: rules, validation, traced rewriting and replay.

Rewriting works on βδη̄-normal representatives: the term is normalized,
a rule left-hand side is matched at some position (under binders the bound
variables are treated as fixed local names) and the whole result is
normalized again.
"""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

from .errors import FuelExhausted, InvalidPosition, InvalidRule, StepInapplicable
from .normalize import depair_context, normal_form
from .terms import (
    Base,
    Const,
    Context,
    Position,
    Prod,
    Proj,
    Signature,
    Substitution,
    Term,
    Type,
    Unit,
    Var,
    abstract_many,
    apply_substitution,
    binders_at,
    first_occurrence_order,
    fresh_name,
    free_vars,
    head_of,
    iter_positions,
    open_many,
    rename_vars,
    replace_at,
    subterm_at,
    typecheck,
    var_occurrences,
)
from .unify import match_pattern, pattern_violation

FORWARD = "forward"
BACKWARD = "backward"
LEFTMOST_OUTERMOST = "leftmost-outermost"
RIGHTMOST_INNERMOST = "rightmost-innermost"
STRATEGIES = (LEFTMOST_OUTERMOST, RIGHTMOST_INNERMOST)
DEFAULT_FUEL = 10_000


def default_fuel() -> int:
    value = os.environ.get("HHO_FUEL")
    return int(value) if value else DEFAULT_FUEL


# ---------------------------------------------------------------- rules


@dataclass(frozen=True)
class Rule:
    """An oriented equation ``context ⊢ lhs → rhs : type`` with βδη̄-normal sides."""

    name: str
    context: Context
    lhs: Term
    rhs: Term
    type: Type

    @classmethod
    def make(cls, signature: Signature, name: str, context: Context, lhs: Term, rhs: Term) -> Rule:
        lty = typecheck(signature, context, lhs)
        rty = typecheck(signature, context, rhs)
        if lty != rty:
            raise InvalidRule(f"rule {name}: sides have different types")
        return cls(
            name,
            context,
            normal_form(signature, context, lhs),
            normal_form(signature, context, rhs),
            lty,
        )

    def inverse(self) -> Rule:
        return Rule(self.name, self.context, self.rhs, self.lhs, self.type)

    def depaired(self, signature: Signature) -> Rule:
        ctx, mapping = depair_context(self.context, signature.symbols)
        if not mapping:
            return self
        return Rule(
            self.name,
            ctx,
            normal_form(signature, ctx, apply_substitution(self.lhs, mapping)),
            normal_form(signature, ctx, apply_substitution(self.rhs, mapping)),
            self.type,
        )

    def single_variable_form(self, signature: Signature) -> Rule:
        """The same rule over a context of length one (nested pairs, unit if empty)."""
        if len(self.context) == 1:
            return self
        names = self.context.names
        var = fresh_name("_".join(names) or "u", set(names) | set(signature.symbols))
        if not names:
            ctx = Context(((var, Unit()),))
            return Rule(self.name, ctx, self.lhs, self.rhs, self.type)
        types = [ty for _, ty in self.context]
        prod = types[-1]
        for ty in reversed(types[:-1]):
            prod = Prod(ty, prod)
        mapping = {}
        path: Term = Var(var)
        for i, n in enumerate(names):
            mapping[n] = path if i == len(names) - 1 else Proj(1, path)
            path = Proj(2, path)
        ctx = Context(((var, prod),))
        return Rule(
            self.name,
            ctx,
            normal_form(signature, ctx, apply_substitution(self.lhs, mapping)),
            normal_form(signature, ctx, apply_substitution(self.rhs, mapping)),
            self.type,
        )


@dataclass(frozen=True)
class PRS:
    signature: Signature
    rules: tuple[Rule, ...] = ()

    def __post_init__(self):
        names = [r.name for r in self.rules]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise InvalidRule(f"rule name {dup} used twice")

    def __len__(self):
        return len(self.rules)

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def index(self, name: str) -> int:
        for i, r in enumerate(self.rules):
            if r.name == name:
                return i
        raise KeyError(name)

    @cached_property
    def depaired_rules(self) -> tuple[Rule, ...]:
        return tuple(r.depaired(self.signature) for r in self.rules)

    def subsystem(self, names: Sequence[str]) -> PRS:
        return PRS(self.signature, tuple(r for r in self.rules if r.name in set(names)))


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class RuleCheck:
    rule: str
    lhs_is_pattern: bool
    rhs_vars_in_lhs: bool
    same_var_multiset: bool
    base_type: bool
    inverse_of: str | None = None
    notes: tuple[str, ...] = ()

    @property
    def is_prs_rule(self) -> bool:
        """Well-formed as a rule of a pattern rewriting system."""
        return self.lhs_is_pattern and self.rhs_vars_in_lhs and self.base_type

    @property
    def ok(self) -> bool:
        """Also meets the hypotheses of the lower bound."""
        return self.is_prs_rule and self.same_var_multiset and self.inverse_of is None


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[RuleCheck, ...]

    @property
    def is_prs(self) -> bool:
        return all(c.is_prs_rule for c in self.checks)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


def _canonical(sig: Signature, rule: Rule, flip: bool = False):
    r = rule.depaired(sig)
    a, b = (r.rhs, r.lhs) if flip else (r.lhs, r.rhs)
    order = first_occurrence_order(a, b)
    renaming = {n: f"#{i}" for i, n in enumerate(order)}
    types = tuple(r.context.lookup(n) for n in order)
    return types, rename_vars(a, renaming), rename_vars(b, renaming)


def validate_prs(prs: PRS) -> ValidationReport:
    sig = prs.signature
    keys = {r.name: _canonical(sig, r) for r in prs.rules}
    checks = []
    for rule in prs.rules:
        notes = []
        d = rule.depaired(sig)
        why = pattern_violation(sig, rule.context, rule.lhs)
        if why:
            notes.append(f"lhs is not a pattern: {why}")
        lo, ro = var_occurrences(d.lhs), var_occurrences(d.rhs)
        subset = set(ro) <= set(lo)
        if not subset:
            notes.append("rhs free variable(s) " + ", ".join(sorted(set(ro) - set(lo))) + " not in lhs")
        multiset = lo == ro
        if not multiset:
            bad = sorted(n for n in set(lo) | set(ro) if lo[n] != ro[n])
            notes.append(
                "free variable multisets differ: "
                + ", ".join(f"{n} occurs {lo[n]}x left, {ro[n]}x right" for n in bad)
            )
        base = isinstance(rule.type, Base)
        if not base:
            notes.append("equation type is not a base type")
        inv = _canonical(sig, rule, flip=True)
        inverse_of = next((name for name, k in keys.items() if k == inv), None)
        if inverse_of is not None:
            notes.append(f"inverse of rule {inverse_of} is also in the system")
        checks.append(RuleCheck(rule.name, why is None, subset, multiset, base, inverse_of, tuple(notes)))
    return ValidationReport(tuple(checks))


# ---------------------------------------------------------------- steps and traces


@dataclass(frozen=True)
class RewriteStep:
    """One rule application.

    ``bound`` names the binders in scope at ``position`` (outermost first);
    the substitution may mention those names.
    """

    rule: str
    direction: str
    position: Position
    substitution: Substitution | None = None
    bound: tuple[str, ...] = ()


@dataclass(frozen=True)
class Trace:
    context: Context
    source: Term
    steps: tuple[RewriteStep, ...]
    target: Term
    terms: tuple[Term, ...] = field(default=(), compare=False)

    def rule_counts(self) -> Counter:
        return Counter(s.rule for s in self.steps)

    def __len__(self):
        return len(self.steps)


def local_names(signature: Signature, context: Context, term: Term, position: Sequence[int]) -> list[str]:
    """Names used for the binders in scope at ``position``."""
    taken = set(context.names) | set(signature.symbols)
    out = []
    for hint, _ in binders_at(term, position):
        n = fresh_name(hint or "x", taken)
        taken.add(n)
        out.append(n)
    return out


def _sides(rule: Rule, direction: str) -> tuple[Term, Term]:
    return (rule.lhs, rule.rhs) if direction == FORWARD else (rule.rhs, rule.lhs)


def _type_and_head(sig: Signature, ctx: Context, term: Term, pos: Position) -> tuple[Type, Term]:
    sub = subterm_at(term, pos)
    bound = [ty for _, ty in binders_at(term, pos)]
    return typecheck(sig, ctx, sub, bound), head_of(sub)


def rewrite_at(
    prs: PRS,
    context: Context,
    term: Term,
    position: Sequence[int],
    rule: Rule,
    direction: str = FORWARD,
    substitution: Substitution | dict | None = None,
) -> tuple[Term, RewriteStep] | None:
    """Apply ``rule`` at ``position`` of the βδη̄-normal ``term``, or None.

    Without a substitution the source side is matched (it must then be a
    pattern); a partial substitution is completed by matching.
    """
    sig = prs.signature
    pos = tuple(position)
    sub = subterm_at(term, pos)
    binders = binders_at(term, pos)
    names = local_names(sig, context, term, pos)
    local_ctx = context.extend(*((n, ty) for n, (_, ty) in zip(names, binders)))
    opened = open_many(sub, names)
    source, target = _sides(rule, direction)
    given = dict(substitution.items()) if substitution is not None else {}
    unknown = set(given) - set(rule.context.names)
    if unknown:
        return None
    if given:
        if any(typecheck(sig, local_ctx, v) != rule.context.lookup(k) for k, v in given.items()):
            return None
        given = {k: normal_form(sig, local_ctx, v) for k, v in given.items()}
    rest = Context(tuple((n, ty) for n, ty in rule.context if n not in given))
    if set(rest.names) & free_vars(source):
        if given:
            # Rename the unmatched rule variables apart from the target names.
            taken = set(local_ctx.names) | set(given)
            renaming = {}
            for n in rest.names:
                renaming[n] = fresh_name(n, taken)
                taken.add(renaming[n])
            rest = Context(tuple((renaming[n], ty) for n, ty in rest))
            inner = {**given, **{n: Var(m) for n, m in renaming.items()}}
            pattern = normal_form(sig, rest.extend(*local_ctx.entries), apply_substitution(source, inner))
        else:
            renaming, pattern = {}, source
        theta = match_pattern(sig, rest, pattern, opened, local_ctx)
        if theta is None:
            return None
        back = {m: n for n, m in renaming.items()}
        full = {**given, **{back.get(k, k): v for k, v in theta.items()}}
    else:
        full = dict(given)
        if normal_form(sig, local_ctx, apply_substitution(source, full)) != opened:
            return None
    missing = free_vars(target) - set(full)
    if missing:
        return None
    new = normal_form(sig, local_ctx, apply_substitution(target, full))
    result = normal_form(sig, context, replace_at(term, pos, abstract_many(new, names)))
    ordered = {n: full[n] for n in rule.context.names if n in full}
    step = RewriteStep(rule.name, direction, pos, Substitution(ordered, local_ctx), tuple(names))
    return result, step


def _positions(term: Term, strategy: str) -> list[Position]:
    order = [p for p, _ in iter_positions(term)]
    if strategy == LEFTMOST_OUTERMOST:
        return order
    if strategy == RIGHTMOST_INNERMOST:
        return order[::-1]
    raise ValueError(f"unknown strategy {strategy!r}")


def redexes(prs: PRS, context: Context, term: Term, strategy: str = LEFTMOST_OUTERMOST) -> Iterator[tuple[Term, RewriteStep]]:
    """Every one-step rewrite of the βδη̄-normal ``term``, in strategy order."""
    sig = prs.signature
    for pos in _positions(term, strategy):
        ty, head = _type_and_head(sig, context, term, pos)
        if not isinstance(ty, (Base, Unit)):
            continue
        for rule in prs.rules:
            if rule.type != ty:
                continue
            lhead = head_of(rule.lhs)
            if isinstance(lhead, Const) and lhead != head:
                continue
            r = rewrite_at(prs, context, term, pos, rule)
            if r is not None:
                yield r


def rewrite_once(
    prs: PRS, context: Context, term: Term, strategy: str = LEFTMOST_OUTERMOST
) -> tuple[Term, RewriteStep] | None:
    t = normal_form(prs.signature, context, term)
    return next(redexes(prs, context, t, strategy), None)


def normalize_with_trace(
    prs: PRS,
    context: Context,
    term: Term,
    strategy: str = LEFTMOST_OUTERMOST,
    fuel: int | None = None,
) -> tuple[Term, Trace]:
    fuel = default_fuel() if fuel is None else fuel
    t = normal_form(prs.signature, context, term)
    source = t
    steps: list[RewriteStep] = []
    terms = [t]
    while True:
        r = rewrite_once(prs, context, t, strategy)
        if r is None:
            return t, Trace(context, source, tuple(steps), t, tuple(terms))
        if len(steps) >= fuel:
            partial = Trace(context, source, tuple(steps), t, tuple(terms))
            raise FuelExhausted(f"no normal form within {fuel} steps", partial)
        t, step = r
        steps.append(step)
        terms.append(t)


def joinable(
    prs: PRS,
    context: Context,
    t1: Term,
    t2: Term,
    fuel: int | None = None,
    strategy: str = LEFTMOST_OUTERMOST,
) -> bool:
    n1, _ = normalize_with_trace(prs, context, t1, strategy, fuel)
    n2, _ = normalize_with_trace(prs, context, t2, strategy, fuel)
    return n1 == n2


def perform_step(
    prs: PRS, context: Context, term: Term, step: RewriteStep, index: int = 0
) -> tuple[Term, RewriteStep]:
    """Apply ``step``; the returned step carries the full substitution used."""
    try:
        rule = prs.rule(step.rule)
    except KeyError:
        raise StepInapplicable(f"unknown rule {step.rule}", index) from None
    t = normal_form(prs.signature, context, term)
    try:
        subterm_at(t, step.position)
    except InvalidPosition:
        raise StepInapplicable(f"position {list(step.position)} does not exist", index) from None
    r = rewrite_at(prs, context, t, step.position, rule, step.direction, step.substitution)
    if r is None:
        raise StepInapplicable(f"{step.direction} {step.rule} does not apply at {list(step.position)}", index)
    return r


def apply_step(prs: PRS, context: Context, term: Term, step: RewriteStep, index: int = 0) -> Term:
    return perform_step(prs, context, term, step, index)[0]


def replay_derivation(prs: PRS, context: Context, term: Term, steps: Sequence[RewriteStep]) -> Term:
    """Apply ``steps`` in order; backward steps use the rule right to left."""
    t = normal_form(prs.signature, context, term)
    for k, step in enumerate(steps):
        t = apply_step(prs, context, t, step, k)
    return t


def replay_trace(prs: PRS, context: Context, term: Term, steps: Sequence[RewriteStep]) -> Trace:
    t = normal_form(prs.signature, context, term)
    source, done, terms = t, [], [t]
    for k, step in enumerate(steps):
        t, full = perform_step(prs, context, t, step, k)
        done.append(full)
        terms.append(t)
    return Trace(context, source, tuple(done), t, tuple(terms))
