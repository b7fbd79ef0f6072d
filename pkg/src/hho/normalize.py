"""βδ-normalization, η-long forms and depairing of terms-in-context."""

from __future__ import annotations

from typing import Sequence

from .terms import (
    Arrow,
    Bound,
    Const,
    Context,
    Lam,
    App,
    Pair,
    Prod,
    Proj,
    Signature,
    Term,
    Type,
    UnitTerm,
    Var,
    apply_substitution,
    fresh_name,
    instantiate,
    rebuild,
    shift,
    spine,
    typecheck,
)
from .errors import TypeMismatch

OUTERMOST = "outermost"
INNERMOST = "innermost"


# ---------------------------------------------------------------- βδ


def bd_normal(t: Term, order: str = OUTERMOST) -> Term:
    """βδ-normal form.  ``order`` picks leftmost-outermost or rightmost-innermost redexes."""
    if order == OUTERMOST:
        return _nf_outer(t)
    if order == INNERMOST:
        return _nf_inner(t)
    raise ValueError(f"unknown reduction order {order!r}")


def _whnf(t: Term) -> Term:
    while True:
        match t:
            case App(f, a):
                f = _whnf(f)
                if isinstance(f, Lam):
                    t = instantiate(f.body, a)
                    continue
                return App(f, a)
            case Proj(i, a):
                a = _whnf(a)
                if isinstance(a, Pair):
                    t = a.fst if i == 1 else a.snd
                    continue
                return Proj(i, a)
        return t


def _nf_outer(t: Term) -> Term:
    t = _whnf(t)
    match t:
        case Lam(ty, body, hint):
            return Lam(ty, _nf_outer(body), hint)
        case Pair(a, b):
            return Pair(_nf_outer(a), _nf_outer(b))
    head, elims = spine(t)
    return rebuild(head, [e if isinstance(e, int) else _nf_outer(e) for e in elims])


def _nf_inner(t: Term) -> Term:
    match t:
        case App(f, a):
            a = _nf_inner(a)
            f = _nf_inner(f)
            if isinstance(f, Lam):
                return _nf_inner(instantiate(f.body, a))
            return App(f, a)
        case Proj(i, a):
            a = _nf_inner(a)
            if isinstance(a, Pair):
                return a.fst if i == 1 else a.snd
            return Proj(i, a)
        case Lam(ty, body, hint):
            return Lam(ty, _nf_inner(body), hint)
        case Pair(a, b):
            b = _nf_inner(b)
            return Pair(_nf_inner(a), b)
    return t


def is_bd_normal(t: Term) -> bool:
    match t:
        case App(Lam(), _) | Proj(_, Pair()):
            return False
        case App(a, b) | Pair(a, b):
            return is_bd_normal(a) and is_bd_normal(b)
        case Lam(_, b, _) | Proj(_, b):
            return is_bd_normal(b)
    return True


def beta_delta_normalize(
    signature: Signature, context: Context, term: Term, order: str = OUTERMOST
) -> Term:
    typecheck(signature, context, term)
    return bd_normal(term, order)


# ---------------------------------------------------------------- η-long


def eta_expand_normal(
    signature: Signature, context: Context, t: Term, ty: Type, bound: Sequence[Type] = ()
) -> Term:
    """η-long form of the βδ-normal ``t`` at type ``ty``."""
    env = list(bound)
    return _long(signature, context, t, ty, env)


def _long(sig: Signature, ctx: Context, t: Term, ty: Type, env: list[Type]) -> Term:
    match ty:
        case Arrow(a, b):
            env.append(a)
            try:
                if isinstance(t, Lam):
                    return Lam(a, _long(sig, ctx, t.body, b, env), t.hint)
                return Lam(a, _long(sig, ctx, App(shift(t, 1), Bound(0)), b, env), "x")
            finally:
                env.pop()
        case Prod(a, b):
            if isinstance(t, Pair):
                return Pair(_long(sig, ctx, t.fst, a, env), _long(sig, ctx, t.snd, b, env))
            return Pair(_long(sig, ctx, Proj(1, t), a, env), _long(sig, ctx, Proj(2, t), b, env))
    if isinstance(t, UnitTerm):
        return t
    return _long_neutral(sig, ctx, t, env)


def eta_atom(t: Term, ty: Type) -> Term:
    """η-long form of a neutral term whose own arguments are already η-long."""
    match ty:
        case Arrow(a, b):
            return Lam(a, eta_atom(App(shift(t, 1), eta_atom(Bound(0), a)), b), "x")
        case Prod(a, b):
            return Pair(eta_atom(Proj(1, t), a), eta_atom(Proj(2, t), b))
    return t


def _head_type(sig: Signature, ctx: Context, head: Term, env: list[Type]) -> Type:
    match head:
        case Bound(k):
            return env[len(env) - 1 - k]
        case Var(n):
            return ctx.lookup(n)
        case Const(n):
            return sig.type_of(n)
    raise TypeMismatch(f"term is not βδ-normal: {head!r}")


def _long_neutral(sig: Signature, ctx: Context, t: Term, env: list[Type]) -> Term:
    head, elims = spine(t)
    ty = _head_type(sig, ctx, head, env)
    out = head
    for e in elims:
        if isinstance(e, int):
            if not isinstance(ty, Prod):
                raise TypeMismatch("projection from non-product")
            ty = ty.left if e == 1 else ty.right
            out = Proj(e, out)
        else:
            if not isinstance(ty, Arrow):
                raise TypeMismatch("application of non-function")
            out = App(out, _long(sig, ctx, e, ty.dom, env))
            ty = ty.cod
    return out


def normal_form(
    signature: Signature, context: Context, term: Term, bound: Sequence[Type] = ()
) -> Term:
    """βδη̄-normal form (βδ-normal and η-long)."""
    ty = typecheck(signature, context, term, bound)
    return eta_expand_normal(signature, context, bd_normal(term), ty, bound)


def eta_long_form(signature: Signature, context: Context, term: Term) -> Term:
    return normal_form(signature, context, term)


def is_eta_long(signature: Signature, context: Context, term: Term, bound: Sequence[Type] = ()) -> bool:
    return is_bd_normal(term) and normal_form(signature, context, term, bound) == term


def eta_contract(t: Term) -> Term:
    """Undo η-expansions bottom-up (``λx. f x`` → ``f``, ``⟨pr1 t, pr2 t⟩`` → ``t``)."""
    match t:
        case Lam(ty, body, hint):
            body = eta_contract(body)
            if isinstance(body, App) and body.arg == Bound(0) and not _mentions(body.fun, 0):
                return shift(body.fun, -1)
            return Lam(ty, body, hint)
        case Pair(a, b):
            a, b = eta_contract(a), eta_contract(b)
            if isinstance(a, Proj) and isinstance(b, Proj) and a.index == 1 and b.index == 2 and a.arg == b.arg:
                return a.arg
            return Pair(a, b)
        case App(f, a):
            return App(eta_contract(f), eta_contract(a))
        case Proj(i, a):
            return Proj(i, eta_contract(a))
    return t


def _mentions(t: Term, index: int) -> bool:
    match t:
        case Bound(k):
            return k == index
        case Lam(_, b, _):
            return _mentions(b, index + 1)
        case App(a, b) | Pair(a, b):
            return _mentions(a, index) or _mentions(b, index)
        case Proj(_, a):
            return _mentions(a, index)
    return False


# ---------------------------------------------------------------- depairing


def _leaves(ty: Type) -> list[Type]:
    if isinstance(ty, Prod):
        return _leaves(ty.left) + _leaves(ty.right)
    return [ty]


def _pair_up(ty: Type, names: list[str]) -> Term:
    # Consumes names left to right.
    if isinstance(ty, Prod):
        left = _pair_up(ty.left, names)
        return Pair(left, _pair_up(ty.right, names))
    return Var(names.pop(0))


def depair_context(
    context: Context, avoid: Sequence[str] = ()
) -> tuple[Context, dict[str, Term]]:
    """Split product-typed variables left to right into numbered components.

    Returns the new context and the substitution sending each split variable
    to the nested pair of its components.
    """
    taken = set(context.names) | set(avoid)
    entries: list[tuple[str, Type]] = []
    mapping: dict[str, Term] = {}
    for name, ty in context:
        if not isinstance(ty, Prod):
            entries.append((name, ty))
            continue
        parts = _leaves(ty)
        names = []
        for i, part in enumerate(parts, 1):
            n = fresh_name(f"{name}{i}", taken)
            taken.add(n)
            names.append(n)
            entries.append((n, part))
        mapping[name] = _pair_up(ty, list(names))
    return Context(tuple(entries)), mapping


def depair(signature: Signature, context: Context, term: Term) -> tuple[Context, Term]:
    typecheck(signature, context, term)
    new_ctx, mapping = depair_context(context)
    if not mapping:
        return context, term
    return new_ctx, bd_normal(apply_substitution(term, mapping))
