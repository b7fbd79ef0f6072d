"""Types, terms, contexts, positions and substitutions.

Terms are locally nameless: variables bound by ``Lam`` are de Bruijn indices
(``Bound``), free variables (``Var``) and signature symbols (``Const``) keep
their names.  The binder name stored on ``Lam`` is a printing hint excluded
from equality, so alpha-equivalent terms compare equal with ``==``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    DuplicateContextVariable,
    EscapedBoundVariable,
    InvalidPosition,
    InvalidSignature,
    TypeMismatch,
    UnboundIdentifier,
)

Position = tuple[int, ...]


# ---------------------------------------------------------------- types


class Type:
    __slots__ = ()


@dataclass(frozen=True)
class Unit(Type):
    pass


@dataclass(frozen=True)
class Base(Type):
    name: str


@dataclass(frozen=True)
class Prod(Type):
    left: Type
    right: Type


@dataclass(frozen=True)
class Arrow(Type):
    dom: Type
    cod: Type


def arrows(args: Sequence[Type], result: Type) -> Type:
    for a in reversed(args):
        result = Arrow(a, result)
    return result


def split_arrows(ty: Type) -> tuple[list[Type], Type]:
    args = []
    while isinstance(ty, Arrow):
        args.append(ty.dom)
        ty = ty.cod
    return args, ty


def base_sorts(ty: Type) -> set[str]:
    match ty:
        case Base(name):
            return {name}
        case Prod(l, r) | Arrow(l, r):
            return base_sorts(l) | base_sorts(r)
    return set()


def is_base(ty: Type) -> bool:
    return isinstance(ty, Base)


# ---------------------------------------------------------------- terms


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Const(Term):
    name: str


@dataclass(frozen=True)
class Bound(Term):
    index: int


@dataclass(frozen=True)
class UnitTerm(Term):
    pass


@dataclass(frozen=True)
class Lam(Term):
    ty: Type
    body: Term
    hint: str = field(default="x", compare=False)


@dataclass(frozen=True)
class App(Term):
    fun: Term
    arg: Term


@dataclass(frozen=True)
class Pair(Term):
    fst: Term
    snd: Term


@dataclass(frozen=True)
class Proj(Term):
    index: int
    arg: Term

    def __post_init__(self):
        if self.index not in (1, 2):
            raise ValueError(f"projection index must be 1 or 2, got {self.index}")


UNIT = UnitTerm()

# An elimination is either an argument (Term) or a projection index (int).
Elim = Term | int


def apps(head: Term, *args: Term) -> Term:
    for a in args:
        head = App(head, a)
    return head


def lams(binders: Sequence[tuple[str, Type]], body: Term) -> Term:
    """Wrap ``body`` (already using de Bruijn indices) in lambdas, outermost first."""
    for hint, ty in reversed(binders):
        body = Lam(ty, body, hint)
    return body


def spine(t: Term) -> tuple[Term, list[Elim]]:
    """Split a term into its head and eliminations, innermost first."""
    elims: list[Elim] = []
    while True:
        if isinstance(t, App):
            elims.append(t.arg)
            t = t.fun
        elif isinstance(t, Proj):
            elims.append(t.index)
            t = t.arg
        else:
            elims.reverse()
            return t, elims


def rebuild(head: Term, elims: Iterable[Elim]) -> Term:
    for e in elims:
        head = Proj(e, head) if isinstance(e, int) else App(head, e)
    return head


def head_of(t: Term) -> Term:
    """Head in the sense of ``λx1..xm. t0 t1 .. tk``: strip binders, then the spine."""
    while isinstance(t, Lam):
        t = t.body
    return spine(t)[0]


# ---------------------------------------------------------------- de Bruijn plumbing


def shift(t: Term, by: int, cutoff: int = 0) -> Term:
    if by == 0:
        return t
    match t:
        case Bound(k):
            return Bound(k + by) if k >= cutoff else t
        case Lam(ty, body, hint):
            return Lam(ty, shift(body, by, cutoff + 1), hint)
        case App(f, a):
            return App(shift(f, by, cutoff), shift(a, by, cutoff))
        case Pair(a, b):
            return Pair(shift(a, by, cutoff), shift(b, by, cutoff))
        case Proj(i, a):
            return Proj(i, shift(a, by, cutoff))
    return t


def instantiate(body: Term, value: Term, depth: int = 0) -> Term:
    """Substitute ``value`` for the loose index ``depth`` of ``body`` and drop that binder."""
    match body:
        case Bound(k):
            if k == depth:
                return shift(value, depth)
            return Bound(k - 1) if k > depth else body
        case Lam(ty, b, hint):
            return Lam(ty, instantiate(b, value, depth + 1), hint)
        case App(f, a):
            return App(instantiate(f, value, depth), instantiate(a, value, depth))
        case Pair(a, b):
            return Pair(instantiate(a, value, depth), instantiate(b, value, depth))
        case Proj(i, a):
            return Proj(i, instantiate(a, value, depth))
    return body


def open_binder(body: Term, name: str) -> Term:
    return instantiate(body, Var(name))


def abstract(t: Term, name: str, depth: int = 0) -> Term:
    """Inverse of :func:`open_binder`: turn ``Var(name)`` into a fresh loose index 0."""
    match t:
        case Var(n):
            return Bound(depth) if n == name else t
        case Bound(k):
            return Bound(k + 1) if k >= depth else t
        case Lam(ty, b, hint):
            return Lam(ty, abstract(b, name, depth + 1), hint)
        case App(f, a):
            return App(abstract(f, name, depth), abstract(a, name, depth))
        case Pair(a, b):
            return Pair(abstract(a, name, depth), abstract(b, name, depth))
        case Proj(i, a):
            return Proj(i, abstract(a, name, depth))
    return t


def abstract_many(t: Term, names: Sequence[str]) -> Term:
    """Close over ``names`` listed outermost first; the last name becomes index 0."""
    # Each abstraction shifts the earlier ones up, so go outermost first.
    for n in names:
        t = abstract(t, n)
    return t


def open_many(t: Term, names: Sequence[str]) -> Term:
    """Replace loose indices by ``names`` (outermost first), assuming ``len(names)`` binders."""
    k = len(names)
    return _open_loose(t, names, 0) if k else t


def _open_loose(t: Term, names: Sequence[str], depth: int) -> Term:
    match t:
        case Bound(k):
            if k >= depth:
                j = k - depth
                if j >= len(names):
                    raise EscapedBoundVariable(f"loose index {k} escapes its scope")
                return Var(names[len(names) - 1 - j])
            return t
        case Lam(ty, b, hint):
            return Lam(ty, _open_loose(b, names, depth + 1), hint)
        case App(f, a):
            return App(_open_loose(f, names, depth), _open_loose(a, names, depth))
        case Pair(a, b):
            return Pair(_open_loose(a, names, depth), _open_loose(b, names, depth))
        case Proj(i, a):
            return Proj(i, _open_loose(a, names, depth))
    return t


def max_loose(t: Term, depth: int = 0) -> int:
    """One more than the largest loose index, 0 when the term is locally closed."""
    match t:
        case Bound(k):
            return k - depth + 1 if k >= depth else 0
        case Lam(_, b, _):
            return max_loose(b, depth + 1)
        case App(a, b) | Pair(a, b):
            return max(max_loose(a, depth), max_loose(b, depth))
        case Proj(_, a):
            return max_loose(a, depth)
    return 0


def free_vars(t: Term) -> set[str]:
    return set(var_occurrences(t))


def var_occurrences(t: Term) -> Counter:
    """Multiset of free-variable occurrences."""
    out: Counter = Counter()
    stack = [t]
    while stack:
        s = stack.pop()
        match s:
            case Var(n):
                out[n] += 1
            case Lam(_, b, _):
                stack.append(b)
            case App(a, b) | Pair(a, b):
                stack.append(b)
                stack.append(a)
            case Proj(_, a):
                stack.append(a)
    return out


def first_occurrence_order(*terms: Term) -> list[str]:
    """Free variable names in left-to-right order of first occurrence."""
    seen: dict[str, None] = {}

    def walk(s: Term):
        match s:
            case Var(n):
                seen.setdefault(n, None)
            case Lam(_, b, _):
                walk(b)
            case App(a, b) | Pair(a, b):
                walk(a)
                walk(b)
            case Proj(_, a):
                walk(a)

    for t in terms:
        walk(t)
    return list(seen)


def constants(t: Term) -> set[str]:
    match t:
        case Const(n):
            return {n}
        case Lam(_, b, _):
            return constants(b)
        case App(a, b) | Pair(a, b):
            return constants(a) | constants(b)
        case Proj(_, a):
            return constants(a)
    return set()


def rename_vars(t: Term, renaming: Mapping[str, str]) -> Term:
    if not renaming:
        return t
    return apply_substitution(t, {k: Var(v) for k, v in renaming.items()})


def alpha_equal(t1: Term, t2: Term) -> bool:
    # Binder hints do not take part in equality, so this is structural.
    return t1 == t2


# ---------------------------------------------------------------- signatures and contexts


@dataclass(frozen=True)
class Signature:
    sorts: tuple[str, ...] = ()
    symbols: Mapping[str, Type] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.sorts)) != len(self.sorts):
            raise InvalidSignature("sort declared twice")
        known = set(self.sorts)
        for name, ty in self.symbols.items():
            missing = base_sorts(ty) - known
            if missing:
                raise InvalidSignature(
                    f"symbol {name} uses undeclared sort(s) {', '.join(sorted(missing))}"
                )

    def type_of(self, name: str) -> Type:
        try:
            return self.symbols[name]
        except KeyError:
            raise UnboundIdentifier(f"unknown symbol {name}") from None


@dataclass(frozen=True)
class Context:
    """Ordered typing context; declaration order is significant for output."""

    entries: tuple[tuple[str, Type], ...] = ()

    def __post_init__(self):
        names = [n for n, _ in self.entries]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise DuplicateContextVariable(f"variable {dup} occurs twice in context")

    @classmethod
    def of(cls, *entries: tuple[str, Type]) -> Context:
        return cls(tuple(entries))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _ in self.entries)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    def lookup(self, name: str) -> Type:
        for n, ty in self.entries:
            if n == name:
                return ty
        raise UnboundIdentifier(f"unbound variable {name}")

    def get(self, name: str) -> Type | None:
        for n, ty in self.entries:
            if n == name:
                return ty
        return None

    def extend(self, *entries: tuple[str, Type]) -> Context:
        return Context(self.entries + tuple(entries))

    def as_dict(self) -> dict[str, Type]:
        return dict(self.entries)


EMPTY_SIGNATURE = Signature()
EMPTY_CONTEXT = Context()


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    """``base`` itself if unused, else ``base'``, ``base''``, ..."""
    avoid = set(avoid)
    name = base
    while name in avoid:
        name += "'"
    return name


# ---------------------------------------------------------------- typing


def typecheck(
    signature: Signature, context: Context, term: Term, bound: Sequence[Type] = ()
) -> Type:
    """Return the type of ``term``; ``bound`` lists enclosing binder types, outermost first."""
    env = list(bound)
    return _infer(signature, context, term, env)


def _infer(sig: Signature, ctx: Context, t: Term, env: list[Type]) -> Type:
    match t:
        case Var(n):
            ty = ctx.get(n)
            if ty is None:
                raise UnboundIdentifier(f"unbound variable {n}")
            return ty
        case Const(n):
            return sig.type_of(n)
        case Bound(k):
            if k >= len(env):
                raise EscapedBoundVariable(f"loose bound index {k}")
            return env[len(env) - 1 - k]
        case UnitTerm():
            return Unit()
        case Lam(ty, body, _):
            env.append(ty)
            try:
                return Arrow(ty, _infer(sig, ctx, body, env))
            finally:
                env.pop()
        case App(f, a):
            fty = _infer(sig, ctx, f, env)
            if not isinstance(fty, Arrow):
                raise TypeMismatch(f"applying a term of non-function type {fty}")
            aty = _infer(sig, ctx, a, env)
            if aty != fty.dom:
                raise TypeMismatch(f"argument has type {aty}, expected {fty.dom}")
            return fty.cod
        case Pair(a, b):
            return Prod(_infer(sig, ctx, a, env), _infer(sig, ctx, b, env))
        case Proj(i, a):
            aty = _infer(sig, ctx, a, env)
            if not isinstance(aty, Prod):
                raise TypeMismatch(f"projection from non-product type {aty}")
            return aty.left if i == 1 else aty.right
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------- positions


def children(t: Term) -> list[tuple[int, Term, Type | None]]:
    """Immediate subterms as ``(index, subterm, type bound on the way down or None)``."""
    match t:
        case App(f, a):
            return [(1, f, None), (2, a, None)]
        case Lam(ty, b, _):
            return [(1, b, ty)]
        case Pair(a, b):
            return [(1, a, None), (2, b, None)]
        case Proj(_, a):
            return [(1, a, None)]
    return []


def _child(t: Term, i: int) -> Term:
    for j, s, _ in children(t):
        if j == i:
            return s
    raise InvalidPosition(f"no subterm {i} below {type(t).__name__}")


def subterm_at(term: Term, position: Sequence[int]) -> Term:
    """The subterm at ``position``; loose indices refer to binders above it."""
    t = term
    for i in position:
        t = _child(t, i)
    return t


def binders_at(term: Term, position: Sequence[int]) -> list[tuple[str, Type]]:
    """Binders (hint, type) in scope at ``position``, outermost first."""
    out = []
    t = term
    for i in position:
        if isinstance(t, Lam):
            if i != 1:
                raise InvalidPosition(f"no subterm {i} below Lam")
            out.append((t.hint, t.ty))
        t = _child(t, i)
    return out


def replace_at(
    term: Term,
    position: Sequence[int],
    replacement: Term,
    signature: Signature | None = None,
    context: Context | None = None,
) -> Term:
    """``term[replacement]_position``.  With a signature and context the types are checked."""
    scope = binders_at(term, position)
    if max_loose(replacement) > len(scope):
        raise EscapedBoundVariable("replacement mentions a variable not in scope at the position")
    if signature is not None and context is not None:
        bound = [ty for _, ty in scope]
        old = typecheck(signature, context, subterm_at(term, position), bound)
        new = typecheck(signature, context, replacement, bound)
        if old != new:
            raise TypeMismatch(f"replacement has type {new}, position has type {old}")
    return _replace(term, tuple(position), replacement)


def _replace(t: Term, pos: Position, u: Term) -> Term:
    if not pos:
        return u
    i, rest = pos[0], pos[1:]
    match t:
        case App(f, a) if i in (1, 2):
            return App(_replace(f, rest, u), a) if i == 1 else App(f, _replace(a, rest, u))
        case Lam(ty, b, hint) if i == 1:
            return Lam(ty, _replace(b, rest, u), hint)
        case Pair(a, b) if i in (1, 2):
            return Pair(_replace(a, rest, u), b) if i == 1 else Pair(a, _replace(b, rest, u))
        case Proj(k, a) if i == 1:
            return Proj(k, _replace(a, rest, u))
    raise InvalidPosition(f"no subterm {i} below {type(t).__name__}")


def iter_positions(term: Term) -> Iterator[tuple[Position, Term]]:
    """All positions in preorder, children left to right."""
    stack: list[tuple[Position, Term]] = [((), term)]
    while stack:
        pos, t = stack.pop()
        yield pos, t
        for i, s, _ in reversed(children(t)):
            stack.append((pos + (i,), s))


def is_valid_position(term: Term, position: Sequence[int]) -> bool:
    try:
        subterm_at(term, position)
    except InvalidPosition:
        return False
    return True


def is_below(p1: Sequence[int], p2: Sequence[int]) -> bool:
    """``p1 ≻ p2``: ``p2`` is a proper prefix of ``p1``."""
    return len(p2) < len(p1) and tuple(p1[: len(p2)]) == tuple(p2)


def disjoint(p1: Sequence[int], p2: Sequence[int]) -> bool:
    return tuple(p1) != tuple(p2) and not is_below(p1, p2) and not is_below(p2, p1)


# ---------------------------------------------------------------- substitutions


@dataclass(frozen=True)
class Substitution:
    """Map from variable names to locally closed terms over ``target``.

    Variables outside the mapping are sent to themselves.
    """

    mapping: Mapping[str, Term] = field(default_factory=dict)
    target: Context | None = field(default=None, compare=False)

    def __getitem__(self, name: str) -> Term:
        return self.mapping.get(name, Var(name))

    def __contains__(self, name: str) -> bool:
        return name in self.mapping

    def __len__(self):
        return len(self.mapping)

    def items(self):
        return self.mapping.items()

    def keys(self):
        return self.mapping.keys()

    def is_identity(self) -> bool:
        return all(v == Var(k) for k, v in self.mapping.items())

    def restrict(self, names: Iterable[str]) -> Substitution:
        names = set(names)
        return Substitution({k: v for k, v in self.mapping.items() if k in names}, self.target)


def _as_mapping(subst: Substitution | Mapping[str, Term]) -> Mapping[str, Term]:
    return subst.mapping if isinstance(subst, Substitution) else subst


def apply_substitution(term: Term, subst: Substitution | Mapping[str, Term]) -> Term:
    """Replace free variables simultaneously.

    Images are locally closed, so no capture can happen under binders.
    The result is not normalized.
    """
    m = _as_mapping(subst)
    if not m:
        return term

    def go(t: Term) -> Term:
        match t:
            case Var(n):
                return m.get(n, t)
            case Lam(ty, b, hint):
                return Lam(ty, go(b), hint)
            case App(f, a):
                return App(go(f), go(a))
            case Pair(a, b):
                return Pair(go(a), go(b))
            case Proj(i, a):
                return Proj(i, go(a))
        return t

    return go(term)


def compose(
    second: Substitution | Mapping[str, Term], first: Substitution | Mapping[str, Term]
) -> Substitution:
    """``second ∘ first``: apply ``first`` then ``second``."""
    m1, m2 = _as_mapping(first), _as_mapping(second)
    out = {k: apply_substitution(v, m2) for k, v in m1.items()}
    for k, v in m2.items():
        out.setdefault(k, v)
    target = second.target if isinstance(second, Substitution) else None
    return Substitution(out, target)
