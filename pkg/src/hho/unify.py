"""Higher-order pattern recognition, unification and matching.

The unifier is the classic pattern algorithm (flex-flex, flex-rigid with
pruning, rigid-rigid decomposition) run on η-long βδ-normal terms.  Product
types are removed from free variables first: a variable of type
``A -> B * C`` or ``A * B -> C`` is replaced by components of flat types
``A1 -> .. -> An -> B`` (each ``Ai`` non-product, ``B`` base or unit), and
the answer is paired back up at the end.  Bound variables of product type
are handled by treating projection chains ``pr_i (.. (pr_j y))`` as atoms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .errors import NotAPattern, TypeMismatch
from .normalize import bd_normal, eta_atom, eta_contract, normal_form
from .terms import (
    EMPTY_CONTEXT,
    App,
    Arrow,
    Bound,
    Const,
    Context,
    Lam,
    Pair,
    Prod,
    Proj,
    Signature,
    Substitution,
    Term,
    Type,
    UnitTerm,
    Var,
    apply_substitution,
    arrows,
    first_occurrence_order,
    fresh_name,
    free_vars,
    open_binder,
    rebuild,
    rename_vars,
    shift,
    split_arrows,
    spine,
    typecheck,
)


@dataclass(frozen=True)
class UnificationProblem:
    """Two terms of the same type over a shared context of unification variables."""

    context: Context
    lhs: Term
    rhs: Term


class _Fail(Exception):
    pass


# ---------------------------------------------------------------- flattening product types


def flatten_type(ty: Type) -> tuple[list[Type], Callable[[list[Term]], Term]]:
    """Decompose ``ty`` into product-free components and a raw builder back to ``ty``."""
    match ty:
        case Prod(a, b):
            fa, ba = flatten_type(a)
            fb, bb = flatten_type(b)
            n = len(fa)
            return fa + fb, lambda cs: Pair(ba(cs[:n]), bb(cs[n:]))
        case Arrow(Prod(a1, a2), b):
            fc, bc = flatten_type(Arrow(a1, Arrow(a2, b)))
            return fc, lambda cs: Lam(
                Prod(a1, a2), App(App(shift(bc(cs), 1), Proj(1, Bound(0))), Proj(2, Bound(0))), "p"
            )
        case Arrow(a, b):
            fb, bb = flatten_type(b)
            comps = [Arrow(a, c) for c in fb]
            return comps, lambda cs: Lam(a, bb([App(shift(c, 1), Bound(0)) for c in cs]), "z")
    return [ty], lambda cs: cs[0]


def flat_components(ty: Type, t: Term) -> list[Term]:
    """The product-free components of ``t : ty``, in ``flatten_type`` order."""
    match ty:
        case Prod(a, b):
            return flat_components(a, Proj(1, t)) + flat_components(b, Proj(2, t))
        case Arrow(Prod(a1, a2), b):
            curried = Lam(a1, Lam(a2, App(shift(t, 2), Pair(Bound(1), Bound(0))), "q"), "p")
            return flat_components(Arrow(a1, Arrow(a2, b)), curried)
        case Arrow(a, b):
            return [Lam(a, c, "z") for c in flat_components(b, App(shift(t, 1), Bound(0)))]
    return [t]


def is_flat(ty: Type) -> bool:
    comps, _ = flatten_type(ty)
    return len(comps) == 1 and comps[0] == ty


# ---------------------------------------------------------------- the solver


class _Solver:
    def __init__(self, sig: Signature, rigid: dict[str, Type], metas: dict[str, Type], taken: Iterable[str]):
        self.sig = sig
        self.types: dict[str, Type] = {**rigid, **metas}
        self.metas: set[str] = set(metas)
        self.locals: set[str] = set()
        self.theta: dict[str, Term] = {}
        self.taken: set[str] = set(taken) | set(self.types)
        self.counter = 0

    # -- names

    def fresh(self, base: str) -> str:
        base = base.split("#")[0] or "x"
        while True:
            self.counter += 1
            name = f"{base}#{self.counter}"
            if name not in self.taken:
                self.taken.add(name)
                return name

    def new_meta(self, base: str, ty: Type) -> str:
        name = self.fresh(base)
        self.types[name] = ty
        self.metas.add(name)
        return name

    def new_local(self, base: str, ty: Type) -> str:
        name = self.fresh(base)
        self.types[name] = ty
        self.locals.add(name)
        return name

    # -- substitution state

    def resolve(self, t: Term) -> Term:
        if not self.theta or not (free_vars(t) & self.theta.keys()):
            return t
        return bd_normal(apply_substitution(t, self.theta))

    def bind(self, name: str, value: Term):
        single = {name: value}
        self.theta = {k: bd_normal(apply_substitution(v, single)) for k, v in self.theta.items()}
        self.theta[name] = value

    # -- atoms

    def atom(self, arg: Term, depth: int = 0) -> Term | None:
        """The bound-variable chain ``arg`` is η-equivalent to, if any."""
        c = eta_contract(arg)
        base = c
        while isinstance(base, Proj):
            base = base.arg
        if isinstance(base, Var) and base.name in self.locals:
            return c
        if isinstance(base, Bound) and base.index < depth:
            return c
        return None

    def atom_type(self, atom: Term) -> Type:
        path = []
        while isinstance(atom, Proj):
            path.append(atom.index)
            atom = atom.arg
        ty = self.types[atom.name]
        for i in reversed(path):
            ty = ty.left if i == 1 else ty.right
        return ty

    def flex_atoms(self, elims) -> list[Term]:
        atoms = []
        for e in elims:
            a = None if isinstance(e, int) else self.atom(e)
            if a is None or a in atoms:
                raise NotAPattern("unification variable applied to something other than distinct bound variables")
            atoms.append(a)
        return atoms

    # -- main loop

    def solve(self, s: Term, t: Term, ty: Type):
        work = [(s, t, ty)]
        while work:
            s, t, ty = work.pop()
            s, t = self.resolve(s), self.resolve(t)
            if s == t:
                continue
            match ty:
                case Arrow(a, b):
                    s, t = _as_lam(s, a), _as_lam(t, a)
                    x = self.new_local(s.hint, a)
                    work.append((open_binder(s.body, x), open_binder(t.body, x), b))
                    continue
                case Prod(a, b):
                    s, t = _as_pair(s), _as_pair(t)
                    work.append((s.snd, t.snd, b))
                    work.append((s.fst, t.fst, a))
                    continue
            hs, es = spine(s)
            ht, et = spine(t)
            flex_s = isinstance(hs, Var) and hs.name in self.metas
            flex_t = isinstance(ht, Var) and ht.name in self.metas
            if flex_s and flex_t:
                self.flex_flex(hs.name, es, ht.name, et, ty)
            elif flex_s:
                self.flex_rigid(hs.name, es, t, ty)
            elif flex_t:
                self.flex_rigid(ht.name, et, s, ty)
            else:
                work.extend(reversed(self.decompose(hs, es, ht, et)))

    def decompose(self, hs, es, ht, et):
        if hs != ht or len(es) != len(et):
            raise _Fail
        match hs:
            case Var(n):
                hty = self.types[n]
            case Const(n):
                hty = self.sig.type_of(n)
            case UnitTerm():
                return []
            case _:
                raise _Fail
        out = []
        for e1, e2 in zip(es, et):
            if isinstance(e1, int) or isinstance(e2, int):
                if e1 != e2 or not isinstance(hty, Prod):
                    raise _Fail
                hty = hty.left if e1 == 1 else hty.right
            else:
                if not isinstance(hty, Arrow):
                    raise TypeMismatch("application of non-function in unification")
                out.append((e1, e2, hty.dom))
                hty = hty.cod
        return out

    def flex_flex(self, f: str, fs, g: str, gs, ty: Type):
        fa = self.flex_atoms(fs)
        ga = self.flex_atoms(gs)
        if f == g:
            keep = [i for i, (x, y) in enumerate(zip(fa, ga)) if x == y]
            if len(keep) == len(fa):
                return
            h = self.new_meta(f, arrows([self.atom_type(fa[i]) for i in keep], ty))
            self.bind(f, self._projector(fa, keep, h))
            return
        common = [a for a in fa if a in ga]
        h = self.new_meta(f, arrows([self.atom_type(a) for a in common], ty))
        self.bind(f, self._projector(fa, [fa.index(a) for a in common], h))
        self.bind(g, self._projector(ga, [ga.index(a) for a in common], h))

    def _projector(self, atoms: list[Term], keep: list[int], h: str) -> Term:
        """``λz1..zn. h z_keep`` in η-long form."""
        n = len(atoms)
        tys = [self.atom_type(a) for a in atoms]
        body = rebuild(Var(h), [eta_atom(Bound(n - 1 - i), tys[i]) for i in keep])
        for ty in reversed(tys):
            body = Lam(ty, body, "z")
        return body

    def flex_rigid(self, f: str, fs, t: Term, ty: Type):
        atoms = self.flex_atoms(fs)
        if f in free_vars(t):
            raise _Fail
        while self._prune(t, 0, atoms):
            t = self.resolve(t)
        n = len(atoms)
        index = {a: i for i, a in enumerate(atoms)}
        body = self._abstract(t, 0, index, n)
        for a in reversed(atoms):
            body = Lam(self.atom_type(a), body, "z")
        self.bind(f, body)

    def _prune(self, t: Term, d: int, atoms: list[Term]) -> bool:
        """Restrict unification variables in ``t`` to permitted arguments; True if anything changed."""
        match t:
            case Lam(_, b, _):
                return self._prune(b, d + 1, atoms)
            case Pair(a, b):
                return self._prune(a, d, atoms) or self._prune(b, d, atoms)
        head, elims = spine(t)
        if isinstance(head, Var) and head.name in self.metas:
            keep = []
            args = []
            for i, e in enumerate(elims):
                a = None if isinstance(e, int) else self.atom(e, d)
                if a is None:
                    raise NotAPattern("unification variable applied to a non-variable")
                args.append(a)
                base = a
                while isinstance(base, Proj):
                    base = base.arg
                if isinstance(base, Bound) or a in atoms:
                    keep.append(i)
            if len(keep) == len(elims):
                return False
            doms, cod = split_arrows(self.types[head.name])
            h = self.new_meta(head.name, arrows([doms[i] for i in keep], cod))
            n = len(elims)
            body = rebuild(Var(h), [eta_atom(Bound(n - 1 - i), doms[i]) for i in keep])
            for dty in reversed(doms):
                body = Lam(dty, body, "z")
            self.bind(head.name, body)
            return True
        return any(self._prune(e, d, atoms) for e in elims if not isinstance(e, int))

    def _abstract(self, t: Term, d: int, index: dict[Term, int], n: int) -> Term:
        match t:
            case Lam(ty, b, hint):
                return Lam(ty, self._abstract(b, d + 1, index, n), hint)
            case Pair(a, b):
                return Pair(self._abstract(a, d, index, n), self._abstract(b, d, index, n))
        head, elims = spine(t)
        start = 0
        if isinstance(head, Var) and head.name in self.locals:
            lead = 0
            while lead < len(elims) and isinstance(elims[lead], int):
                lead += 1
            for k in range(lead, -1, -1):
                chain = rebuild(head, elims[:k])
                if chain in index:
                    head = Bound(d + n - 1 - index[chain])
                    start = k
                    break
            else:
                raise _Fail
        elif isinstance(head, Bound):
            head = Bound(head.index + n) if head.index >= d else head
        rest = [e if isinstance(e, int) else self._abstract(e, d, index, n) for e in elims[start:]]
        return rebuild(head, rest)


def _as_lam(t: Term, a: Type) -> Lam:
    if isinstance(t, Lam):
        return t
    return Lam(a, bd_normal(App(t, eta_atom(Bound(0), a))), "x")


def _as_pair(t: Term) -> Pair:
    if isinstance(t, Pair):
        return t
    return Pair(Proj(1, t), Proj(2, t))


# ---------------------------------------------------------------- pattern check


def _pattern_violation(t: Term, metas: set[str], locals_: set[str], d: int = 0) -> str | None:
    match t:
        case Lam(_, b, _):
            return _pattern_violation(b, metas, locals_, d + 1)
        case Pair(a, b):
            return _pattern_violation(a, metas, locals_, d) or _pattern_violation(b, metas, locals_, d)
    head, elims = spine(t)
    if isinstance(head, Var) and head.name in metas:
        seen = []
        for e in elims:
            if isinstance(e, int):
                return f"projection applied to free variable {head.name}"
            c = eta_contract(e)
            base = c
            while isinstance(base, Proj):
                base = base.arg
            ok = (isinstance(base, Bound) and base.index < d) or (
                isinstance(base, Var) and base.name in locals_
            )
            if not ok:
                return f"free variable {head.name} applied to a term that is not a bound variable"
            if c in seen:
                return f"free variable {head.name} applied to a repeated bound variable"
            seen.append(c)
        return None
    for e in elims:
        if not isinstance(e, int):
            v = _pattern_violation(e, metas, locals_, d)
            if v:
                return v
    return None


def _flatten_metas(
    sig: Signature, metas: Context, taken: set[str]
) -> tuple[dict[str, Type], dict[str, Term]]:
    """Flat replacement variables and the substitution into them (η-long)."""
    flat: dict[str, Type] = {}
    builders: dict[str, Term] = {}
    for name, ty in metas:
        comps, build = flatten_type(ty)
        if len(comps) == 1 and comps[0] == ty:
            flat[name] = ty
            continue
        names = []
        for i, c in enumerate(comps, 1):
            n = fresh_name(f"{name}{i}", taken)
            taken.add(n)
            names.append(n)
            flat[n] = c
        raw = build([Var(n) for n in names])
        ctx = Context(tuple(flat.items()))
        builders[name] = normal_form(sig, ctx, raw)
    return flat, builders


def pattern_violation(signature: Signature, context: Context, term: Term, bound=()) -> str | None:
    """Reason why ``term`` is not a pattern over ``context``, or None."""
    ctx = context
    t = normal_form(signature, ctx, term, bound)
    flat, builders = _flatten_metas(signature, ctx, set(ctx.names) | set(signature.symbols))
    if builders:
        t = bd_normal(apply_substitution(t, builders))
    return _pattern_violation(t, set(flat), set(), len(bound))


def is_pattern(signature: Signature, context: Context, term: Term) -> bool:
    return pattern_violation(signature, context, term) is None


# ---------------------------------------------------------------- public entry points


def unify(
    signature: Signature,
    metas: Context,
    s: Term,
    t: Term,
    rigid: Context = EMPTY_CONTEXT,
) -> Substitution | None:
    """Most general unifier of two patterns, or None when they do not unify.

    ``metas`` are the unification variables, ``rigid`` further free variables
    treated as constants.  Both terms must be locally closed and of equal type.
    Fresh variables in the answer get readable names (``x'``, ``p1``, ...).
    """
    env = Context(metas.entries + rigid.entries)
    ty = typecheck(signature, env, s)
    ty2 = typecheck(signature, env, t)
    if ty != ty2:
        raise TypeMismatch(f"unifying terms of types {ty} and {ty2}")
    s = normal_form(signature, env, s)
    t = normal_form(signature, env, t)
    taken = set(env.names) | set(signature.symbols)
    flat, builders = _flatten_metas(signature, metas, set(taken))
    if builders:
        s = bd_normal(apply_substitution(s, builders))
        t = bd_normal(apply_substitution(t, builders))
    for side in (s, t):
        v = _pattern_violation(side, set(flat), set())
        if v:
            raise NotAPattern(v)
    solver = _Solver(signature, rigid.as_dict(), flat, taken | set(flat))
    try:
        solver.solve(s, t, ty)
    except _Fail:
        return None
    answer: dict[str, Term] = {}
    untouched: dict[str, Term] = {}
    for name, ty in metas:
        start = builders.get(name, Var(name))
        value = solver.resolve(start)
        if value != start:
            answer[name] = value
        elif name in builders:
            # Components of an unconstrained meta are read back from the meta itself.
            parts = [n for n in flat if n in free_vars(start)]
            for n, c in zip(parts, flat_components(ty, Var(name))):
                untouched[n] = c
    if untouched:
        answer = {k: bd_normal(apply_substitution(v, untouched)) for k, v in answer.items()}
    return _tidy(answer, metas, solver.types, taken, set(rigid.names))


def _tidy(
    answer: dict[str, Term], metas: Context, types: dict[str, Type], taken: set[str], rigid: set[str]
) -> Substitution:
    names = [n for n in first_occurrence_order(*answer.values()) if n not in rigid]
    renaming = {}
    used = set(taken)
    for n in names:
        if "#" in n or (n not in metas and n not in taken):
            new = fresh_name(n.split("#")[0], used)
            used.add(new)
            renaming[n] = new
    mapping = {k: rename_vars(v, renaming) for k, v in answer.items()}
    target = [(n, ty) for n, ty in metas if n not in answer]
    target += [(renaming.get(n, n), types[n]) for n in names if n not in metas]
    seen = set()
    ordered = []
    for n, ty in target:
        if n not in seen:
            seen.add(n)
            ordered.append((n, ty))
    return Substitution(mapping, Context(tuple(ordered)))


def unify_patterns(signature: Signature, problem: UnificationProblem) -> Substitution | None:
    return unify(signature, problem.context, problem.lhs, problem.rhs)


def match_pattern(
    signature: Signature,
    pattern_context: Context,
    pattern: Term,
    target: Term,
    target_context: Context = EMPTY_CONTEXT,
) -> Substitution | None:
    """θ with ``patternθ`` βδη-equal to ``target``; target variables stay fixed."""
    clash = set(pattern_context.names) & (set(target_context.names) | set(first_occurrence_order(target)))
    renaming = {}
    avoid = set(pattern_context.names) | set(target_context.names) | set(signature.symbols)
    for n in pattern_context.names:
        if n in clash:
            new = fresh_name(n + "'", avoid)
            avoid.add(new)
            renaming[n] = new
    metas = Context(tuple((renaming.get(n, n), ty) for n, ty in pattern_context))
    theta = unify(signature, metas, rename_vars(pattern, renaming), target, target_context)
    if theta is None:
        return None
    back = {v: k for k, v in renaming.items()}
    mapping = {back.get(k, k): v for k, v in theta.items()}
    extra = tuple((back.get(n, n), ty) for n, ty in theta.target if n not in target_context)
    return Substitution(mapping, target_context.extend(*extra))
