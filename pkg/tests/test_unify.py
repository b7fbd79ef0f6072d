
import pytest
from hypothesis import given, settings, strategies as st

from hho.errors import NotAPattern, TypeMismatch
from hho.normalize import normal_form
from hho.syntax import parse_term
from hho.terms import (
    App,
    Arrow,
    Base,
    Const,
    Context,
    Lam,
    Prod,
    Signature,
    Term,
    Var,
    apply_substitution,
    free_vars,
    typecheck,
)
from hho.unify import flat_components, flatten_type, is_pattern, match_pattern, unify

from termgen import HO_METAS, NNF_SIG, PAT_SIG, U, V, patterns

T = Base("T")


def test_is_pattern_positive():
    sig = Signature(("T",), {"c": Arrow(T, T)})
    ctx = Context.of(("x", Arrow(Arrow(T, T), T)))
    term = parse_term(r"\y:T -> T. c (x (\z:T. y z))", sig, ctx)
    assert is_pattern(sig, ctx, term)


def test_is_pattern_projection_of_product_variable():
    ctx = Context.of(("x", Prod(Arrow(T, Arrow(T, T)), T)))
    sig = Signature(("T",), {})
    assert is_pattern(sig, ctx, parse_term(r"\y:T. \z:T. (pr1 x) z y", sig, ctx))


def test_is_pattern_constant_argument():
    sig = Signature(("T",), {"c": T})
    ctx = Context.of(("x", Arrow(T, T)))
    assert not is_pattern(sig, ctx, parse_term("x c", sig, ctx))


def test_is_pattern_repeated_bound_variable():
    sig = Signature(("T",), {})
    ctx = Context.of(("x", Arrow(T, Arrow(T, T))))
    assert not is_pattern(sig, ctx, parse_term(r"\y:T. x y y", sig, ctx))


def test_unify_inner_negation():
    metas = Context.of(("x", U), ("y", U))
    theta = unify(NNF_SIG, metas, parse_term("not x", NNF_SIG, metas), Var("y"))
    assert dict(theta.items()) == {"y": parse_term("not x", NNF_SIG, metas)}


def test_unify_identical():
    metas = Context.of(("x", U))
    theta = unify(NNF_SIG, metas, Var("x"), Var("x"))
    assert len(theta) == 0 and theta.is_identity()


def test_unify_flex_rigid_under_binder():
    metas = Context.of(("p", Arrow(V, U)), ("q", Arrow(V, U)))
    s = parse_term(r"\z:V. p z", NNF_SIG, metas)
    t = parse_term(r"\z:V. not (q z)", NNF_SIG, metas)
    theta = unify(NNF_SIG, metas, s, t)
    assert dict(theta.items()) == {"p": parse_term(r"\z:V. not (q z)", NNF_SIG, metas)}
    check_unifier(NNF_SIG, metas, s, t, theta)


def test_unify_clash_and_occurs():
    metas = Context.of(("x", U), ("y", U))
    assert unify(NNF_SIG, metas, parse_term("and x y", NNF_SIG, metas), parse_term("or x y", NNF_SIG, metas)) is None
    assert unify(NNF_SIG, metas, Var("x"), parse_term("not x", NNF_SIG, metas)) is None


def test_unify_pruning():
    # F z =?= G: G cannot depend on z, so F must ignore its argument.
    metas = Context.of(("F", Arrow(V, U)), ("G", U))
    s = parse_term(r"all (\z:V. F z)", PAT_SIG, metas)
    t = parse_term(r"all (\z:V. G)", PAT_SIG, metas)
    theta = unify(PAT_SIG, metas, s, t)
    check_unifier(PAT_SIG, metas, s, t, theta)
    assert theta["F"] == Lam(V, theta["G"], "z")


def test_unify_escaping_bound_variable_fails():
    metas = Context.of(("G", U))
    s = parse_term(r"all (\z:V. G)", PAT_SIG, metas)
    t = parse_term(r"all (\z:V. not (F z))", PAT_SIG, metas.extend(("F", Arrow(V, U))))
    assert unify(PAT_SIG, metas.extend(("F", Arrow(V, U))), s, t) is not None
    rigid = Context.of(("p", Arrow(V, U)))
    assert unify(PAT_SIG, metas, s, parse_term(r"all (\z:V. p z)", PAT_SIG, rigid), rigid) is None


def test_unify_flex_flex_permutation():
    metas = Context.of(("H", Arrow(V, Arrow(V, U))))
    s = parse_term(r"all (\u:V. all (\v:V. H u v))", PAT_SIG, metas)
    t = parse_term(r"all (\u:V. all (\v:V. H v u))", PAT_SIG, metas)
    theta = unify(PAT_SIG, metas, s, t)
    check_unifier(PAT_SIG, metas, s, t, theta)
    # Only the diagonal survives: H ignores both arguments.
    assert free_vars(apply_substitution(Var("H"), theta)) != {"H"}


def test_unify_product_meta():
    metas = Context.of(("P", Prod(U, U)))
    s = parse_term("and (pr1 P) (pr2 P)", PAT_SIG, metas)
    t = parse_term("and a (not b)", PAT_SIG, metas)
    theta = unify(PAT_SIG, metas, s, t)
    assert normal_form(PAT_SIG, Context(), apply_substitution(Var("P"), theta)) == parse_term(
        "<a, not b>", PAT_SIG, Context()
    )


def test_unify_rejects_non_patterns():
    metas = Context.of(("F", Arrow(U, U)))
    with pytest.raises(NotAPattern):
        unify(PAT_SIG, metas, parse_term("F a", PAT_SIG, metas), Const("b"))


def test_unify_type_mismatch():
    metas = Context.of(("x", U), ("F", Arrow(V, U)))
    with pytest.raises(TypeMismatch):
        unify(PAT_SIG, metas, Var("x"), Var("F"))


def test_match_examples():
    target_ctx = Context.of(("a", U), ("b", U))
    pctx = Context.of(("x", U))
    pat = parse_term("not (not x)", NNF_SIG, pctx)
    theta = match_pattern(NNF_SIG, pctx, pat, parse_term("not (not (and a b))", NNF_SIG, target_ctx), target_ctx)
    assert dict(theta.items()) == {"x": parse_term("and a b", NNF_SIG, target_ctx)}
    assert match_pattern(NNF_SIG, pctx, pat, parse_term("not a", NNF_SIG, target_ctx), target_ctx) is None


def test_match_under_binder():
    tctx = Context.of(("q", Arrow(V, U)))
    pctx = Context.of(("p", Arrow(V, U)))
    pat = parse_term(r"not (all (\z:V. p z))", NNF_SIG, pctx)
    target = parse_term(r"not (all (\z:V. not (q z)))", NNF_SIG, tctx)
    theta = match_pattern(NNF_SIG, pctx, pat, target, tctx)
    assert dict(theta.items()) == {"p": parse_term(r"\z:V. not (q z)", NNF_SIG, tctx)}
    assert normal_form(NNF_SIG, tctx, apply_substitution(pat, theta)) == target


def test_match_keeps_target_variables_fixed():
    ctx = Context.of(("x", U))
    assert match_pattern(NNF_SIG, ctx, Var("x"), Var("x"), ctx)["x"] == Var("x")
    pat = parse_term("and x x", NNF_SIG, ctx)
    tctx = Context.of(("x", U), ("y", U))
    assert match_pattern(NNF_SIG, ctx, pat, parse_term("and x y", NNF_SIG, tctx), tctx) is None


def test_flatten_type():
    comps, _ = flatten_type(Arrow(Prod(U, V), Prod(U, Arrow(V, U))))
    assert comps == [Arrow(U, Arrow(V, U)), Arrow(U, Arrow(V, Arrow(V, U)))]


# ---------------------------------------------------------------- properties


def check_unifier(sig, metas, s, t, theta):
    target = theta.target
    s1 = normal_form(sig, target, apply_substitution(s, theta))
    t1 = normal_form(sig, target, apply_substitution(t, theta))
    assert s1 == t1
    for name, value in theta.items():
        assert typecheck(sig, target, value) == metas.lookup(name)
        assert not (free_vars(value) & set(theta.keys()))
        again = normal_form(sig, target, apply_substitution(value, theta))
        assert again == normal_form(sig, target, value)


def _ground(depth):
    out = [Const("a"), Const("b")]
    if depth:
        smaller = _ground(depth - 1)
        out += [App(Const("not"), g) for g in smaller]
        out += [App(App(Const("and"), g), h) for g in smaller for h in smaller]
    return out


UNIVERSE = _ground(1)


def fo_apply(t: Term, sigma: dict) -> Term:
    match t:
        case Var(n):
            return sigma.get(n, t)
        case App(f, a):
            return App(fo_apply(f, sigma), fo_apply(a, sigma))
    return t


def fo_match(pattern: Term, ground: Term, acc: dict) -> bool:
    match pattern:
        case Var(n):
            if n in acc:
                return acc[n] == ground
            acc[n] = ground
            return True
        case App(f, a):
            return isinstance(ground, App) and fo_match(f, ground.fun, acc) and fo_match(a, ground.arg, acc)
    return pattern == ground


@settings(max_examples=100, deadline=None)
@given(patterns(), st.data())
def test_pattern_matches_its_instances(pattern, data):
    # Instantiate the pattern with ground values, then match it back.
    sigma = {
        "X": data.draw(st.sampled_from(UNIVERSE)),
        "Y": data.draw(st.sampled_from(UNIVERSE)),
        "F": parse_term(r"\z:V. not a", PAT_SIG, Context()),
        "G": parse_term(r"\z:V. b", PAT_SIG, Context()),
        "H": parse_term(r"\u:V. \v:V. and a b", PAT_SIG, Context()),
        "P": parse_term("<a, b>", PAT_SIG, Context()),
        "K": parse_term(r"\z:V. <b, a>", PAT_SIG, Context()),
    }
    target = normal_form(PAT_SIG, Context(), apply_substitution(pattern, sigma))
    theta = match_pattern(PAT_SIG, HO_METAS, pattern, target, Context())
    assert theta is not None
    # Components the pattern never inspects stay as fresh variables.
    assert normal_form(PAT_SIG, theta.target, apply_substitution(pattern, theta)) == target


_base = st.sampled_from([U, V])
flat_types = st.recursive(
    _base,
    lambda inner: st.one_of(
        st.builds(Prod, inner, inner), st.builds(Arrow, inner, inner)
    ),
    max_leaves=5,
)


@settings(max_examples=200, deadline=None)
@given(flat_types)
def test_flattening_is_an_isomorphism(ty):

    ctx = Context.of(("m", ty))
    comps, build = flatten_type(ty)
    parts = flat_components(ty, Var("m"))
    assert [typecheck(PAT_SIG, ctx, p) for p in parts] == comps
    back = normal_form(PAT_SIG, ctx, build(parts))
    assert back == normal_form(PAT_SIG, ctx, Var("m"))
    # And the other way round, starting from fresh components.
    cctx = Context(tuple((f"c{i}", c) for i, c in enumerate(comps)))
    whole = build([Var(n) for n in cctx.names])
    again = [normal_form(PAT_SIG, cctx, p) for p in flat_components(ty, whole)]
    assert again == [normal_form(PAT_SIG, cctx, Var(n)) for n in cctx.names]
