import pytest
from hypothesis import given, settings, strategies as st

from hho.errors import FuelExhausted, InvalidRule, StepInapplicable
from hho.normalize import normal_form
from hho.rewriting import (
    BACKWARD,
    FORWARD,
    LEFTMOST_OUTERMOST,
    PRS,
    RIGHTMOST_INNERMOST,
    RewriteStep,
    Rule,
    default_fuel,
    joinable,
    normalize_with_trace,
    perform_step,
    redexes,
    replay_derivation,
    replay_trace,
    rewrite_at,
    rewrite_once,
    validate_prs,
)
from hho.syntax import parse_context, parse_file, parse_term
from hho.terms import App, Const, Context

from conftest import DATA
from termgen import NNF_CTX, U, nnf_terms

# The negation normal form system plus two atoms, so that ground examples can be written down.
NNF_AB = parse_file((DATA / "nnf.prs").read_text() + "\nsig a : U\nsig b : U\n")
SIG, PRS2 = NNF_AB
EMPTY = Context()
XY = Context.of(("x", U), ("y", U))


def t(text, ctx=EMPTY):
    return parse_term(text, SIG, ctx)


def single(text):
    return parse_file("sort U\nsig not : U -> U\nsig and : U -> U -> U\nsig a : U\n" + text)[1]


# ---------------------------------------------------------------- validation


def test_validate_nnf_passes():
    report = validate_prs(PRS2)
    assert report.ok and report.is_prs
    assert [c.rule for c in report.checks] == ["NotNot", "NotAnd", "NotOr", "NotAll", "NotEx"]


def test_validate_multiset_failure():
    report = validate_prs(single("rule Dup : (x:U) |- not x => and x x"))
    (check,) = report.checks
    assert check.lhs_is_pattern and check.rhs_vars_in_lhs and check.base_type
    assert not check.same_var_multiset
    assert report.is_prs and not report.ok


def test_validate_self_inverse_rule():
    report = validate_prs(single("rule Id : (x:U) |- not x => not x"))
    assert not report.ok
    assert report.checks[0].inverse_of == "Id"


def test_validate_inverse_pair():
    prs = single(
        "rule E : (x:U, y:U) |- not (and x y) => and y x\n"
        "rule F : (u:U, v:U) |- and u v => not (and v u)\n"
    )
    report = validate_prs(prs)
    assert not report.ok
    assert [c.inverse_of for c in report.checks] == ["F", "E"]


def test_validate_non_pattern_lhs():
    prs = parse_file(
        "sort U\nsig a : U\nsig g : (U -> U) -> U\n"
        "rule Bad : (f:U -> U) |- g (\\z:U. f a) => a\n"
    )[1]
    report = validate_prs(prs)
    assert not report.checks[0].lhs_is_pattern and not report.is_prs


def test_rule_type_mismatch():
    ctx = Context.of(("x", U))
    with pytest.raises(InvalidRule):
        Rule.make(SIG, "Bad", ctx, parse_term("not x", SIG, ctx), parse_term(r"\z:V. x", SIG, ctx))


def test_duplicate_rule_name():
    r = PRS2.rules[0]
    with pytest.raises(InvalidRule):
        PRS(SIG, (r, r))


# ---------------------------------------------------------------- rewrite_once


def test_rewrite_once_notnot():
    out, step = rewrite_once(PRS2, EMPTY, t("not (not a)"))
    assert out == t("a")
    assert (step.rule, step.direction, step.position) == ("NotNot", FORWARD, ())
    assert dict(step.substitution.items()) == {"x": t("a")}


def test_rewrite_once_normal():
    assert rewrite_once(PRS2, EMPTY, t("and a b")) is None


def test_rewrite_once_notor():
    out, step = rewrite_once(PRS2, EMPTY, t("not (or (not a) (not b))"))
    assert out == t("and (not (not a)) (not (not b))")
    assert (step.rule, step.position) == ("NotOr", ())


def test_rewrite_under_binder():
    ctx = Context.of(("p", parse_context("(p:V -> U)", ["U", "V"]).lookup("p")))
    out, step = rewrite_once(PRS2, ctx, t(r"all (\z:V. not (not (p z)))", ctx))
    assert out == t(r"all (\z:V. p z)", ctx)
    assert step.position == (2, 1)
    assert step.bound == ("z",)


def test_rightmost_innermost_picks_inner_redex():
    term = t("not (not (not (not a)))")
    _, lo = rewrite_once(PRS2, EMPTY, term, LEFTMOST_OUTERMOST)
    _, ri = rewrite_once(PRS2, EMPTY, term, RIGHTMOST_INNERMOST)
    assert lo.position == () and ri.position == (2, 2)


# ---------------------------------------------------------------- normalization


def test_normalize_notor_trace():
    nf, trace = normalize_with_trace(PRS2, EMPTY, t("not (or (not a) (not b))"))
    assert nf == t("and a b")
    assert [s.rule for s in trace.steps] == ["NotOr", "NotNot", "NotNot"]
    assert trace.rule_counts() == {"NotOr": 1, "NotNot": 2}


def test_normalize_atom():
    nf, trace = normalize_with_trace(PRS2, EMPTY, t("a"))
    assert nf == t("a") and len(trace) == 0 and trace.source == trace.target


def test_normalize_notex_trace():
    ctx = NNF_CTX
    nf, trace = normalize_with_trace(PRS2, ctx, t(r"not (ex (\z:V. not (p z)))", ctx))
    assert nf == t(r"all (\z:V. p z)", ctx)
    assert [s.rule for s in trace.steps] == ["NotEx", "NotNot"]


def test_fuel_exhausted_carries_partial_trace():
    prs = single("rule Comm : (x:U, y:U) |- and x y => and y x")
    with pytest.raises(FuelExhausted) as info:
        normalize_with_trace(prs, XY, parse_term("and x y", prs.signature, XY), fuel=5)
    partial = info.value.trace
    assert len(partial) == 5
    assert replay_derivation(prs, XY, partial.source, partial.steps) == partial.target


def test_default_fuel_env(monkeypatch):
    assert default_fuel() == 10_000
    monkeypatch.setenv("HHO_FUEL", "7")
    assert default_fuel() == 7


# ---------------------------------------------------------------- joinability


def test_joinable_examples():
    assert joinable(PRS2, XY, t("and x y", XY), t("not (or (not x) (not y))", XY))
    assert not joinable(PRS2, EMPTY, t("a"), t("b"))
    ctx = NNF_CTX
    assert joinable(PRS2, ctx, t(r"not (all (\z:V. p z))", ctx), t(r"ex (\z:V. not (p z))", ctx))


# ---------------------------------------------------------------- replay


def chain_steps():
    return [
        RewriteStep("NotNot", BACKWARD, (2, 1, 2)),
        RewriteStep("NotNot", BACKWARD, (2, 2)),
        RewriteStep("NotOr", BACKWARD, (2,)),
        RewriteStep("NotNot", FORWARD, ()),
    ]


def test_replay_derives_notand():
    sub = PRS2.subsystem(["NotNot", "NotOr", "NotEx"])
    out = replay_derivation(sub, XY, t("not (and x y)", XY), chain_steps())
    assert out == t("or (not x) (not y)", XY)
    trace = replay_trace(sub, XY, t("not (and x y)", XY), chain_steps())
    assert trace.terms[1] == t("not (and (not (not x)) y)", XY)
    assert trace.terms[3] == t("not (not (or (not x) (not y)))", XY)
    # The reconstructed steps carry full substitutions and replay again.
    assert replay_derivation(sub, XY, trace.source, trace.steps) == trace.target


def test_replay_empty():
    term = t("not (and x y)", XY)
    assert replay_derivation(PRS2, XY, term, []) == term


def test_replay_single_forward():
    assert replay_derivation(PRS2, EMPTY, t("not (not a)"), [RewriteStep("NotNot", FORWARD, ())]) == t("a")


def test_replay_backward_needs_substitution_for_fresh_variable():
    # Backward NotNot at a leaf: the right side x is a pattern, so matching works.
    out = replay_derivation(PRS2, EMPTY, t("a"), [RewriteStep("NotNot", BACKWARD, ())])
    assert out == t("not (not a)")


def test_replay_with_explicit_substitution():
    step = RewriteStep("NotAnd", BACKWARD, (), {"x": t("a"), "y": t("b")})
    assert replay_derivation(PRS2, EMPTY, t("or (not a) (not b)"), [step]) == t("not (and a b)")
    wrong = RewriteStep("NotAnd", BACKWARD, (), {"x": t("b")})
    with pytest.raises(StepInapplicable):
        replay_derivation(PRS2, EMPTY, t("or (not a) (not b)"), [wrong])


def test_step_inapplicable_reports_index():
    steps = [RewriteStep("NotNot", FORWARD, ()), RewriteStep("NotNot", FORWARD, ())]
    with pytest.raises(StepInapplicable) as info:
        replay_derivation(PRS2, EMPTY, t("not (not a)"), steps)
    assert info.value.index == 1
    with pytest.raises(StepInapplicable) as info:
        replay_derivation(PRS2, EMPTY, t("a"), [RewriteStep("Nope", FORWARD, ())])
    assert info.value.index == 0
    with pytest.raises(StepInapplicable):
        replay_derivation(PRS2, EMPTY, t("a"), [RewriteStep("NotNot", FORWARD, (1, 1))])


# ---------------------------------------------------------------- properties

nnf_cases = nnf_terms(depth=4)


@settings(max_examples=250, deadline=None)
@given(nnf_cases)
def test_step_reconstruction(term):
    term = normal_form(SIG, NNF_CTX, term)
    for out, step in redexes(PRS2, NNF_CTX, term):
        assert perform_step(PRS2, NNF_CTX, term, step)[0] == out
        bare = RewriteStep(step.rule, step.direction, step.position)
        assert perform_step(PRS2, NNF_CTX, term, bare)[0] == out


@settings(max_examples=200, deadline=None)
@given(nnf_cases)
def test_strategy_independent_normal_forms(term):
    lo, tr1 = normalize_with_trace(PRS2, NNF_CTX, term, LEFTMOST_OUTERMOST)
    ri, tr2 = normalize_with_trace(PRS2, NNF_CTX, term, RIGHTMOST_INNERMOST)
    assert lo == ri
    assert rewrite_once(PRS2, NNF_CTX, lo) is None
    # Traces replay from source to target, and are empty only at normal forms.
    for tr in (tr1, tr2):
        assert replay_derivation(PRS2, NNF_CTX, tr.source, tr.steps) == tr.target
        assert (len(tr) == 0) == (tr.source == tr.target)


@settings(max_examples=100, deadline=None)
@given(st.lists(nnf_terms(depth=3), min_size=3, max_size=3))
def test_joinability_is_a_congruence(ts):
    a, b, c = ts
    j = lambda s, u: joinable(PRS2, NNF_CTX, s, u)
    assert j(a, a)
    assert j(a, b) == j(b, a)
    if j(a, b) and j(b, c):
        assert j(a, c)
    # not(·) respects the relation; so does a rewrite step.
    if j(a, b):
        assert j(App(Const("not"), a), App(Const("not"), b))
    r = rewrite_once(PRS2, NNF_CTX, a)
    if r is not None:
        assert j(a, r[0])


def test_rewrite_at_rejects_bad_substitution():
    rule = PRS2.rule("NotNot")
    term = t("not (not a)")
    assert rewrite_at(PRS2, EMPTY, term, (), rule, FORWARD, {"q": t("a")}) is None
    assert rewrite_at(PRS2, EMPTY, term, (), rule, FORWARD, {"x": t("b")}) is None
