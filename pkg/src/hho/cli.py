"""Command line interface: ``hho <command> FILE [options]``.

Exit codes: 0 success, 1 validation or replay failure, 2 non-joinable
critical peak, 3 fuel exhausted, 4 usage or parse error.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from dataclasses import dataclass, field
from typing import TextIO

from . import report
from .critical import critical_pairs, local_confluence_check
from .errors import FuelExhausted, HHOError, NotJoinable, ParseError, StepInapplicable
from .homology import homotopy_basis, lower_bound
from .normalize import normal_form
from .rewriting import (
    BACKWARD,
    FORWARD,
    LEFTMOST_OUTERMOST,
    PRS,
    STRATEGIES,
    RewriteStep,
    Trace,
    local_names,
    normalize_with_trace,
    perform_step,
    validate_prs,
)
from .syntax import parse_context, parse_file, parse_position, parse_term, parse_term_in_context
from .terms import Context, Signature, Substitution, Term, binders_at, is_valid_position

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_JOINABLE = 2
EXIT_FUEL = 3
EXIT_USAGE = 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- replay scripts


@dataclass
class ScriptStep:
    line: int
    direction: str
    rule: str
    position: tuple[int, ...]
    bindings: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class Script:
    start: str | None = None
    expect: str | None = None
    rules: list[str] | None = None
    steps: list[ScriptStep] = field(default_factory=list)


_STEP = re.compile(r"(fwd|bwd|forward|backward)\s+(\S+)\s+at\s+(\[[^\]]*\])\s*(?:with\s+(.*))?$")
_BINDING = re.compile(r"(?:^|[\s,]+)([A-Za-z_][A-Za-z0-9_']*)\s*=(?!>)")


def parse_script(text: str) -> Script:
    """Line-oriented derivation script.

    Lines are ``start CTX |- TERM``, ``use RULE ...``, ``expect TERM`` or
    ``fwd|bwd RULE at [POS] [with VAR=TERM ...]``; ``#`` starts a comment.
    """
    script = Script()
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        if word == "start":
            script.start = rest
        elif word == "expect":
            script.expect = rest
        elif word == "use":
            script.rules = [r for r in re.split(r"[\s,]+", rest) if r]
        else:
            m = _STEP.match(line)
            if not m:
                raise ParseError(f"cannot read script line: {line!r}", n, 1)
            direction = FORWARD if m.group(1).startswith("f") else BACKWARD
            try:
                pos = parse_position(m.group(3))
            except ParseError as e:
                raise ParseError(e.message, n, m.start(3) + 1) from None
            bindings = []
            if m.group(4):
                parts = _BINDING.split(m.group(4))
                if parts[0].strip():
                    raise ParseError(f"expected VAR=TERM after 'with', got {parts[0].strip()!r}", n, m.start(4) + 1)
                bindings = [(parts[i], parts[i + 1].strip()) for i in range(1, len(parts), 2)]
            script.steps.append(ScriptStep(n, direction, m.group(2), pos, bindings))
    return script


def run_script(
    prs: PRS, context: Context, start: Term, steps: list[ScriptStep]
) -> Trace:
    """Replay script steps, parsing ``with`` terms under the binders at each position."""
    sig = prs.signature
    t = normal_form(sig, context, start)
    source, done, terms = t, [], [t]
    for k, s in enumerate(steps):
        subst = None
        if s.bindings:
            if not is_valid_position(t, s.position):
                raise StepInapplicable(f"position {list(s.position)} does not exist", k)
            names = local_names(sig, context, t, s.position)
            local = context.extend(*((n, ty) for n, (_, ty) in zip(names, binders_at(t, s.position))))
            subst = Substitution({v: parse_term(txt, sig, local) for v, txt in s.bindings}, local)
        t, full = perform_step(prs, context, t, RewriteStep(s.rule, s.direction, s.position, subst), k)
        done.append(full)
        terms.append(t)
    return Trace(context, source, tuple(done), t, tuple(terms))


# ---------------------------------------------------------------- commands


def _fuel(args) -> int | None:
    return args.fuel


def _require_valid(prs: PRS, err: TextIO, full: bool = True) -> bool:
    """``full`` also demands the hypotheses of the lower bound."""
    rep = validate_prs(prs)
    good = rep.ok if full else rep.is_prs
    if not good:
        what = "does not meet the hypotheses of the bound" if rep.is_prs else "is not a pattern rewriting system"
        err.write(f"input {what}:\n")
        err.write(report.validation_text(rep))
    return good


def _emit(args, out: TextIO, doc, text: str):
    out.write(report.dumps(doc) if args.json else text)


def _term_arg(args, sig: Signature) -> tuple[Context, Term]:
    try:
        if args.context is not None:
            ctx = parse_context(args.context, sig.sorts)
            return ctx, parse_term(args.term, sig, ctx)
        return parse_term_in_context(args.term, sig)
    except ParseError as e:
        raise UsageError(f"--term: {e.message}") from None


def cmd_validate(args, sig, prs, out, err) -> int:
    rep = validate_prs(prs)
    _emit(args, out, report.validation_json(rep), report.validation_text(rep))
    return EXIT_OK if rep.ok else EXIT_INVALID


def cmd_cps(args, sig, prs, out, err) -> int:
    if not _require_valid(prs, err, full=False):
        return EXIT_INVALID
    peaks = critical_pairs(prs)
    _emit(args, out, report.peaks_json(peaks), report.peaks_text(peaks))
    return EXIT_OK


def cmd_confluence(args, sig, prs, out, err) -> int:
    if not _require_valid(prs, err, full=False):
        return EXIT_INVALID
    rep = local_confluence_check(prs, _fuel(args), args.strategy)
    _emit(args, out, report.confluence_json(rep), report.confluence_text(rep))
    for v in rep.failures:
        err.write(f"critical peak {v.peak.id} is not joinable\n")
    if rep.failures:
        return EXIT_NOT_JOINABLE
    return EXIT_FUEL if rep.exhausted else EXIT_OK


def cmd_bound(args, sig, prs, out, err) -> int:
    if not _require_valid(prs, err):
        return EXIT_INVALID
    rep = lower_bound(prs, args.strategy, _fuel(args))
    _emit(args, out, report.bound_json(rep), report.bound_text(rep))
    return EXIT_OK


def cmd_basis(args, sig, prs, out, err) -> int:
    if not _require_valid(prs, err):
        return EXIT_INVALID
    entries = homotopy_basis(prs, args.strategy, _fuel(args))
    _emit(args, out, report.basis_json(entries, args.strategy), report.basis_text(entries))
    return EXIT_OK


def cmd_normalize(args, sig, prs, out, err) -> int:
    if args.term is None:
        raise UsageError("normalize needs --term")
    if not _require_valid(prs, err, full=False):
        return EXIT_INVALID
    ctx, t = _term_arg(args, sig)
    _, trace = normalize_with_trace(prs, ctx, t, args.strategy, _fuel(args))
    _emit(args, out, report.normalize_json(ctx, trace, args.strategy), report.normalize_text(ctx, trace))
    return EXIT_OK


def cmd_replay(args, sig, prs, out, err) -> int:
    if args.script is None:
        raise UsageError("replay needs --script")
    try:
        script = parse_script(_read(args.script))
    except ParseError as e:
        raise UsageError(f"{args.script}:{e}") from None
    rules = args.rules.split(",") if args.rules else script.rules
    if rules is not None:
        unknown = [r for r in rules if r not in {x.name for x in prs.rules}]
        if unknown:
            raise UsageError(f"unknown rule(s): {', '.join(unknown)}")
        prs = prs.subsystem(rules)
    if args.term is not None:
        ctx, start = _term_arg(args, sig)
    elif script.start is not None:
        try:
            ctx, start = parse_term_in_context(script.start, sig)
        except ParseError as e:
            raise UsageError(f"{args.script}: start: {e.message}") from None
    else:
        raise UsageError("replay needs a start term (--term or a 'start' line)")
    try:
        expected = parse_term(script.expect, sig, ctx) if script.expect is not None else None
    except ParseError as e:
        raise UsageError(f"{args.script}: expect: {e.message}") from None
    try:
        trace = run_script(prs, ctx, start, script.steps)
    except StepInapplicable as e:
        line = script.steps[e.index].line
        err.write(f"{args.script}:{line}: {e}\n")
        return EXIT_INVALID
    except ParseError as e:
        raise UsageError(f"{args.script}: with: {e.message}") from None
    ok = expected is None or normal_form(sig, ctx, expected) == trace.target
    _emit(args, out, report.replay_json(ctx, trace, expected, ok), report.replay_text(ctx, trace, expected, ok))
    return EXIT_OK if ok else EXIT_INVALID


COMMANDS = {
    "validate": (cmd_validate, "check the rewriting system's hypotheses"),
    "cps": (cmd_cps, "list critical peaks"),
    "confluence": (cmd_confluence, "check local confluence peak by peak"),
    "bound": (cmd_bound, "second boundary matrix, its rank and the lower bound"),
    "basis": (cmd_basis, "homotopy basis as pairs of rewrite paths"),
    "normalize": (cmd_normalize, "normal form of a term with its trace"),
    "replay": (cmd_replay, "check an equational derivation script"),
}


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError("fuel must be non-negative")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hho", description="Lower bounds on equation counts for pattern rewriting systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file", help=".prs file")
        p.add_argument("--json", action="store_true", help="emit one JSON document")
        p.add_argument("--fuel", type=_positive, default=None, help="steps per normalization (default: $HHO_FUEL or 10000)")
        p.add_argument("--strategy", choices=STRATEGIES, default=LEFTMOST_OUTERMOST)
        if name in ("normalize", "replay"):
            p.add_argument("--term", help="term, optionally as '(x:U, ...) |- term'")
            p.add_argument("--context", help="context for --term, e.g. '(x:U, y:U)'")
        if name == "replay":
            p.add_argument("--script", help="derivation script")
            p.add_argument("--rules", help="comma separated subsystem to replay in")
    return parser


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def run(argv: list[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    if args.fuel is None:
        env = os.environ.get("HHO_FUEL")
        if env:
            try:
                args.fuel = _positive(env)
            except argparse.ArgumentTypeError as e:
                err.write(f"hho: HHO_FUEL: {e}\n")
                return EXIT_USAGE
    handler = COMMANDS[args.command][0]
    try:
        text = _read(args.file)
        sig, prs = parse_file(text, args.file)
        return handler(args, sig, prs, out, err)
    except UsageError as e:
        err.write(f"hho: {e}\n")
        return EXIT_USAGE
    except ParseError as e:
        err.write(f"{args.file}:{e}\n")
        return EXIT_USAGE
    except NotJoinable as e:
        err.write(f"hho: {e}; the system is not complete, so no bound is reported\n")
        return EXIT_NOT_JOINABLE
    except FuelExhausted as e:
        where = f" (peak {e.peak})" if e.peak else ""
        err.write(f"hho: {e}{where}\n")
        return EXIT_FUEL
    except HHOError as e:
        err.write(f"hho: {e}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
