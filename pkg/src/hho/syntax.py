"""Concrete syntax of ``.prs`` files: tokenizer, parser and printer.

::

    file  := decl*
    decl  := "sort" ID | "sig" ID ":" type | "rule" ID ":" ctx "|-" term "=>" term
    type  := prod ("->" type)?          prod := tatom ("*" tatom)*
    tatom := "1" | ID | "(" type ")"
    ctx   := "(" ID ":" type ("," ID ":" type)* ")" | "()"
    term  := "\\" ID ":" type "." term | app        app := atom+
    atom  := ID | "()" | "(" term ")" | "<" term "," term ">" | "pr1" atom | "pr2" atom

``*`` is left-associative and binds tighter than the right-associative ``->``.
Lines starting at ``#`` are comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DuplicateName, ParseError, PrsSyntaxError, UnknownSort
from .terms import (
    App,
    Arrow,
    Base,
    Bound,
    Const,
    Context,
    Lam,
    Pair,
    Prod,
    Proj,
    Signature,
    Term,
    Type,
    Unit,
    UnitTerm,
    Var,
    constants,
    free_vars,
    fresh_name,
    spine,
)

KEYWORDS = {"sort", "sig", "rule", "pr1", "pr2"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<sym>\|-|=>|->|[():,*\\.<>])
  | (?P<one>1(?![A-Za-z0-9_']))
  | (?P<id>[A-Za-z_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "sym", "id", "kw", "one", "eof"
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PrsSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind == "id" and s in KEYWORDS:
                kind = "kw"
            if kind not in ("ws", "comment"):
                tokens.append(Token(kind, s, line, col))
            col += len(s)
        pos = m.end()
    if tokens:
        # Point end-of-input errors just past the last token.
        last = tokens[-1]
        line, col = last.line, last.column + len(last.text)
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------- declarations


@dataclass(frozen=True)
class Span:
    line: int
    column: int


@dataclass(frozen=True)
class SortDecl:
    name: str
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SigDecl:
    name: str
    type: Type
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class RuleDecl:
    name: str
    context: Context
    lhs: Term
    rhs: Term
    span: Span | None = field(default=None, compare=False)


Decl = SortDecl | SigDecl | RuleDecl


@dataclass(frozen=True)
class SourceFile:
    path: str | None
    declarations: tuple[Decl, ...]


# ---------------------------------------------------------------- parser


class Parser:
    def __init__(self, text: str, sorts: Sequence[str] = (), symbols: dict[str, Type] | None = None):
        self.toks = tokenize(text)
        self.i = 0
        self.sorts: list[str] = list(sorts)
        self.symbols: dict[str, Type] = dict(symbols or {})

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "kw", "one") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "id":
            self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def error(self, msg: str, tok: Token | None = None, cls=PrsSyntaxError):
        tok = tok or self.tok
        raise cls(msg, tok.line, tok.column)

    def done(self) -> bool:
        return self.tok.kind == "eof"

    # -- types

    def type_(self) -> Type:
        left = self.prod()
        if self.at("->"):
            self.advance()
            return Arrow(left, self.type_())
        return left

    def prod(self) -> Type:
        ty = self.tatom()
        while self.at("*"):
            self.advance()
            ty = Prod(ty, self.tatom())
        return ty

    def tatom(self) -> Type:
        if self.at("1"):
            self.advance()
            return Unit()
        if self.at("("):
            self.advance()
            ty = self.type_()
            self.expect(")")
            return ty
        tok = self.ident()
        if tok.text not in self.sorts:
            self.error(f"unknown sort {tok.text}", tok, UnknownSort)
        return Base(tok.text)

    # -- contexts

    def context(self) -> Context:
        start = self.expect("(")
        entries = []
        if not self.at(")"):
            while True:
                name = self.ident()
                if any(n == name.text for n, _ in entries):
                    self.error(f"variable {name.text} occurs twice in context", name, DuplicateName)
                self.expect(":")
                entries.append((name.text, self.type_()))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        del start
        return Context(tuple(entries))

    # -- terms

    def term(self, ctx: Context, bound: list[str], unknown=None) -> Term:
        if self.at("\\"):
            return self.lam(ctx, bound, unknown)
        return self.app(ctx, bound, unknown)

    def lam(self, ctx, bound, unknown) -> Term:
        self.expect("\\")
        name = self.ident().text
        self.expect(":")
        ty = self.type_()
        self.expect(".")
        bound.append(name)
        try:
            body = self.term(ctx, bound, unknown)
        finally:
            bound.pop()
        return Lam(ty, body, name)

    def starts_atom(self) -> bool:
        t = self.tok
        return t.kind == "id" or (t.kind in ("sym", "kw") and t.text in ("(", "<", "pr1", "pr2"))

    def app(self, ctx, bound, unknown) -> Term:
        if not self.starts_atom():
            self.error(f"expected a term, found {self.tok.text or 'end of input'!r}")
        t = self.atom(ctx, bound, unknown)
        while True:
            if self.starts_atom():
                t = App(t, self.atom(ctx, bound, unknown))
            elif self.at("\\"):
                t = App(t, self.lam(ctx, bound, unknown))
            else:
                return t

    def atom(self, ctx, bound, unknown) -> Term:
        tok = self.tok
        if self.at("pr1") or self.at("pr2"):
            self.advance()
            return Proj(int(tok.text[2]), self.atom(ctx, bound, unknown))
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return UnitTerm()
            t = self.term(ctx, bound, unknown)
            self.expect(")")
            return t
        if self.at("<"):
            self.advance()
            a = self.term(ctx, bound, unknown)
            self.expect(",")
            b = self.term(ctx, bound, unknown)
            self.expect(">")
            return Pair(a, b)
        name = self.ident().text
        for k, b in enumerate(reversed(bound)):
            if b == name:
                return Bound(k)
        if name in ctx:
            return Var(name)
        if name in self.symbols:
            return Const(name)
        self.error(unknown(name) if unknown else f"unbound identifier {name}", tok)

    def term_eof(self, ctx: Context, bound: Sequence[str] = ()) -> Term:
        t = self.term(ctx, list(bound))
        if not self.done():
            self.error(f"unexpected {self.tok.text!r} after term")
        return t

    # -- files

    def declarations(self) -> list[Decl]:
        decls: list[Decl] = []
        rule_names: set[str] = set()
        while not self.done():
            tok = self.tok
            span = Span(tok.line, tok.column)
            if self.at("sort"):
                self.advance()
                name = self.ident()
                if name.text in self.sorts:
                    self.error(f"sort {name.text} declared twice", name, DuplicateName)
                self.sorts.append(name.text)
                decls.append(SortDecl(name.text, span))
            elif self.at("sig"):
                self.advance()
                name = self.ident()
                if name.text in self.symbols:
                    self.error(f"symbol {name.text} declared twice", name, DuplicateName)
                self.expect(":")
                ty = self.type_()
                self.symbols[name.text] = ty
                decls.append(SigDecl(name.text, ty, span))
            elif self.at("rule"):
                self.advance()
                name = self.ident()
                if name.text in rule_names:
                    self.error(f"rule {name.text} declared twice", name, DuplicateName)
                rule_names.add(name.text)
                self.expect(":")
                ctx = self.context()
                self.expect("|-")
                lhs = self.term(ctx, [])
                arrow = self.expect("=>")
                rhs = self.term(ctx, [], unknown=lambda n: f"rhs free variable {n} not in lhs")
                extra = free_vars(rhs) - free_vars(lhs)
                if extra:
                    self.error(f"rhs free variable {sorted(extra)[0]} not in lhs", arrow)
                decls.append(RuleDecl(name.text, ctx, lhs, rhs, span))
            else:
                self.error(f"expected 'sort', 'sig' or 'rule', found {tok.text!r}")
        return decls


def parse_source(text: str, path: str | None = None) -> SourceFile:
    return SourceFile(path, tuple(Parser(text).declarations()))


def signature_of(decls: Sequence[Decl]) -> Signature:
    sorts = tuple(d.name for d in decls if isinstance(d, SortDecl))
    symbols = {d.name: d.type for d in decls if isinstance(d, SigDecl)}
    return Signature(sorts, symbols)


def parse_file(text: str, path: str | None = None):
    """Parse a ``.prs`` file into ``(Signature, PRS)``."""
    from .rewriting import PRS, Rule  # rewriting does not depend on syntax

    source = parse_source(text, path)
    sig = signature_of(source.declarations)
    rules = []
    for d in source.declarations:
        if isinstance(d, RuleDecl):
            try:
                rules.append(Rule.make(sig, d.name, d.context, d.lhs, d.rhs))
            except ParseError:
                raise
            except Exception as exc:  # typing errors surface as located diagnostics
                line, col = (d.span.line, d.span.column) if d.span else (0, 0)
                raise PrsSyntaxError(f"rule {d.name}: {exc}", line, col) from exc
    return sig, PRS(sig, tuple(rules))


def parse_type(text: str, sorts: Sequence[str]) -> Type:
    p = Parser(text, sorts)
    ty = p.type_()
    if not p.done():
        p.error(f"unexpected {p.tok.text!r} after type")
    return ty


def parse_context(text: str, sorts: Sequence[str]) -> Context:
    p = Parser(text, sorts)
    ctx = p.context()
    if not p.done():
        p.error(f"unexpected {p.tok.text!r} after context")
    return ctx


def parse_term(text: str, signature: Signature, context: Context = Context(), bound: Sequence[str] = ()) -> Term:
    """Parse a term; names in ``bound`` (outermost first) become loose indices."""
    p = Parser(text, signature.sorts, dict(signature.symbols))
    return p.term_eof(context, bound)


def parse_term_in_context(text: str, signature: Signature) -> tuple[Context, Term]:
    """``(x:U, y:U) |- term`` or a closed ``term``."""
    p = Parser(text, signature.sorts, dict(signature.symbols))
    ctx = Context()
    if "|-" in text:
        ctx = p.context()
        p.expect("|-")
    return ctx, p.term_eof(ctx)


# ---------------------------------------------------------------- printing


def show_type(ty: Type) -> str:
    match ty:
        case Unit():
            return "1"
        case Base(n):
            return n
        case Prod(a, b):
            left = f"({show_type(a)})" if isinstance(a, Arrow) else show_type(a)
            right = f"({show_type(b)})" if isinstance(b, (Arrow, Prod)) else show_type(b)
            return f"{left} * {right}"
        case Arrow(a, b):
            left = f"({show_type(a)})" if isinstance(a, Arrow) else show_type(a)
            return f"{left} -> {show_type(b)}"
    raise TypeError(ty)


def show_term(t: Term, bound: Sequence[str] = ()) -> str:
    """Render ``t``; ``bound`` names the loose indices, outermost first."""
    avoid = free_vars(t) | constants(t) | set(bound)
    return _Printer(avoid).term(t, list(bound))


class _Printer:
    def __init__(self, avoid: set[str]):
        self.avoid = avoid

    def term(self, t: Term, names: list[str]) -> str:
        if isinstance(t, Lam):
            name = fresh_name(t.hint or "x", self.avoid | set(names))
            names.append(name)
            try:
                body = self.term(t.body, names)
            finally:
                names.pop()
            return f"\\{name}:{show_type(t.ty)}. {body}"
        return self.app(t, names)

    def app(self, t: Term, names: list[str]) -> str:
        if isinstance(t, App):
            return f"{self.app(t.fun, names)} {self.atom(t.arg, names)}"
        return self.atom(t, names)

    def atom(self, t: Term, names: list[str]) -> str:
        match t:
            case Var(n) | Const(n):
                return n
            case Bound(k):
                return names[len(names) - 1 - k] if k < len(names) else f"?{k}"
            case UnitTerm():
                return "()"
            case Pair(a, b):
                return f"<{self.term(a, names)}, {self.term(b, names)}>"
            case Proj(i, a):
                return f"pr{i} {self.atom(a, names)}"
        return f"({self.term(t, names)})"


def show_context(ctx: Context) -> str:
    return "(" + ", ".join(f"{n}:{show_type(ty)}" for n, ty in ctx) + ")"


def show_position(pos: Sequence[int]) -> str:
    return "[" + ",".join(str(i) for i in pos) + "]"


def parse_position(text: str) -> tuple[int, ...]:
    s = text.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise PrsSyntaxError(f"position must look like [1,2], got {text!r}")
    inner = s[1:-1].strip()
    if not inner:
        return ()
    try:
        pos = tuple(int(p) for p in inner.split(","))
    except ValueError:
        raise PrsSyntaxError(f"bad position {text!r}") from None
    if any(p <= 0 for p in pos):
        raise PrsSyntaxError(f"positions are lists of positive integers, got {text!r}")
    return pos


def format_source(decls: Sequence[Decl]) -> str:
    lines = []
    for d in decls:
        match d:
            case SortDecl(name):
                lines.append(f"sort {name}")
            case SigDecl(name, ty):
                lines.append(f"sig {name} : {show_type(ty)}")
            case RuleDecl(name, ctx, lhs, rhs):
                lines.append(f"rule {name} : {show_context(ctx)} |- {show_term(lhs)} => {show_term(rhs)}")
    return "\n".join(lines) + ("\n" if lines else "")


def head_name(t: Term) -> str | None:
    h = spine(t)[0]
    return h.name if isinstance(h, (Var, Const)) else None
