"""Lexer and recursive-descent parser for ``.tsl`` specification files.

Concrete syntax::

    INITIALLY ASSUME   { ... }      ALWAYS ASSUME    { ... }
    INITIALLY GUARANTEE { ... }     ALWAYS GUARANTEE { ... }

Each block holds ``;``-separated formulas.  Optional ``INPUTS``,
``OUTPUTS`` and ``CELLS`` blocks list signal names and override inference.
A line comment ``//@ tag`` labels the formula that follows it.

Formula precedence, loosest first: ``<->``, ``->``, ``||``, ``&&``,
``U R W`` (right associative), unary ``! X F G``, atoms.  Updates are
written ``[o <- term]`` and application is juxtaposition ``f x (g y)``;
constants carry ``()``.  Infix sugar in terms is canonicalised to applied
literals: ``t + 1`` -> ``inc1 t``, ``t - 1`` -> ``dec1 t``, ``t + u`` ->
``add t u``, ``t - u`` -> ``sub t u``; comparisons in formula position map
to ``eq neq lt le gt ge``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ArityConflict, ClassificationError, ParseError, SignalAsLiteral
from .syntax import (
    FALSE,
    TRUE,
    And,
    Apply,
    Finally,
    Formula,
    Globally,
    Iff,
    Implies,
    Next,
    Not,
    Or,
    Pred,
    Release,
    SignalRef,
    Spec,
    Term,
    Until,
    Upd,
    WeakUntil,
    Atom,
    classify_signals,
    map_leaves,
    pretty,
)

KEYWORDS = {
    "X", "F", "G", "U", "R", "W", "true", "false",
    "INITIALLY", "ALWAYS", "ASSUME", "GUARANTEE", "INPUTS", "OUTPUTS", "CELLS",
}

COMPARISONS = {"=": "eq", "!=": "neq", "<": "lt", "<=": "le", ">": "gt", ">=": "ge"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<tag>//@[^\n]*)
  | (?P<comment>//[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<num>[0-9]+)
  | (?P<op><->|->|<-|<=|>=|!=|&&|\|\||[!()\[\]{};,=<>+\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, num, op, kw, tag, eof
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(
                "lexical", f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "tag":
            tokens.append(Token("tag", value[3:].strip(), line, col))
        elif kind == "ident":
            tokens.append(Token("kw" if value in KEYWORDS else "ident", value, line, col))
        elif kind in ("num", "op"):
            tokens.append(Token(kind, value, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.first_seen: dict[str, tuple[int, int]] = {}

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.advance()

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError("syntax", f"{message}, found {found}", tok.line, tok.column)

    def skip_tags(self) -> list[str]:
        tags = []
        while self.tok.kind == "tag":
            tags.append(self.advance().text)
        return tags

    def note(self, name: str, tok: Token) -> None:
        self.first_seen.setdefault(name, (tok.line, tok.column))

    # -- formulas ----------------------------------------------------------

    def formula(self) -> Formula:
        return self.iff()

    def iff(self) -> Formula:
        left = self.implies()
        if self.at("<->"):
            self.advance()
            return Iff(left, self.iff())
        return left

    def implies(self) -> Formula:
        left = self.disjunction()
        if self.at("->"):
            self.advance()
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.at("||"):
            self.advance()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.binary_temporal()
        while self.at("&&"):
            self.advance()
            left = And(left, self.binary_temporal())
        return left

    def binary_temporal(self) -> Formula:
        left = self.unary()
        for op, cls in (("U", Until), ("R", Release), ("W", WeakUntil)):
            if self.at(op):
                self.advance()
                return cls(left, self.binary_temporal())
        return left

    def unary(self) -> Formula:
        for op, cls in (("!", Not), ("X", Next), ("F", Finally), ("G", Globally)):
            if self.at(op):
                self.advance()
                return cls(self.unary())
        return self.atom()

    def atom(self) -> Formula:
        tok = self.tok
        if self.at("true"):
            self.advance()
            return TRUE
        if self.at("false"):
            self.advance()
            return FALSE
        if self.at("("):
            self.advance()
            inner = self.formula()
            self.expect(")")
            return inner
        if self.at("["):
            return self.update()
        if tok.kind in ("ident", "num"):
            left = self.term_expr()
            if self.tok.kind == "op" and self.tok.text in COMPARISONS:
                op = self.advance().text
                right = self.term_expr()
                return Pred(Apply(COMPARISONS[op], (left, right)))
            if isinstance(left, Apply) and left.literal.isdigit():
                self.error("numeral used as a predicate", tok)
            return Pred(left)
        self.error("expected a formula")

    def update(self) -> Formula:
        bracket = self.expect("[")
        tok = self.tok
        if tok.kind != "ident":
            self.error("expected an update target")
        self.advance()
        self.note(tok.text, tok)
        self.expect("<-")
        source = self.term_expr()
        if not self.at("]"):
            found = "end of input" if self.tok.kind == "eof" else repr(self.tok.text)
            raise ParseError(
                "syntax",
                f"unclosed '[' of update to {tok.text!r}, found {found}",
                bracket.line,
                bracket.column,
            )
        self.advance()
        return Upd(tok.text, source)

    # -- terms -------------------------------------------------------------

    def term_expr(self) -> Term:
        left = self.application()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            right = self.application()
            if right == Apply("1"):
                left = Apply("inc1" if op == "+" else "dec1", (left,))
            else:
                left = Apply("add" if op == "+" else "sub", (left, right))
        return left

    def application(self) -> Term:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Apply(str(int(tok.text)))
        if self.at("("):
            self.advance()
            inner = self.term_expr()
            self.expect(")")
            return inner
        if tok.kind != "ident":
            self.error("expected a term")
        self.advance()
        self.note(tok.text, tok)
        if self.at("(") and self.peek().kind == "op" and self.peek().text == ")":
            self.advance()
            self.advance()
            return Apply(tok.text)
        args = []
        while self.starts_argument():
            args.append(self.argument())
        if args:
            return Apply(tok.text, tuple(args))
        return SignalRef(tok.text)

    def starts_argument(self) -> bool:
        tok = self.tok
        return tok.kind in ("ident", "num") or self.at("(")

    def argument(self) -> Term:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Apply(str(int(tok.text)))
        if self.at("("):
            self.advance()
            inner = self.term_expr()
            self.expect(")")
            return inner
        self.advance()
        self.note(tok.text, tok)
        if self.at("(") and self.peek().kind == "op" and self.peek().text == ")":
            self.advance()
            self.advance()
            return Apply(tok.text)
        return SignalRef(tok.text)

    # -- files -------------------------------------------------------------

    def block(self, parse_item) -> list:
        self.expect("{")
        items = []
        while True:
            tags = self.skip_tags()
            if self.at("}"):
                break
            items.append((tags, parse_item()))
            tags = self.skip_tags()
            if self.at(";"):
                self.advance()
                continue
            if not self.at("}"):
                self.error("expected ';' or '}'")
        self.advance()
        return items

    def names_block(self) -> list[str]:
        self.expect("{")
        names = []
        while not self.at("}"):
            tok = self.tok
            if tok.kind != "ident":
                self.error("expected a signal name")
            self.advance()
            self.note(tok.text, tok)
            names.append(tok.text)
            if self.at(",") or self.at(";"):
                self.advance()
            elif not self.at("}"):
                self.error("expected ',' or '}'")
        self.advance()
        return names

    def spec(self) -> Spec:
        sections = {
            ("INITIALLY", "ASSUME"): "initial_assumptions",
            ("ALWAYS", "ASSUME"): "always_assumptions",
            ("INITIALLY", "GUARANTEE"): "initial_guarantees",
            ("ALWAYS", "GUARANTEE"): "always_guarantees",
        }
        declarations = {"INPUTS": "input", "OUTPUTS": "output", "CELLS": "cell"}
        collected: dict[str, list[Formula]] = {name: [] for name in sections.values()}
        labels: dict[str, tuple[str, int]] = {}
        declared: dict[str, str] = {}
        while True:
            self.skip_tags()
            tok = self.tok
            if tok.kind == "eof":
                break
            if tok.kind == "kw" and tok.text in declarations:
                self.advance()
                for name in self.names_block():
                    if declared.get(name, declarations[tok.text]) != declarations[tok.text]:
                        raise ParseError(
                            "classification", f"{name!r} declared twice", tok.line, tok.column
                        )
                    declared[name] = declarations[tok.text]
                continue
            if tok.kind == "kw" and tok.text in ("INITIALLY", "ALWAYS"):
                self.advance()
                second = self.tok
                key = (tok.text, second.text)
                if second.kind != "kw" or key not in sections:
                    self.error("expected ASSUME or GUARANTEE")
                self.advance()
                section = sections[key]
                for tags, formula in self.block(self.formula):
                    for tag in tags:
                        labels[tag] = (section, len(collected[section]))
                    collected[section].append(formula)
                continue
            self.error("expected a section header")

        formulas = [f for fs in collected.values() for f in fs]
        try:
            signals = classify_signals(formulas, declared)
        except ArityConflict as exc:
            line, col = self.first_seen.get(exc.literal, (1, 1))
            raise ParseError("arity", str(exc), line, col) from exc
        except (SignalAsLiteral, ClassificationError) as exc:
            line, col = self.first_seen.get(exc.name, (1, 1))
            raise ParseError("classification", str(exc), line, col) from exc
        return Spec(
            signals,
            *(tuple(collected[name]) for name in sections.values()),
            labels=labels,
        )


def parse_formula(text: str) -> Formula:
    parser = _Parser(text)
    parser.skip_tags()
    formula = parser.formula()
    parser.skip_tags()
    if parser.tok.kind != "eof":
        parser.error("unexpected trailing input")
    return formula


def parse_term(text: str) -> Term:
    parser = _Parser(text)
    term = parser.term_expr()
    if parser.tok.kind != "eof":
        parser.error("unexpected trailing input")
    return term


def parse_spec(text: str) -> Spec:
    return _Parser(text).spec()


def load_spec(path) -> Spec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


def parse_ltl(text: str) -> Formula:
    """Parse a plain LTL formula whose atoms are bare proposition names."""
    formula = parse_formula(text)

    def to_atom(leaf):
        if isinstance(leaf, Pred) and isinstance(leaf.term, SignalRef):
            return Atom(leaf.term.name)
        raise ParseError("syntax", f"not a proposition: {pretty(leaf)}")

    return map_leaves(formula, to_atom)
