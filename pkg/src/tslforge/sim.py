"""Execute CFAs under concrete interpretations and monitor TSL formulas on
the resulting finite traces.

Interpretation files (``.fun``) define function and predicate literals::

    // comments run to the end of the line
    fun step(x) = if x >= 7 then 0 else x + 1;
    fun ready(x, y) = x == y && !(y < 0);
    const init_counter = 0;

Expressions: integer and boolean literals, parameters, calls
``name(a, b)`` of other definitions or built-ins, ``+ - * / %``
(64-bit two's complement wrap-around, division truncates toward zero),
comparisons ``== != < <= > >=``, ``&& || !``, bitwise ``& | ^ << >>``
and ``if c then a else b``.

Numerals used as TSL constants (``0()``) evaluate to themselves.  The
literals produced by the parser's infix sugar (``inc1 dec1 add sub eq neq
lt le gt ge``) and ``mask`` are built in unless redefined.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .cfa import CFA
from .errors import (
    ArityMismatch,
    DivisionByZero,
    EvalTypeError,
    ParseError,
    UnboundLiteral,
    UnboundSignal,
)
from .syntax import (
    And,
    Apply,
    Atom,
    FalseF,
    Formula,
    Next,
    Not,
    Or,
    Pred,
    Release,
    SignalRef,
    Spec,
    Term,
    TrueF,
    Until,
    Upd,
    is_numeral,
    nnf,
    pretty_term,
)

WORD = 1 << 64
HALF = 1 << 63


def wrap(value: int) -> int:
    """Reduce to a signed 64-bit integer."""
    return (value + HALF) % WORD - HALF


def _int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise EvalTypeError(f"{what} expects an integer, got {value!r}")
    return value


def _bool(value, what: str) -> bool:
    if not isinstance(value, bool):
        raise EvalTypeError(f"{what} expects a boolean, got {value!r}")
    return value


def _div(a: int, b: int) -> int:
    if b == 0:
        raise DivisionByZero("division by zero")
    q = abs(a) // abs(b)
    return wrap(q if (a >= 0) == (b >= 0) else -q)


def _mod(a: int, b: int) -> int:
    if b == 0:
        raise DivisionByZero("division by zero")
    return wrap(a - _div(a, b) * b)


_ARITH = {
    "+": lambda a, b: wrap(a + b),
    "-": lambda a, b: wrap(a - b),
    "*": lambda a, b: wrap(a * b),
    "/": _div,
    "%": _mod,
    "&": lambda a, b: wrap(a & b),
    "|": lambda a, b: wrap(a | b),
    "^": lambda a, b: wrap(a ^ b),
    "<<": lambda a, b: wrap(a << (b & 63)),
    ">>": lambda a, b: a >> (b & 63),
}
_COMPARE = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


# --------------------------------------------------------------------------
# expression language


@dataclass(frozen=True)
class FunDef:
    name: str
    params: tuple
    body: tuple  # expression tree


@dataclass(frozen=True)
class Builtin:
    name: str
    arity: int
    fn: Callable


BUILTINS = {
    b.name: b
    for b in (
        Builtin("inc1", 1, lambda x: wrap(_int(x, "inc1") + 1)),
        Builtin("dec1", 1, lambda x: wrap(_int(x, "dec1") - 1)),
        Builtin("add", 2, lambda x, y: wrap(_int(x, "add") + _int(y, "add"))),
        Builtin("sub", 2, lambda x, y: wrap(_int(x, "sub") - _int(y, "sub"))),
        Builtin("eq", 2, lambda x, y: x == y),
        Builtin("neq", 2, lambda x, y: x != y),
        Builtin("lt", 2, lambda x, y: _int(x, "lt") < _int(y, "lt")),
        Builtin("le", 2, lambda x, y: _int(x, "le") <= _int(y, "le")),
        Builtin("gt", 2, lambda x, y: _int(x, "gt") > _int(y, "gt")),
        Builtin("ge", 2, lambda x, y: _int(x, "ge") >= _int(y, "ge")),
        Builtin("mask", 2, lambda x, bits: _int(x, "mask") & ((1 << _int(bits, "mask")) - 1)),
    )
}

_FUN_TOKEN = re.compile(
    r"\s+|//[^\n]*|(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<op>==|!=|<=|>=|<<|>>|&&|\|\||[-+*/%&|^<>!(),;=])"
)
_KEYWORDS = {"fun", "const", "if", "then", "else", "true", "false"}
_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
]


def _fun_tokens(text: str):
    pos, line, col0 = 0, 1, 0
    out = []
    while pos < len(text):
        m = _FUN_TOKEN.match(text, pos)
        if m is None:
            raise ParseError("lexical", f"unexpected character {text[pos]!r}", line, pos - col0 + 1)
        kind = m.lastgroup
        if kind:
            out.append((kind, m.group(), line, pos - col0 + 1))
        for i, ch in enumerate(m.group()):
            if ch == "\n":
                line += 1
                col0 = pos + i + 1
        pos = m.end()
    out.append(("eof", "", line, pos - col0 + 1))
    return out


class _FunParser:
    def __init__(self, text: str):
        self.toks = _fun_tokens(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def at(self, text):
        return self.tok[0] in ("op", "ident") and self.tok[1] == text

    def expect(self, text):
        if not self.at(text):
            self.fail(f"expected {text!r}")
        self.i += 1

    def fail(self, msg):
        kind, text, line, col = self.tok
        found = "end of input" if kind == "eof" else repr(text)
        raise ParseError("syntax", f"{msg}, found {found}", line, col)

    def name(self) -> str:
        kind, text, _, _ = self.tok
        if kind != "ident" or text in _KEYWORDS:
            self.fail("expected a name")
        self.i += 1
        return text

    def definitions(self) -> list[FunDef]:
        defs = []
        while self.tok[0] != "eof":
            if self.at("fun"):
                self.i += 1
                name = self.name()
                self.expect("(")
                params = []
                while not self.at(")"):
                    params.append(self.name())
                    if not self.at(")"):
                        self.expect(",")
                self.expect(")")
            elif self.at("const"):
                self.i += 1
                name, params = self.name(), []
            else:
                self.fail("expected 'fun' or 'const'")
            self.expect("=")
            body = self.expr()
            self.expect(";")
            defs.append(FunDef(name, tuple(params), body))
        return defs

    def expr(self):
        if self.at("if"):
            self.i += 1
            cond = self.expr()
            self.expect("then")
            yes = self.expr()
            self.expect("else")
            return ("if", cond, yes, self.expr())
        return self.binary(0)

    def binary(self, level):
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.binary(level + 1)
        while self.tok[0] == "op" and self.tok[1] in _BINARY_LEVELS[level]:
            op = self.tok[1]
            self.i += 1
            left = ("bin", op, left, self.binary(level + 1))
        return left

    def unary(self):
        if self.at("!"):
            self.i += 1
            return ("not", self.unary())
        if self.at("-"):
            self.i += 1
            return ("neg", self.unary())
        return self.primary()

    def primary(self):
        kind, text, _, _ = self.tok
        if kind == "num":
            self.i += 1
            return ("lit", wrap(int(text)))
        if self.at("true") or self.at("false"):
            self.i += 1
            return ("lit", text == "true")
        if self.at("("):
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        name = self.name()
        if self.at("("):
            self.i += 1
            args = []
            while not self.at(")"):
                args.append(self.expr())
                if not self.at(")"):
                    self.expect(",")
            self.expect(")")
            return ("call", name, tuple(args))
        return ("var", name)


def parse_fun(text: str) -> "Interpretation":
    interp = Interpretation()
    for d in _FunParser(text).definitions():
        interp.define(d)
    return interp


def load_fun(path) -> "Interpretation":
    with open(path, encoding="utf-8") as fh:
        return parse_fun(fh.read())


# --------------------------------------------------------------------------
# interpretations


@dataclass
class Interpretation:
    """Maps literal names to definitions; see the module docstring."""

    definitions: dict = field(default_factory=dict)

    def define(self, d: "FunDef | Builtin") -> None:
        self.definitions[d.name] = d

    def lookup(self, name: str):
        d = self.definitions.get(name)
        if d is None:
            d = BUILTINS.get(name)
        if d is None:
            raise UnboundLiteral(name)
        return d

    def has(self, name: str) -> bool:
        return name in self.definitions or name in BUILTINS

    def call(self, name: str, args: Sequence):
        if is_numeral(name):
            if args:
                raise ArityMismatch(name, 0, len(args))
            return wrap(int(name))
        d = self.lookup(name)
        arity = d.arity if isinstance(d, Builtin) else len(d.params)
        if arity != len(args):
            raise ArityMismatch(name, arity, len(args))
        if isinstance(d, Builtin):
            return d.fn(*args)
        return self._eval(d.body, dict(zip(d.params, args)), 0)

    def _eval(self, e, scope, depth):
        if depth > 500:
            raise EvalTypeError("recursion too deep")
        tag = e[0]
        if tag == "lit":
            return e[1]
        if tag == "var":
            if e[1] in scope:
                return scope[e[1]]
            return self.call(e[1], ())
        if tag == "call":
            args = [self._eval(a, scope, depth + 1) for a in e[2]]
            return self.call(e[1], args)
        if tag == "not":
            return not _bool(self._eval(e[1], scope, depth + 1), "!")
        if tag == "neg":
            return wrap(-_int(self._eval(e[1], scope, depth + 1), "-"))
        if tag == "if":
            cond = _bool(self._eval(e[1], scope, depth + 1), "if")
            return self._eval(e[2] if cond else e[3], scope, depth + 1)
        op = e[1]
        if op == "&&":
            return _bool(self._eval(e[2], scope, depth + 1), op) and _bool(
                self._eval(e[3], scope, depth + 1), op
            )
        if op == "||":
            return _bool(self._eval(e[2], scope, depth + 1), op) or _bool(
                self._eval(e[3], scope, depth + 1), op
            )
        a = self._eval(e[2], scope, depth + 1)
        b = self._eval(e[3], scope, depth + 1)
        if op == "==":
            return a == b and type(a) is type(b)
        if op == "!=":
            return not (a == b and type(a) is type(b))
        if op in _COMPARE:
            return _COMPARE[op](_int(a, op), _int(b, op))
        return _ARITH[op](_int(a, op), _int(b, op))


def _digest(*parts) -> int:
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


def literal_kinds(predicates: Iterable[Term], terms: Iterable[Term]) -> dict[str, tuple[int, str]]:
    """Arity and kind (``predicate`` or ``function``) of every literal."""
    kinds: dict[str, tuple[int, str]] = {}

    def visit(t: Term, head_kind: str):
        if isinstance(t, Apply):
            if not is_numeral(t.literal):
                kinds.setdefault(t.literal, (len(t.args), head_kind))
            for a in t.args:
                visit(a, "function")

    for p in predicates:
        visit(p, "predicate")
    for t in terms:
        visit(t, "function")
    return kinds


def random_interpretation(
    kinds: Mapping[str, tuple[int, str]],
    cells: Iterable[str] = (),
    seed: int = 0,
    value_range: int = 8,
    keep_builtins: bool = True,
) -> Interpretation:
    """A deterministic pseudo-random interpretation.

    Functions map their arguments to ``0 .. value_range-1`` and predicates
    to booleans by hashing ``(seed, name, args)``.  Cell initializers get a
    hashed constant.  Built-in literals keep their meaning unless
    ``keep_builtins`` is false.
    """
    interp = Interpretation()

    def make(name, arity, kind):
        if kind == "predicate":
            return Builtin(name, arity, lambda *a: bool(_digest(seed, name, a) & 1))
        return Builtin(name, arity, lambda *a: _digest(seed, name, a) % value_range)

    for name, (arity, kind) in sorted(kinds.items()):
        if keep_builtins and name in BUILTINS:
            continue
        interp.define(make(name, arity, kind))
    for c in cells:
        name = f"init_{c}"
        interp.define(Builtin(name, 0, lambda n=name: _digest(seed, n) % value_range))
    return interp


# --------------------------------------------------------------------------
# terms


def eval_term(term: Term, env: Mapping, interp: Interpretation):
    if isinstance(term, SignalRef):
        if term.name not in env:
            raise UnboundSignal(term.name)
        return env[term.name]
    args = [eval_term(a, env, interp) for a in term.args]
    return interp.call(term.literal, args)


def eval_predicate(term: Term, env: Mapping, interp: Interpretation) -> bool:
    value = eval_term(term, env, interp)
    if not isinstance(value, bool):
        raise EvalTypeError(f"predicate {pretty_term(term)} returned {value!r}")
    return value


# --------------------------------------------------------------------------
# execution


@dataclass(frozen=True)
class Step:
    inputs: dict
    updates: dict  # target -> Term
    values: dict  # outputs and cells after the step
    state: int  # control state before the step


@dataclass
class Trace:
    """A finite run; ``initial`` holds the memory before step 0."""

    initial: dict
    steps: list

    def __len__(self):
        return len(self.steps)

    def env(self, t: int) -> dict:
        """Values visible at step ``t``: inputs plus pre-step memory."""
        memory = self.initial if t == 0 else self.steps[t - 1].values
        return {**memory, **self.steps[t].inputs}

    def to_jsonl(self) -> str:
        lines = [json.dumps({"initial": self.initial}, sort_keys=True)]
        for i, s in enumerate(self.steps):
            lines.append(
                json.dumps(
                    {
                        "step": i,
                        "state": s.state,
                        "inputs": s.inputs,
                        "updates": {t: pretty_term(u) for t, u in s.updates.items()},
                        "values": s.values,
                    },
                    sort_keys=True,
                )
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        from .parser import parse_term

        lines = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not lines or "initial" not in lines[0]:
            raise ValueError("trace must start with an initial-memory line")
        steps = [
            Step(
                d["inputs"],
                {t: parse_term(u) for t, u in d["updates"].items()},
                d["values"],
                d.get("state", 0),
            )
            for d in lines[1:]
        ]
        return cls(lines[0]["initial"], steps)


def initial_memory(cfa: CFA, interp: Interpretation) -> dict:
    """Cells start at their initializer; outputs at ``init_<o>`` when
    defined, else 0, so that holding an output at step 0 is meaningful."""
    memory = {}
    for cell, init in cfa.cells:
        memory[cell] = interp.call(init, ())
    for out in cfa.outputs:
        name = f"init_{out}"
        memory[out] = interp.call(name, ()) if interp.has(name) else 0
    return memory


def step_cfa(cfa: CFA, interp: Interpretation, state: int, memory: Mapping, inputs: Mapping):
    """One synchronous step.

    Returns ``(next_state, next_memory, outputs, chosen_updates)``.  All
    selected terms read the pre-step memory.
    """
    for name in cfa.inputs:
        if name not in inputs:
            raise UnboundSignal(name)
    env = {**memory, **inputs}
    valuation = tuple(eval_predicate(p, env, interp) for p in cfa.predicates)
    chosen, nxt = cfa.step(state, valuation)
    values = {target: eval_term(term, env, interp) for target, term in chosen.items()}
    new_memory = {**memory, **values}
    outputs = {o: values[o] for o in cfa.outputs}
    return nxt, new_memory, outputs, chosen


def run(cfa: CFA, interp: Interpretation, input_trace: Iterable[Mapping]) -> Trace:
    memory = initial_memory(cfa, interp)
    trace = Trace(dict(memory), [])
    state = cfa.initial_state
    for inputs in input_trace:
        inputs = dict(inputs)
        nxt, memory, _, chosen = step_cfa(cfa, interp, state, memory, inputs)
        if sorted(chosen) != list(cfa.targets):
            raise AssertionError("CFA must choose exactly one update per target")
        trace.steps.append(Step(inputs, chosen, {k: memory[k] for k in sorted(memory)}, state))
        state = nxt
    if not trace.steps:
        raise ValueError("input trace is empty")
    return trace


def boolean_inputs(cfa: CFA) -> set[str]:
    """Inputs used directly as predicates; they carry booleans."""
    return {
        p.name for p in cfa.predicates if isinstance(p, SignalRef) and p.name in cfa.inputs
    }


def random_inputs(cfa: CFA, steps: int, seed: int = 0, value_range: int = 8) -> list[dict]:
    rng = random.Random(seed)
    flags = boolean_inputs(cfa)
    trace = []
    for _ in range(steps):
        trace.append(
            {
                name: (rng.random() < 0.5) if name in flags else rng.randrange(value_range)
                for name in cfa.inputs
            }
        )
    return trace


def load_inputs(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]


# --------------------------------------------------------------------------
# monitoring

SATISFIED = "Satisfied"
VIOLATED = "Violated"
UNDETERMINED = "Undetermined"


def _leaf_values(leaf: Formula, trace: Trace, interp: Interpretation) -> list[bool]:
    n = len(trace)
    if isinstance(leaf, Upd):
        return [trace.steps[t].updates.get(leaf.target) == leaf.term for t in range(n)]
    if isinstance(leaf, Pred):
        return [eval_predicate(leaf.term, trace.env(t), interp) for t in range(n)]
    if isinstance(leaf, Atom):
        raise TypeError("monitoring needs TSL leaves, not propositions")
    raise TypeError(f"unexpected leaf {leaf!r}")


def _evaluate(f: Formula, n: int, leaf_cache, beyond: bool) -> list[bool]:
    """Truth values of an NNF formula at positions ``0..n-1`` when every
    obligation that reaches past the end counts as ``beyond``."""
    memo: dict = {}

    def ev(g) -> list[bool]:
        if g in memo:
            return memo[g]
        if isinstance(g, TrueF):
            res = [True] * n
        elif isinstance(g, FalseF):
            res = [False] * n
        elif isinstance(g, (Upd, Pred)):
            res = leaf_cache(g)
        elif isinstance(g, Not):
            res = [not x for x in leaf_cache(g.arg)]
        elif isinstance(g, And):
            res = [a and b for a, b in zip(ev(g.left), ev(g.right))]
        elif isinstance(g, Or):
            res = [a or b for a, b in zip(ev(g.left), ev(g.right))]
        elif isinstance(g, Next):
            a = ev(g.arg)
            res = a[1:] + [beyond]
        elif isinstance(g, (Until, Release)):
            a, b = ev(g.left), ev(g.right)
            res = [False] * n
            later = beyond
            for t in reversed(range(n)):
                if isinstance(g, Until):
                    later = b[t] or (a[t] and later)
                else:
                    later = b[t] and (a[t] or later)
                res[t] = later
        else:
            raise TypeError(f"formula not in negation normal form: {g!r}")
        memo[g] = res
        return res

    return ev(f)


def monitor(formula: Formula, trace: Trace, interp: Interpretation) -> str:
    """Three-valued verdict of ``formula`` at the start of ``trace``.

    The formula is put in negation normal form, which is monotone in
    its temporal obligations.  Evaluating with all obligations past the end
    false gives a lower bound and with all true an upper bound on every
    infinite extension: a true lower bound means Satisfied, a false upper
    bound Violated.  The bounds are sound but not always tight.
    """
    if not trace.steps:
        return UNDETERMINED
    cache: dict = {}

    def leaf(g):
        if g not in cache:
            cache[g] = _leaf_values(g, trace, interp)
        return cache[g]

    normal = nnf(formula)
    n = len(trace)
    if _evaluate(normal, n, leaf, beyond=False)[0]:
        return SATISFIED
    if not _evaluate(normal, n, leaf, beyond=True)[0]:
        return VIOLATED
    return UNDETERMINED


def spec_obligations(spec: Spec) -> tuple[list, list]:
    """Assumptions and guarantees as individual formulas checked at step 0;
    always-sections are wrapped in ``G``."""
    from .syntax import Globally

    assumptions = list(spec.initial_assumptions) + [Globally(f) for f in spec.always_assumptions]
    guarantees = list(spec.initial_guarantees) + [Globally(f) for f in spec.always_guarantees]
    return assumptions, guarantees
