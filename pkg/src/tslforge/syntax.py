"""TSL abstract syntax: terms, formulas, signal classification, desugaring
and canonical pretty printing.

The same formula node classes carry both TSL formulas (whose leaves are
:class:`Pred` and :class:`Upd`) and plain LTL formulas over atomic
propositions (whose leaves are :class:`Atom`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import ArityConflict, ClassificationError, SignalAsLiteral


# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class SignalRef:
    name: str


@dataclass(frozen=True)
class Apply:
    literal: str
    args: tuple = ()


Term = Union[SignalRef, Apply]


def is_numeral(literal: str) -> bool:
    return literal.isdigit()


def term_signals(term: Term) -> Iterator[str]:
    if isinstance(term, SignalRef):
        yield term.name
    else:
        for arg in term.args:
            yield from term_signals(arg)


def term_literals(term: Term) -> Iterator[tuple[str, int]]:
    if isinstance(term, Apply):
        yield term.literal, len(term.args)
        for arg in term.args:
            yield from term_literals(arg)


# --------------------------------------------------------------------------
# formulas


class Formula:
    """Base class of all formula nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True, repr=False)
class _Node(Formula):
    def __repr__(self) -> str:
        return f"{type(self).__name__}({pretty(self)!r})"


@dataclass(frozen=True, repr=False)
class TrueF(_Node):
    pass


@dataclass(frozen=True, repr=False)
class FalseF(_Node):
    pass


@dataclass(frozen=True, repr=False)
class Pred(_Node):
    term: Term


@dataclass(frozen=True, repr=False)
class Upd(_Node):
    target: str
    term: Term

    @property
    def is_self_update(self) -> bool:
        return self.term == SignalRef(self.target)


@dataclass(frozen=True, repr=False)
class Atom(_Node):
    name: str


@dataclass(frozen=True, repr=False)
class Not(_Node):
    arg: Formula


@dataclass(frozen=True, repr=False)
class Next(_Node):
    arg: Formula


@dataclass(frozen=True, repr=False)
class Finally(_Node):
    arg: Formula


@dataclass(frozen=True, repr=False)
class Globally(_Node):
    arg: Formula


@dataclass(frozen=True, repr=False)
class And(_Node):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class Or(_Node):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class Implies(_Node):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class Iff(_Node):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class Until(_Node):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class Release(_Node):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class WeakUntil(_Node):
    left: Formula
    right: Formula


TRUE = TrueF()
FALSE = FalseF()

UNARY = (Not, Next, Finally, Globally)
BINARY = (And, Or, Implies, Iff, Until, Release, WeakUntil)
LEAVES = (TrueF, FalseF, Pred, Upd, Atom)
TEMPORAL = (Next, Finally, Globally, Until, Release, WeakUntil)
CORE = (Pred, Upd, Atom, TrueF, Not, And, Next, Until)


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, UNARY):
        return (f.arg,)
    if isinstance(f, BINARY):
        return (f.left, f.right)
    return ()


def rebuild(f: Formula, kids: Sequence[Formula]) -> Formula:
    if isinstance(f, UNARY):
        return type(f)(kids[0])
    if isinstance(f, BINARY):
        return type(f)(kids[0], kids[1])
    return f


def walk(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def leaves(f: Formula) -> set[Formula]:
    return {n for n in walk(f) if isinstance(n, (Pred, Upd, Atom))}


def is_temporal(f: Formula) -> bool:
    return any(isinstance(n, TEMPORAL) for n in walk(f))


def conj(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


def disjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, Or):
        return disjuncts(f.left) + disjuncts(f.right)
    return [f]


def map_leaves(f: Formula, fn) -> Formula:
    if isinstance(f, (Pred, Upd, Atom)):
        return fn(f)
    kids = children(f)
    if not kids:
        return f
    return rebuild(f, [map_leaves(k, fn) for k in kids])


# --------------------------------------------------------------------------
# desugaring and negation normal form


def _neg(f: Formula) -> Formula:
    return f.arg if isinstance(f, Not) else Not(f)


def desugar(f: Formula) -> Formula:
    """Rewrite ``f`` into the core connectives Not/And/Next/Until/True.

    Double negations are collapsed, which makes the rewrite idempotent.
    """
    if isinstance(f, (Pred, Upd, Atom, TrueF)):
        return f
    if isinstance(f, FalseF):
        return Not(TRUE)
    if isinstance(f, Not):
        return _neg(desugar(f.arg))
    if isinstance(f, Next):
        return Next(desugar(f.arg))
    if isinstance(f, Finally):
        return Until(TRUE, desugar(f.arg))
    if isinstance(f, Globally):
        return desugar(Release(FALSE, f.arg))
    left, right = desugar(f.left), desugar(f.right)
    if isinstance(f, And):
        return And(left, right)
    if isinstance(f, Until):
        return Until(left, right)
    if isinstance(f, Or):
        return _neg(And(_neg(left), _neg(right)))
    if isinstance(f, Implies):
        return _neg(And(left, _neg(right)))
    if isinstance(f, Iff):
        return And(_neg(And(left, _neg(right))), _neg(And(right, _neg(left))))
    if isinstance(f, Release):
        return _neg(Until(_neg(left), _neg(right)))
    if isinstance(f, WeakUntil):
        return desugar(Or(Until(f.left, f.right), Globally(f.left)))
    raise TypeError(f"not a formula: {f!r}")


def nnf(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form over literals, And, Or, Next, Until, Release."""
    if isinstance(f, TrueF):
        return FALSE if negate else TRUE
    if isinstance(f, FalseF):
        return TRUE if negate else FALSE
    if isinstance(f, (Pred, Upd, Atom)):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return nnf(f.arg, not negate)
    if isinstance(f, Next):
        return Next(nnf(f.arg, negate))
    if isinstance(f, Finally):
        inner = nnf(f.arg, negate)
        return Release(FALSE, inner) if negate else Until(TRUE, inner)
    if isinstance(f, Globally):
        inner = nnf(f.arg, negate)
        return Until(TRUE, inner) if negate else Release(FALSE, inner)
    if isinstance(f, And):
        op = Or if negate else And
        return op(nnf(f.left, negate), nnf(f.right, negate))
    if isinstance(f, Or):
        op = And if negate else Or
        return op(nnf(f.left, negate), nnf(f.right, negate))
    if isinstance(f, Implies):
        return nnf(Or(Not(f.left), f.right), negate)
    if isinstance(f, Iff):
        both = And(f.left, f.right)
        neither = And(Not(f.left), Not(f.right))
        return nnf(Or(both, neither), negate)
    if isinstance(f, Until):
        if negate:
            return Release(nnf(f.left, True), nnf(f.right, True))
        return Until(nnf(f.left), nnf(f.right))
    if isinstance(f, Release):
        if negate:
            return Until(nnf(f.left, True), nnf(f.right, True))
        return Release(nnf(f.left), nnf(f.right))
    if isinstance(f, WeakUntil):
        # a W b == b R (a || b)
        return nnf(Release(f.right, Or(f.left, f.right)), negate)
    raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# pretty printing

# binding strength; larger binds tighter
PRECEDENCE = {
    Iff: 1,
    Implies: 2,
    Or: 3,
    And: 4,
    Until: 5,
    Release: 5,
    WeakUntil: 5,
}
RIGHT_ASSOC = (Iff, Implies, Until, Release, WeakUntil)
UNARY_PREC = 6
ATOM_PREC = 7

SYMBOL = {
    Iff: "<->",
    Implies: "->",
    Or: "||",
    And: "&&",
    Until: "U",
    Release: "R",
    WeakUntil: "W",
    Not: "!",
    Next: "X ",
    Finally: "F ",
    Globally: "G ",
}


def pretty_term(term: Term) -> str:
    if isinstance(term, SignalRef):
        return term.name
    if not term.args:
        return term.literal if is_numeral(term.literal) else f"{term.literal}()"
    return " ".join([term.literal] + [_term_arg(a) for a in term.args])


def _term_arg(term: Term) -> str:
    if isinstance(term, Apply) and term.args:
        return f"({pretty_term(term)})"
    return pretty_term(term)


def _prec(f: Formula) -> int:
    if isinstance(f, UNARY):
        return UNARY_PREC
    if isinstance(f, BINARY):
        return PRECEDENCE[type(f)]
    return ATOM_PREC


def pretty(f: Formula) -> str:
    """Canonical concrete syntax with minimal parentheses."""
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Pred):
        return pretty_term(f.term)
    if isinstance(f, Upd):
        return f"[{f.target} <- {pretty_term(f.term)}]"
    if isinstance(f, UNARY):
        inner = pretty(f.arg)
        if _prec(f.arg) < UNARY_PREC:
            inner = f"({inner})"
        return SYMBOL[type(f)] + inner
    prec = PRECEDENCE[type(f)]
    right_assoc = isinstance(f, RIGHT_ASSOC)
    left, right = pretty(f.left), pretty(f.right)
    lp, rp = _prec(f.left), _prec(f.right)
    if lp < prec or (lp == prec and right_assoc):
        left = f"({left})"
    if rp < prec or (rp == prec and not right_assoc):
        right = f"({right})"
    return f"{left} {SYMBOL[type(f)]} {right}"


# --------------------------------------------------------------------------
# signals and specifications


@dataclass(frozen=True)
class SignalTable:
    inputs: frozenset = frozenset()
    outputs: frozenset = frozenset()
    cells: frozenset = frozenset()
    literal_arities: Mapping[str, int] = field(default_factory=dict)

    @property
    def updatable(self) -> list[str]:
        return sorted(self.outputs | self.cells)

    def kind(self, name: str) -> str | None:
        for kind, group in (
            ("input", self.inputs),
            ("output", self.outputs),
            ("cell", self.cells),
        ):
            if name in group:
                return kind
        return None


def _scan(formulas: Iterable[Formula]):
    reads: set[str] = set()
    targets: set[str] = set()
    literals: dict[str, set[int]] = {}
    for formula in formulas:
        for node in walk(formula):
            if isinstance(node, Upd):
                targets.add(node.target)
                if not node.is_self_update:
                    reads.update(term_signals(node.term))
                terms = [node.term]
            elif isinstance(node, Pred):
                reads.update(term_signals(node.term))
                terms = [node.term]
            else:
                continue
            for term in terms:
                for name, arity in term_literals(term):
                    if not is_numeral(name):
                        literals.setdefault(name, set()).add(arity)
    return reads, targets, literals


def classify_signals(
    formulas: Iterable[Formula],
    declared: Mapping[str, str] | None = None,
) -> SignalTable:
    """Infer inputs, outputs and cells from how names are used.

    A signal that is read inside a term and also updated is a cell,
    updated-only signals are outputs and read-only signals are inputs.
    Reads inside a self-update ``[s <- s]`` do not count, so an output may
    hold its value without becoming a cell.  ``declared`` maps names to
    ``"input"``, ``"output"`` or ``"cell"`` and overrides inference where
    the two are compatible.
    """
    reads, targets, literals = _scan(formulas)
    for name, arities in sorted(literals.items()):
        if len(arities) > 1:
            raise ArityConflict(name, sorted(arities))
    for name in sorted(literals):
        if name in reads or name in targets:
            raise SignalAsLiteral(name)

    kinds: dict[str, str] = {}
    for name in reads | targets:
        if name in reads and name in targets:
            kinds[name] = "cell"
        elif name in targets:
            kinds[name] = "output"
        else:
            kinds[name] = "input"

    for name, kind in sorted((declared or {}).items()):
        if name in literals:
            raise SignalAsLiteral(name)
        inferred = kinds.get(name)
        if kind == "input" and name in targets:
            raise ClassificationError(name, f"declared input {name!r} is updated")
        if kind == "output" and inferred == "cell":
            raise ClassificationError(name, f"declared output {name!r} is read")
        if kind == "cell" and inferred == "input":
            raise ClassificationError(name, f"declared cell {name!r} is never updated")
        kinds[name] = kind

    def group(kind):
        return frozenset(n for n, k in kinds.items() if k == kind)

    return SignalTable(
        inputs=group("input"),
        outputs=group("output"),
        cells=group("cell"),
        literal_arities={n: next(iter(a)) for n, a in sorted(literals.items())},
    )


SECTIONS = (
    "initial_assumptions",
    "always_assumptions",
    "initial_guarantees",
    "always_guarantees",
)


@dataclass(frozen=True)
class Spec:
    """A classified TSL specification.

    Its meaning is ``(init_assm && G alw_assm) -> (init_guar && G alw_guar)``.
    ``labels`` maps formula tags (from ``//@ tag`` comments) to
    ``(section, index)`` positions.
    """

    signals: SignalTable
    initial_assumptions: tuple = ()
    always_assumptions: tuple = ()
    initial_guarantees: tuple = ()
    always_guarantees: tuple = ()
    labels: Mapping[str, tuple[str, int]] = field(default_factory=dict)

    def formulas(self) -> list[Formula]:
        return [f for section in SECTIONS for f in getattr(self, section)]

    def labelled(self, label: str) -> Formula:
        section, index = self.labels[label]
        return getattr(self, section)[index]

    def as_formula(self) -> Formula:
        assume = conj(
            list(self.initial_assumptions)
            + [Globally(f) for f in self.always_assumptions]
        )
        guarantee = conj(
            list(self.initial_guarantees)
            + [Globally(f) for f in self.always_guarantees]
        )
        if not self.initial_assumptions and not self.always_assumptions:
            return guarantee
        return Implies(assume, guarantee)


def make_spec(
    initial_assumptions: Sequence[Formula] = (),
    always_assumptions: Sequence[Formula] = (),
    initial_guarantees: Sequence[Formula] = (),
    always_guarantees: Sequence[Formula] = (),
    declared: Mapping[str, str] | None = None,
    labels: Mapping[str, tuple[str, int]] | None = None,
) -> Spec:
    parts = [initial_assumptions, always_assumptions, initial_guarantees, always_guarantees]
    signals = classify_signals([f for part in parts for f in part], declared)
    return Spec(signals, *(tuple(p) for p in parts), labels=dict(labels or {}))
