"""Under-approximate a TSL specification by LTL over update/predicate
propositions.

Every syntactically distinct predicate term becomes an uncontrollable
proposition and every distinct update becomes a controllable one.  Each
output and cell gets an update group, and the guarantees are strengthened
with ``G exactly-one(group)`` for every group.

Predicate propositions are free environment variables, even when the term
reads a cell.  The environment can therefore choose valuations that no real
implementation would produce, which can make a realizable TSL spec look
unrealizable.  No refinement loop is attempted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EmptyUpdateGroup
from .syntax import (
    FALSE,
    Atom,
    Formula,
    Globally,
    Implies,
    Not,
    Or,
    Pred,
    SignalRef,
    Spec,
    Upd,
    conj,
    conjuncts,
    disj,
    is_temporal,
    map_leaves,
    pretty,
    pretty_term,
    walk,
)


@dataclass(frozen=True)
class APEntry:
    id: str
    binding: Formula  # Upd or Pred
    group: str | None = None  # target signal for update propositions

    @property
    def kind(self) -> str:
        return "update" if isinstance(self.binding, Upd) else "predicate"


@dataclass(frozen=True)
class APTable:
    entries: tuple
    update_groups: dict = field(default_factory=dict)

    @property
    def controllable(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entries if e.kind == "update")

    @property
    def uncontrollable(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entries if e.kind == "predicate")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entries)

    def entry(self, ap: str) -> APEntry:
        for e in self.entries:
            if e.id == ap:
                return e
        raise KeyError(ap)

    def lookup(self, binding: Formula) -> str:
        for e in self.entries:
            if e.binding == binding:
                return e.id
        raise KeyError(pretty(binding))

    def to_json(self) -> list[dict]:
        return [
            {
                "id": e.id,
                "kind": e.kind,
                "term": pretty(e.binding),
                "group": e.group,
            }
            for e in self.entries
        ]


@dataclass(frozen=True)
class Encoding:
    """The encoded specification, kept in pieces for the synthesizer."""

    aps: APTable
    assumptions: tuple  # LTL conjuncts
    guarantees: tuple
    exclusivity: tuple  # one G exactly-one(...) per group

    @property
    def formula(self) -> Formula:
        guarantee = conj(list(self.guarantees) + list(self.exclusivity))
        if not self.assumptions:
            return guarantee
        return Implies(conj(self.assumptions), guarantee)

    @property
    def core_formula(self) -> Formula:
        """The encoding without the exclusivity constraints.

        Synthesized machines satisfy exclusivity by construction, so on
        them this is equivalent to :attr:`formula`.
        """
        guarantee = conj(self.guarantees)
        if not self.assumptions:
            return guarantee
        return Implies(conj(self.assumptions), guarantee)


def exactly_one(atoms: list[Formula]) -> Formula:
    if not atoms:
        return FALSE
    pairs = [
        Not(conj([atoms[i], atoms[j]]))
        for i in range(len(atoms))
        for j in range(i + 1, len(atoms))
    ]
    return conj([disj(atoms)] + pairs)


def collect_terms(spec: Spec) -> tuple[list[Pred], dict[str, list[Upd]]]:
    preds: set[Pred] = set()
    updates: dict[str, set[Upd]] = {}
    for formula in spec.formulas():
        for node in walk(formula):
            if isinstance(node, Pred):
                preds.add(node)
            elif isinstance(node, Upd):
                updates.setdefault(node.target, set()).add(node)
    ordered_preds = sorted(preds, key=lambda p: pretty_term(p.term))
    groups = {t: sorted(us, key=pretty) for t, us in sorted(updates.items())}
    return ordered_preds, groups


def build_aps(spec: Spec, hold_outputs: bool = True) -> APTable:
    preds, occurring = collect_terms(spec)
    entries = []
    groups: dict[str, list[str]] = {}
    counter = 0
    for target in spec.signals.updatable:
        updates = list(occurring.get(target, []))
        if not updates:
            raise EmptyUpdateGroup(target)
        if target in spec.signals.cells or hold_outputs:
            hold = Upd(target, SignalRef(target))
            if hold not in updates:
                updates.append(hold)
        updates.sort(key=pretty)
        ids = []
        for upd in updates:
            ap = f"u{counter}"
            counter += 1
            entries.append(APEntry(ap, upd, target))
            ids.append(ap)
        groups[target] = ids
    for index, pred in enumerate(preds):
        entries.append(APEntry(f"p{index}", pred))
    return APTable(tuple(entries), groups)


def to_ltl(formula: Formula, aps: APTable) -> Formula:
    table = {e.binding: e.id for e in aps.entries}
    return map_leaves(formula, lambda leaf: Atom(table[leaf]))


def encode_parts(spec: Spec, hold_outputs: bool = True) -> Encoding:
    """Encode ``spec``.

    With ``hold_outputs`` every output may keep its previous value through
    the implicit self-update ``[o <- o]``; cells always may.
    """
    aps = build_aps(spec, hold_outputs)
    assumptions = [to_ltl(f, aps) for f in spec.initial_assumptions] + [
        Globally(to_ltl(f, aps)) for f in spec.always_assumptions
    ]
    guarantees = [to_ltl(f, aps) for f in spec.initial_guarantees] + [
        Globally(to_ltl(f, aps)) for f in spec.always_guarantees
    ]
    exclusivity = [
        Globally(exactly_one([Atom(ap) for ap in ids]))
        for ids in aps.update_groups.values()
    ]
    return Encoding(aps, tuple(assumptions), tuple(guarantees), tuple(exclusivity))


def encode(spec: Spec, hold_outputs: bool = True) -> tuple[Formula, APTable]:
    enc = encode_parts(spec, hold_outputs)
    return enc.formula, enc.aps


def ap_statistics(spec: Spec) -> tuple[int, int, dict[str, list[str]]]:
    """Count distinct predicate and update terms as they occur in ``spec``.

    Groups list the occurring updates per target, in canonical order, named
    by their pretty-printed form.  Implicit self-updates are not counted.
    """
    preds, groups = collect_terms(spec)
    named = {t: [pretty(u) for u in us] for t, us in groups.items()}
    return len(preds), sum(len(us) for us in groups.values()), named


def encoding_document(enc: Encoding) -> dict:
    return {
        "formula": pretty(enc.formula),
        "aps": enc.aps.to_json(),
        "controllable": list(enc.aps.controllable),
        "uncontrollable": list(enc.aps.uncontrollable),
    }


def lt_counts(spec: Spec) -> dict[str, dict[str, int]]:
    """Count non-temporal (L) and temporal (T) top-level conjuncts of the
    guarantees and of the assumptions.

    Always-sections count their formulas with a leading ``G`` stripped, so
    ``G p`` and ``p`` both count as L there.
    """
    counts = {"guarantees": {"L": 0, "T": 0}, "assumptions": {"L": 0, "T": 0}}
    sections = (
        ("assumptions", spec.initial_assumptions, False),
        ("assumptions", spec.always_assumptions, True),
        ("guarantees", spec.initial_guarantees, False),
        ("guarantees", spec.always_guarantees, True),
    )
    for kind, formulas, always in sections:
        for formula in formulas:
            for part in conjuncts(formula):
                if always and isinstance(part, Globally):
                    part = part.arg
                counts[kind]["T" if is_temporal(part) else "L"] += 1
    return counts
