"""Control flow architectures: per-target multiplexers over function terms,
driven by a control state and the current predicate valuation.

JSON layout (``export_cfa``)::

    {
      "control_states": 2,            # states are 0 .. control_states-1
      "initial_state": 0,
      "inputs": ["x"],                # input signals
      "outputs": ["o"],               # output signals
      "cells": [{"name": "c", "init": "init_c"}],
      "predicates": ["p x"],          # predicate terms, evaluated each step
      "rows": [                       # one row per (state, valuation)
        {"state": 0, "valuation": [true], "next": 1,
         "select": {"o": "f x", "c": "c"}}
      ]
    }

Terms are written in the concrete term syntax and parsed back on import.
Valuations list predicate values in the order of ``predicates``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .encode import APTable
from .errors import FormatError, NonExclusiveOutput, ParseError
from .parser import parse_term
from .syntax import Term, pretty_term
from .synth import MealyMachine


@dataclass(frozen=True)
class CFA:
    control_states: int
    initial_state: int
    inputs: tuple
    outputs: tuple
    cells: tuple  # (name, initializer literal) pairs
    predicates: tuple  # predicate terms
    selection: Mapping  # (state, valuation) -> ((target, term), ...) sorted by target
    transition: Mapping  # (state, valuation) -> state

    @property
    def targets(self) -> tuple:
        return tuple(sorted(self.outputs + tuple(c for c, _ in self.cells)))

    def valuations(self) -> list[tuple]:
        return list(itertools.product((False, True), repeat=len(self.predicates)))

    def step(self, state: int, valuation: Sequence[bool]) -> tuple[dict, int]:
        key = (state, tuple(valuation))
        return dict(self.selection[key]), self.transition[key]

    def __eq__(self, other):
        if not isinstance(other, CFA):
            return NotImplemented
        return _canonical(self) == _canonical(other)

    def __hash__(self):
        return hash(json.dumps(_canonical(self), sort_keys=True))


def machine_to_cfa(machine: MealyMachine, aps: APTable, signals=None) -> CFA:
    """Translate ``machine``, whose letters are predicate propositions and
    whose labels are update propositions, into a CFA.

    ``signals`` (a :class:`SignalTable`) supplies input and output names;
    without it, outputs and cells are read off the update groups and inputs
    are left empty.
    """
    pred_ids = list(machine.inputs)
    predicates = tuple(aps.entry(ap).binding.term for ap in pred_ids)
    groups = aps.update_groups
    if signals is not None:
        cells = tuple(sorted(signals.cells))
        outputs = tuple(sorted(signals.outputs))
        inputs = tuple(sorted(signals.inputs))
    else:
        cells = ()
        outputs = tuple(sorted(groups))
        inputs = ()
    selection, transition = {}, {}
    for s in range(machine.num_states):
        for valuation in itertools.product((False, True), repeat=len(pred_ids)):
            letter = frozenset(ap for ap, on in zip(pred_ids, valuation) if on)
            label, nxt = machine.step(s, letter)
            chosen = []
            for target in sorted(groups):
                picked = [u for u in groups[target] if u in label]
                if len(picked) != 1:
                    raise NonExclusiveOutput(
                        target, f"in state {s} on {sorted(letter)}: chose {picked}"
                    )
                chosen.append((target, aps.entry(picked[0]).binding.term))
            selection[(s, valuation)] = tuple(chosen)
            transition[(s, valuation)] = nxt
    return CFA(
        machine.num_states,
        machine.initial,
        inputs,
        outputs,
        tuple((c, f"init_{c}") for c in cells),
        predicates,
        selection,
        transition,
    )


# --------------------------------------------------------------------------
# serialization


def _canonical(cfa: CFA) -> dict:
    rows = []
    for state in range(cfa.control_states):
        for valuation in cfa.valuations():
            key = (state, valuation)
            rows.append(
                {
                    "state": state,
                    "valuation": list(valuation),
                    "next": cfa.transition[key],
                    "select": {t: pretty_term(term) for t, term in cfa.selection[key]},
                }
            )
    return {
        "control_states": cfa.control_states,
        "initial_state": cfa.initial_state,
        "inputs": list(cfa.inputs),
        "outputs": list(cfa.outputs),
        "cells": [{"name": c, "init": init} for c, init in cfa.cells],
        "predicates": [pretty_term(p) for p in cfa.predicates],
        "rows": rows,
    }


def export_cfa(cfa: CFA) -> dict:
    return _canonical(cfa)


def dumps_cfa(cfa: CFA) -> str:
    return json.dumps(export_cfa(cfa), indent=2, sort_keys=True) + "\n"


def _field(doc, key, kind, path):
    if not isinstance(doc, dict) or key not in doc:
        raise FormatError(f"{path}/{key}", "missing field")
    value = doc[key]
    if kind is int and (not isinstance(value, int) or isinstance(value, bool)):
        raise FormatError(f"{path}/{key}", "expected an integer")
    if kind is not int and not isinstance(value, kind):
        raise FormatError(f"{path}/{key}", f"expected {kind.__name__}")
    return value


def _term(text, path) -> Term:
    if not isinstance(text, str):
        raise FormatError(path, "expected a term string")
    try:
        return parse_term(text)
    except ParseError as exc:
        raise FormatError(path, f"bad term: {exc}") from exc


def _names(values, path) -> tuple:
    for i, v in enumerate(values):
        if not isinstance(v, str):
            raise FormatError(f"{path}/{i}", "expected a string")
    return tuple(values)


def import_cfa(doc: Mapping) -> CFA:
    """Rebuild a CFA from its JSON document.

    Raises :class:`FormatError` naming the offending JSON path.
    """
    if not isinstance(doc, dict):
        raise FormatError("", "expected an object")
    k = _field(doc, "control_states", int, "")
    initial = _field(doc, "initial_state", int, "")
    if not 0 <= initial < k:
        raise FormatError("/initial_state", "out of range")
    inputs = _names(_field(doc, "inputs", list, ""), "/inputs")
    outputs = _names(_field(doc, "outputs", list, ""), "/outputs")
    cells = []
    for i, c in enumerate(_field(doc, "cells", list, "")):
        path = f"/cells/{i}"
        cells.append((_field(c, "name", str, path), _field(c, "init", str, path)))
    predicates = tuple(
        _term(p, f"/predicates/{i}") for i, p in enumerate(_field(doc, "predicates", list, ""))
    )
    targets = sorted(outputs + tuple(c for c, _ in cells))
    selection, transition = {}, {}
    for i, row in enumerate(_field(doc, "rows", list, "")):
        path = f"/rows/{i}"
        state = _field(row, "state", int, path)
        valuation = _field(row, "valuation", list, path)
        if len(valuation) != len(predicates) or not all(isinstance(v, bool) for v in valuation):
            raise FormatError(f"{path}/valuation", "expected one boolean per predicate")
        nxt = _field(row, "next", int, path)
        if not 0 <= nxt < k or not 0 <= state < k:
            raise FormatError(f"{path}/next", "state out of range")
        select = _field(row, "select", dict, path)
        if sorted(select) != targets:
            raise FormatError(f"{path}/select", "must choose exactly one term per output and cell")
        key = (state, tuple(valuation))
        if key in transition:
            raise FormatError(path, "duplicate row")
        selection[key] = tuple(
            (t, _term(select[t], f"{path}/select/{t}")) for t in targets
        )
        transition[key] = nxt
    expected = k << len(predicates)
    if len(transition) != expected:
        raise FormatError("/rows", f"expected {expected} rows, found {len(transition)}")
    return CFA(k, initial, inputs, outputs, tuple(cells), predicates, selection, transition)


def loads_cfa(text: str) -> CFA:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError("", f"invalid JSON: {exc}") from exc
    return import_cfa(doc)
