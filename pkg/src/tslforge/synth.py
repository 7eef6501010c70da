"""Bounded synthesis of Mealy machines against universal co-Büchi automata.

SAT encoding for a machine with states ``0..k-1`` reading letters ``L``:

* ``tau(s, l, t)``: exactly one successor ``t`` per ``(s, l)``; omitted
  when ``k == 1``.
* The machine's own labels.  A system machine picks one update per group,
  ``sel(s, l, u)`` under an exactly-one constraint, and its free
  propositions get ``out(s, l, ap)``.  An environment machine is
  Moore-style, so its label ``env(s, ap)`` does not depend on the letter.
* ``lam(q, s)``: the product state ``(q, s)`` is reachable, for
  automaton state ``q``.  Initial pairs are forced true.
* For each automaton edge ``q -g-> q'`` and each ``(s, l)`` where ``g``
  is consistent with ``l``, an activation literal ``act`` is implied by
  ``lam(q, s)`` plus the label literals of ``g``.  Then
  ``act & tau(s, l, t) -> lam(q', t)``.
* Ranks ``r(q, s, j)`` (order encoding, "rank >= j") exist only for
  automaton states in strongly connected components that contain a
  rejecting state.  Along an edge inside such a component the rank must
  not decrease, and it must strictly increase when ``q'`` is rejecting.
  The bound for component ``C`` is ``k * |C ∩ rejecting|``: a product
  path within ``C`` meets each rejecting product state at most once.

A satisfying assignment yields a machine all of whose runs visit
rejecting states finitely often.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .automata import Automaton, satisfies, spec_to_ucw
from .encode import APTable, Encoding, encode_parts
from .errors import CapacityError, NonExclusiveOutput, ResourceLimit
from .sat import CNF, solve
from .syntax import Not, Spec

MAX_INPUT_APS = 12
MAX_ENV_LETTERS = 512


# --------------------------------------------------------------------------
# machines


@dataclass(frozen=True)
class Interface:
    """Propositions read and written by a machine.

    Each group is a set of written propositions of which exactly one holds
    at every step; written propositions outside all groups are free.
    """

    inputs: tuple
    outputs: tuple
    groups: tuple = ()  # tuple of tuples of output ids

    @classmethod
    def of(cls, aps: "APTable | Interface") -> "Interface":
        if isinstance(aps, Interface):
            return aps
        return cls(
            tuple(aps.uncontrollable),
            tuple(aps.controllable),
            tuple(tuple(ids) for ids in aps.update_groups.values()),
        )

    @property
    def free_outputs(self) -> tuple:
        grouped = {ap for g in self.groups for ap in g}
        return tuple(ap for ap in self.outputs if ap not in grouped)

    def input_letters(self) -> list[frozenset]:
        return list(valuations(self.inputs))

    def output_letters(self) -> list[frozenset]:
        """Every output valuation meeting the exactly-one constraints."""
        choices = [[frozenset([u]) for u in g] for g in self.groups]
        free = self.free_outputs
        choices += [[frozenset(), frozenset([ap])] for ap in free]
        return [frozenset().union(*combo) for combo in itertools.product(*choices)]

    def output_letter_count(self) -> int:
        count = 1
        for g in self.groups:
            count *= len(g)
        return count << len(self.free_outputs)


def valuations(aps: Sequence[str]):
    aps = list(aps)
    for bits in range(1 << len(aps)):
        yield frozenset(ap for i, ap in enumerate(aps) if bits >> i & 1)


@dataclass(frozen=True)
class MealyMachine:
    """Deterministic transducer; ``table[(state, letter)] = (label, next)``.

    Letters and labels are frozensets of the propositions that hold.  For a
    certificate against the system, ``inputs`` are the system's outputs and
    ``outputs`` the environment's choices.
    """

    num_states: int
    inputs: tuple
    outputs: tuple
    table: Mapping
    initial: int = 0

    def step(self, state: int, letter) -> tuple[frozenset, int]:
        return self.table[(state, frozenset(letter))]

    def letters(self) -> list[frozenset]:
        seen = []
        for (s, letter) in self.table:
            if s == self.initial and letter not in seen:
                seen.append(letter)
        return seen

    def reachable_states(self) -> set[int]:
        seen = {self.initial}
        stack = [self.initial]
        while stack:
            s = stack.pop()
            for (src, _), (_, nxt) in self.table.items():
                if src == s and nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    def run(self, letters: Iterable) -> list[frozenset]:
        state, out = self.initial, []
        for letter in letters:
            label, state = self.step(state, letter)
            out.append(label)
        return out

    def to_json(self) -> dict:
        rows = []
        for (s, letter), (label, nxt) in sorted(
            self.table.items(), key=lambda kv: (kv[0][0], _letter_key(kv[0][1], self.inputs))
        ):
            rows.append(
                {
                    "state": s,
                    "input_valuation": {ap: ap in letter for ap in self.inputs},
                    "output_valuation": {ap: ap in label for ap in self.outputs},
                    "next": nxt,
                }
            )
        return {
            "states": self.num_states,
            "initial": self.initial,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "table": rows,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, doc: Mapping) -> "MealyMachine":
        table = {}
        for row in doc["table"]:
            letter = frozenset(ap for ap, on in row["input_valuation"].items() if on)
            label = frozenset(ap for ap, on in row["output_valuation"].items() if on)
            table[(row["state"], letter)] = (label, row["next"])
        return cls(
            doc["states"], tuple(doc["inputs"]), tuple(doc["outputs"]), table, doc.get("initial", 0)
        )


def _letter_key(letter: frozenset, aps: Sequence[str]) -> int:
    return sum(1 << i for i, ap in enumerate(aps) if ap in letter)


def check_exclusive(machine: MealyMachine, iface: "APTable | Interface") -> None:
    """Raise :class:`NonExclusiveOutput` unless every label picks exactly
    one proposition from each group."""
    iface = Interface.of(iface)
    for (s, letter), (label, _) in machine.table.items():
        for group in iface.groups:
            chosen = [u for u in group if u in label]
            if len(chosen) != 1:
                raise NonExclusiveOutput(
                    "/".join(group),
                    f"in state {s} on {sorted(letter)}: chose {chosen}",
                )


# --------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class Realizable:
    machine: MealyMachine
    bound: int
    status: str = "realizable"


@dataclass(frozen=True)
class UnrealizableCertified:
    counter_machine: MealyMachine
    bound: int
    status: str = "unrealizable"


@dataclass(frozen=True)
class Unknown:
    bound_exhausted: int
    resource_limited: bool = False
    reason: str = ""
    status: str = "unknown"


SynthesisResult = Realizable | UnrealizableCertified | Unknown


# --------------------------------------------------------------------------
# verification


def verify_machine(machine: MealyMachine, ucw: Automaton) -> bool:
    """Model-check ``machine`` against ``ucw``: true iff no reachable cycle
    of the product visits a rejecting state.

    Each product step reads the union of the machine's letter and label.
    """
    out = ucw.out_edges()
    rows: dict[int, list] = {}
    for (s, letter), (label, nxt) in machine.table.items():
        rows.setdefault(s, []).append((letter | label, nxt))
    graph = nx.DiGraph()
    start = [(q, machine.initial) for q in sorted(ucw.initial)]
    graph.add_nodes_from(start)
    seen = set(start)
    stack = list(start)
    while stack:
        q, s = stack.pop()
        for val, nxt in rows.get(s, []):
            for guard, q2 in out[q]:
                if satisfies(guard, val):
                    node = (q2, nxt)
                    graph.add_edge((q, s), node)
                    if node not in seen:
                        seen.add(node)
                        stack.append(node)
    for comp in nx.strongly_connected_components(graph):
        if len(comp) == 1:
            (node,) = comp
            if not graph.has_edge(node, node):
                continue
        if any(q in ucw.accepting for q, _ in comp):
            return False
    return True


# --------------------------------------------------------------------------
# encoding


def _rank_components(ucw: Automaton) -> dict[int, tuple[int, int]]:
    """Map each state in a cyclic component with rejecting states to
    ``(component id, rejecting count)``."""
    graph = nx.DiGraph()
    graph.add_nodes_from(ucw.states)
    graph.add_edges_from((s, d) for s, _, d in ucw.edges)
    info = {}
    comps = sorted((sorted(c) for c in nx.strongly_connected_components(graph)))
    for cid, comp in enumerate(comps):
        cyclic = len(comp) > 1 or graph.has_edge(comp[0], comp[0])
        rejecting = sum(1 for q in comp if q in ucw.accepting)
        if cyclic and rejecting:
            for q in comp:
                info[q] = (cid, rejecting)
    return info


def _doomed(ucw: Automaton) -> set[int]:
    """Rejecting states with an unconditional self-loop."""
    return {s for s, g, d in ucw.edges if s == d and not g and s in ucw.accepting}


class _Encoder:
    def __init__(self, ucw: Automaton, k: int, letters: list[frozenset], label_lits):
        self.ucw, self.k, self.letters = ucw, k, letters
        self.cnf = CNF()
        self.label_lits = label_lits  # (encoder, s, li, guard) -> list[int] | None

    def tau(self, s, li, t):
        return None if self.k == 1 else self.cnf.var("tau", s, li, t)

    def lam(self, q, s):
        return self.cnf.var("lam", q, s)

    def rank(self, q, s, j):
        return self.cnf.var("rank", q, s, j)

    def build(self) -> CNF:
        cnf, k, ucw = self.cnf, self.k, self.ucw
        if k > 1:
            for s in range(k):
                for li in range(len(self.letters)):
                    cnf.exactly_one([self.tau(s, li, t) for t in range(k)])
        for q in ucw.initial:
            cnf.add([self.lam(q, 0)])
        for q in _doomed(ucw):
            for s in range(k):
                cnf.add([-self.lam(q, s)])
        comps = _rank_components(ucw)
        bounds = {q: k * rej for q, (_, rej) in comps.items()}
        for q, bound in bounds.items():
            for s in range(k):
                for j in range(1, bound):
                    cnf.add([-self.rank(q, s, j + 1), self.rank(q, s, j)])
        out = ucw.out_edges()
        for q in ucw.states:
            for s in range(k):
                for li in range(len(self.letters)):
                    for guard, q2 in out[q]:
                        lits = self.label_lits(self, s, li, guard)
                        if lits is None:
                            continue
                        if lits:
                            act = cnf.fresh()
                            cnf.add([-self.lam(q, s)] + [-x for x in lits] + [act])
                        else:
                            act = self.lam(q, s)
                        same = q in comps and q2 in comps and comps[q][0] == comps[q2][0]
                        for t in range(k):
                            tau = self.tau(s, li, t)
                            pre = [-act] + ([-tau] if tau is not None else [])
                            cnf.add(pre + [self.lam(q2, t)])
                            if same:
                                self._rank_step(pre, q, s, q2, t, bounds[q])
        return cnf

    def _rank_step(self, pre, q, s, q2, t, bound):
        cnf = self.cnf
        strict = q2 in self.ucw.accepting
        if not strict:
            for j in range(1, bound + 1):
                cnf.add(pre + [-self.rank(q, s, j), self.rank(q2, t, j)])
            return
        if bound == 0:
            cnf.add(pre)
            return
        cnf.add(pre + [self.rank(q2, t, 1)])
        for j in range(1, bound):
            cnf.add(pre + [-self.rank(q, s, j), self.rank(q2, t, j + 1)])
        cnf.add(pre + [-self.rank(q, s, bound)])


def _guard_split(guard, read: set):
    """Split a guard into the literals on read and written propositions."""
    r = [(ap, pos) for ap, pos in guard if ap in read]
    w = [(ap, pos) for ap, pos in guard if ap not in read]
    return r, w


def _solve_machine(enc: _Encoder, backend, timeout):
    cnf = enc.build()
    model = solve(cnf.clauses, cnf.num_vars, backend, timeout)
    return cnf, model


def bounded_realizable(
    ucw: Automaton,
    aps: "APTable | Interface",
    k: int,
    *,
    backend: str | None = None,
    timeout: float | None = None,
) -> MealyMachine | None:
    """A machine with at most ``k`` states whose runs the UCW all accepts,
    or ``None`` if there is none."""
    if k < 1:
        raise ValueError("k must be positive")
    iface = Interface.of(aps)
    if len(iface.inputs) > MAX_INPUT_APS:
        raise CapacityError(
            f"{len(iface.inputs)} uncontrollable propositions exceed the limit of {MAX_INPUT_APS}"
        )
    letters = iface.input_letters()
    read = set(iface.inputs)
    group_of = {u: gi for gi, g in enumerate(iface.groups) for u in g}

    def out_var(enc, s, li, ap):
        if ap in group_of:
            return enc.cnf.var("sel", s, li, ap)
        return enc.cnf.var("out", s, li, ap)

    def label_lits(enc, s, li, guard):
        r, w = _guard_split(guard, read)
        letter = letters[li]
        if any((ap in letter) != pos for ap, pos in r):
            return None
        lits = []
        for ap, pos in w:
            if ap not in group_of and ap not in iface.outputs:
                return None  # proposition outside the interface is always false
            v = out_var(enc, s, li, ap)
            lits.append(v if pos else -v)
        return lits

    enc = _Encoder(ucw, k, letters, label_lits)
    for s in range(k):
        for li in range(len(letters)):
            for g in iface.groups:
                enc.cnf.exactly_one([out_var(enc, s, li, u) for u in g])
    cnf, model = _solve_machine(enc, backend, timeout)
    if model is None:
        return None
    table = {}
    for s in range(k):
        for li, letter in enumerate(letters):
            label = frozenset(
                ap for ap in iface.outputs if cnf.pool.obj2id.get(
                    ("sel" if ap in group_of else "out", s, li, ap)
                ) in model
            )
            table[(s, letter)] = (label, _successor(cnf, model, s, li, k))
    return MealyMachine(k, iface.inputs, iface.outputs, table)


def _successor(cnf: CNF, model: set, s: int, li: int, k: int) -> int:
    if k == 1:
        return 0
    for t in range(k):
        if cnf.pool.obj2id[("tau", s, li, t)] in model:
            return t
    raise AssertionError("transition table not total")


def environment_realizable(
    env_ucw: Automaton,
    aps: "APTable | Interface",
    k: int,
    *,
    backend: str | None = None,
    timeout: float | None = None,
    max_letters: int = MAX_ENV_LETTERS,
) -> MealyMachine | None:
    """A Moore environment with at most ``k`` states all of whose plays
    against exclusive system outputs ``env_ucw`` accepts.

    The environment fixes the input valuation in its current state before
    the system answers; it then moves on the system's output valuation.
    """
    iface = Interface.of(aps)
    if iface.output_letter_count() > max_letters:
        raise CapacityError(
            f"{iface.output_letter_count()} system output valuations exceed the limit of {max_letters}"
        )
    letters = iface.output_letters()
    read = set(iface.outputs)

    def label_lits(enc, s, li, guard):
        r, w = _guard_split(guard, read)
        letter = letters[li]
        if any((ap in letter) != pos for ap, pos in r):
            return None
        lits = []
        for ap, pos in w:
            v = enc.cnf.var("env", s, ap)
            lits.append(v if pos else -v)
        return lits

    enc = _Encoder(env_ucw, k, letters, label_lits)
    cnf, model = _solve_machine(enc, backend, timeout)
    if model is None:
        return None
    table = {}
    for s in range(k):
        label = frozenset(ap for ap in iface.inputs if cnf.pool.obj2id.get(("env", s, ap)) in model)
        for li, letter in enumerate(letters):
            table[(s, letter)] = (label, _successor(cnf, model, s, li, k))
    return MealyMachine(k, iface.outputs, iface.inputs, table)


def verify_environment(machine: MealyMachine, env_ucw: Automaton) -> bool:
    """Check a Moore environment certificate: the label emitted in a state
    is read together with the system letter that follows."""
    return verify_machine(machine, env_ucw)


# --------------------------------------------------------------------------
# driver


@dataclass
class SynthesisOptions:
    max_bound: int = 8
    timeout: float | None = 600.0
    dual: bool = True
    backend: str | None = None
    hold_outputs: bool = True
    max_automaton_states: int = 20000
    log: list = field(default_factory=list)


def synthesize(spec: Spec | Encoding, max_k: int = 8, **kwargs) -> SynthesisResult:
    """Search ``k = 1..max_k`` for a machine, interleaved with the search
    for an environment certificate of unrealizability."""
    opts = SynthesisOptions(max_bound=max_k, **kwargs)
    if max_k < 1:
        raise ValueError("max_k must be positive")
    deadline = None if opts.timeout is None else time.monotonic() + opts.timeout

    def remaining():
        if deadline is None:
            return None
        left = deadline - time.monotonic()
        if left <= 0:
            raise ResourceLimit("time budget exhausted")
        return left

    enc = spec if isinstance(spec, Encoding) else encode_parts(spec, opts.hold_outputs)
    iface = Interface.of(enc.aps)
    if len(iface.inputs) > MAX_INPUT_APS:
        return Unknown(
            0,
            True,
            f"{len(iface.inputs)} uncontrollable propositions exceed the limit of {MAX_INPUT_APS}",
        )
    ids = enc.aps.ids
    try:
        ucw = spec_to_ucw(enc.core_formula, ids, opts.max_automaton_states)
    except ResourceLimit as exc:
        return Unknown(0, True, f"specification automaton: {exc}")
    opts.log.append(f"ucw: {ucw.num_states} states, {len(ucw.edges)} edges")

    dual = {"ucw": None, "note": "" if opts.dual else "dual disabled", "tried": not opts.dual}

    def env_automaton():
        if not dual["tried"]:
            dual["tried"] = True
            count = iface.output_letter_count()
            if count > MAX_ENV_LETTERS:
                dual["note"] = f"dual skipped: {count} output valuations"
            else:
                try:
                    dual["ucw"] = spec_to_ucw(
                        Not(enc.core_formula), ids, opts.max_automaton_states
                    )
                    opts.log.append(f"env ucw: {dual['ucw'].num_states} states")
                except ResourceLimit as exc:
                    dual["note"] = f"dual skipped: {exc}"
            if dual["note"]:
                opts.log.append(dual["note"])
        return dual["ucw"]

    for k in range(1, max_k + 1):
        try:
            machine = bounded_realizable(ucw, iface, k, backend=opts.backend, timeout=remaining())
        except ResourceLimit as exc:
            return Unknown(k - 1, True, str(exc))
        opts.log.append(f"k={k}: system {'sat' if machine else 'unsat'}")
        if machine is not None:
            check_exclusive(machine, iface)
            if not verify_machine(machine, ucw):
                raise AssertionError("synthesized machine fails verification")
            return Realizable(machine, k)
        env_ucw = env_automaton()
        if env_ucw is not None:
            try:
                env = environment_realizable(
                    env_ucw, iface, k, backend=opts.backend, timeout=remaining()
                )
            except ResourceLimit as exc:
                return Unknown(k, True, str(exc))
            opts.log.append(f"k={k}: environment {'sat' if env else 'unsat'}")
            if env is not None:
                if not verify_environment(env, env_ucw):
                    raise AssertionError("environment certificate fails verification")
                return UnrealizableCertified(env, k)
    return Unknown(max_k, False, dual["note"])


# --------------------------------------------------------------------------
# next-chain experiment

CHAIN_PLACEHOLDER = "{chain}"


def instantiate_chain(template: str, n: int) -> str:
    """Replace the placeholder by ``X`` repeated ``n`` times."""
    if n < 0:
        raise ValueError("chain length must be non-negative")
    return template.replace(CHAIN_PLACEHOLDER, "X " * n)


def next_chain_experiment(
    base_spec,
    n_range: Iterable[int],
    **kwargs,
) -> dict[int, SynthesisResult]:
    """Synthesize the chain-parameterized spec for every ``n``.

    ``base_spec`` is a template string or a callable ``n -> Spec``.
    """
    from .parser import parse_spec

    results = {}
    for n in n_range:
        spec = base_spec(n) if callable(base_spec) else parse_spec(instantiate_chain(base_spec, n))
        results[n] = synthesize(spec, **kwargs)
    return results


def minimal_realizable(results: Mapping[int, SynthesisResult]) -> int | None:
    ok = [n for n, r in results.items() if isinstance(r, Realizable)]
    return min(ok) if ok else None


def is_monotone(results: Mapping[int, SynthesisResult]) -> bool:
    """Realizable at ``n`` implies realizable at every larger tested ``n``."""
    seen = False
    for n in sorted(results):
        realizable = isinstance(results[n], Realizable)
        if seen and not realizable:
            return False
        seen = seen or realizable
    return True
