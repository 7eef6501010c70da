"""LTL to Büchi automata by tableau construction, and the universal co-Büchi
automata used for bounded synthesis.

Guards are conjunctions of literals, stored as a frozenset of
``(ap, polarity)`` pairs; the empty guard is ``true``.  Valuations are
given as the set of propositions that hold (a mapping of proposition to
bool is accepted too).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .errors import ResourceLimit
from .syntax import (
    And,
    Atom,
    FalseF,
    Finally,
    Formula,
    Globally,
    Iff,
    Implies,
    Next,
    Not,
    Or,
    Release,
    TrueF,
    Until,
    WeakUntil,
    disjuncts,
    conjuncts,
    nnf,
    pretty,
    walk,
)

Guard = frozenset
TRUE_GUARD: Guard = frozenset()

DEFAULT_MAX_NODES = 20000
DEFAULT_MAX_STEPS = 2_000_000


def valuation(v) -> frozenset:
    if isinstance(v, frozenset):
        return v
    if isinstance(v, Mapping):
        return frozenset(k for k, on in v.items() if on)
    return frozenset(v)


def satisfies(guard: Guard, val: frozenset) -> bool:
    return all((ap in val) == positive for ap, positive in guard)


def guard_text(guard: Guard) -> str:
    if not guard:
        return "true"
    return " && ".join(ap if pos else f"!{ap}" for ap, pos in sorted(guard))


@dataclass(frozen=True)
class Automaton:
    """Explicit automaton with symbolic edge guards.

    ``accepting`` holds the Büchi-accepting states, or the rejecting states
    when ``acceptance`` is ``"co-buchi"``.
    """

    num_states: int
    initial: frozenset
    edges: tuple  # (src, guard, dst)
    accepting: frozenset
    aps: tuple = ()
    acceptance: str = "buchi"
    branching: str = "nondeterministic"

    @property
    def states(self) -> range:
        return range(self.num_states)

    def successors(self, state: int):
        return [(g, d) for s, g, d in self.edges if s == state]

    def out_edges(self) -> dict[int, list[tuple[Guard, int]]]:
        cached = self.__dict__.get("_out")
        if cached is None:
            cached = {q: [] for q in self.states}
            for s, g, d in self.edges:
                cached[s].append((g, d))
            object.__setattr__(self, "_out", cached)
        return {q: list(es) for q, es in cached.items()}

    def is_complete(self) -> bool:
        out = self.out_edges()
        for q in self.states:
            for val in _all_valuations(self.aps):
                if not any(satisfies(g, val) for g, _ in out[q]):
                    return False
        return True

    def complete(self) -> "Automaton":
        """Add a sink so that every state has a successor for every letter.

        The sink is non-accepting for Büchi and non-rejecting for co-Büchi,
        which leaves the language unchanged.
        """
        out = self.out_edges()
        sink = self.num_states
        extra = []
        for q in self.states:
            for val in _all_valuations(self.aps):
                if not any(satisfies(g, val) for g, _ in out[q]):
                    extra.append((q, _full_guard(val, self.aps), sink))
        if not extra:
            return self
        extra.append((sink, TRUE_GUARD, sink))
        return Automaton(
            self.num_states + 1,
            self.initial,
            self.edges + tuple(extra),
            self.accepting,
            self.aps,
            self.acceptance,
            self.branching,
        )

    def dual(self) -> "Automaton":
        kind = "co-buchi" if self.acceptance == "buchi" else "buchi"
        branch = "universal" if self.branching == "nondeterministic" else "nondeterministic"
        return Automaton(
            self.num_states, self.initial, self.edges, self.accepting, self.aps, kind, branch
        )

    def accepts(self, prefix: Sequence, loop: Sequence) -> bool:
        """Decide acceptance of the lasso word ``prefix . loop^omega``."""
        found = _has_marked_cycle(self, [valuation(v) for v in prefix], [valuation(v) for v in loop])
        if self.acceptance == "buchi" and self.branching == "nondeterministic":
            return found
        if self.acceptance == "co-buchi" and self.branching == "universal":
            return not found
        raise NotImplementedError(f"{self.branching} {self.acceptance} acceptance")


def _all_valuations(aps: Sequence[str]):
    aps = list(aps)
    for bits in range(1 << len(aps)):
        yield frozenset(ap for i, ap in enumerate(aps) if bits >> i & 1)


def _full_guard(val: frozenset, aps: Sequence[str]) -> Guard:
    return frozenset((ap, ap in val) for ap in aps)


def _has_marked_cycle(aut: Automaton, prefix, loop) -> bool:
    if not loop:
        raise ValueError("loop must be nonempty")
    word = list(prefix) + list(loop)
    n = len(word)

    def succ(i):
        return i + 1 if i + 1 < n else len(prefix)

    out = aut.out_edges()
    adj: dict[tuple, set] = {}
    stack = [(q, 0) for q in sorted(aut.initial)]
    while stack:
        node = stack.pop()
        if node in adj:
            continue
        q, i = node
        adj[node] = {(d, succ(i)) for g, d in out[q] if satisfies(g, word[i])}
        stack.extend(adj[node] - adj.keys())
    # a marked node lies on a cycle iff it can reach itself
    for node in adj:
        if node[0] not in aut.accepting:
            continue
        seen, todo = set(), list(adj[node])
        while todo:
            v = todo.pop()
            if v == node:
                return True
            if v not in seen:
                seen.add(v)
                todo.extend(adj[v])
    return False


# --------------------------------------------------------------------------
# tableau construction


def _is_literal(f: Formula) -> bool:
    return isinstance(f, (Atom, TrueF, FalseF)) or (isinstance(f, Not) and isinstance(f.arg, Atom))


class _Tableau:
    """Gerth-Peled-Vardi-Wolper tableau for an NNF formula."""

    INIT = -1

    def __init__(self, formula: Formula, max_nodes: int, deadline: float | None = None):
        self.max_nodes = max_nodes
        self.deadline = deadline
        self.max_steps = DEFAULT_MAX_STEPS
        self._keys: dict[Formula, str] = {}
        self.nodes: dict[tuple, int] = {}
        self.old: list[frozenset] = []
        self.incoming: list[set] = []
        self._expand(formula)

    def key(self, f: Formula) -> str:
        k = self._keys.get(f)
        if k is None:
            k = self._keys[f] = pretty(f)
        return k

    def _expand(self, formula: Formula) -> None:
        stack = [({self.INIT}, frozenset([formula]), frozenset(), frozenset())]
        steps = 0
        while stack:
            steps += 1
            if steps > self.max_steps:
                raise ResourceLimit(f"tableau expansion exceeds {self.max_steps} steps")
            if self.deadline is not None and steps % 4096 == 0 and time.monotonic() > self.deadline:
                raise ResourceLimit("tableau construction ran out of time")
            inc, new, old, nxt = stack.pop()
            if not new:
                key = (old, nxt)
                nid = self.nodes.get(key)
                if nid is not None:
                    self.incoming[nid] |= inc
                    continue
                if len(self.nodes) >= self.max_nodes:
                    raise ResourceLimit(f"tableau exceeds {self.max_nodes} nodes")
                nid = len(self.nodes)
                self.nodes[key] = nid
                self.old.append(old)
                self.incoming.append(set(inc))
                stack.append(({nid}, nxt, frozenset(), frozenset()))
                continue
            eta = min(new, key=self.key)
            new = new - {eta}
            if _is_literal(eta):
                if isinstance(eta, FalseF):
                    continue
                negated = eta.arg if isinstance(eta, Not) else Not(eta)
                if negated in old:
                    continue
                stack.append((inc, new, old | {eta}, nxt))
                continue
            old2 = old | {eta}
            if isinstance(eta, And):
                stack.append((inc, new | ({eta.left, eta.right} - old2), old2, nxt))
            elif isinstance(eta, Next):
                stack.append((inc, new, old2, nxt | {eta.arg}))
            elif isinstance(eta, Or):
                stack.append((inc, new | ({eta.right} - old2), old2, nxt))
                stack.append((inc, new | ({eta.left} - old2), old2, nxt))
            elif isinstance(eta, Until):
                stack.append((inc, new | ({eta.right} - old2), old2, nxt))
                stack.append((inc, new | ({eta.left} - old2), old2, nxt | {eta}))
            elif isinstance(eta, Release):
                stack.append((inc, new | ({eta.left, eta.right} - old2), old2, nxt))
                stack.append((inc, new | ({eta.right} - old2), old2, nxt | {eta}))
            else:
                raise TypeError(f"formula not in negation normal form: {eta!r}")
        self.steps = steps

    def label(self, nid: int) -> Guard:
        lits = set()
        for f in self.old[nid]:
            if isinstance(f, Atom):
                lits.add((f.name, True))
            elif isinstance(f, Not) and isinstance(f.arg, Atom):
                lits.add((f.arg.name, False))
        return frozenset(lits)


def _untils(f: Formula) -> list[Until]:
    found = {n for n in walk(f) if isinstance(n, Until)}
    return sorted(found, key=pretty)


def _tableau_gba(formula: Formula, max_nodes: int, deadline: float | None = None):
    tab = _Tableau(formula, max_nodes, deadline)
    untils = _untils(formula)
    acc_sets = []
    for u in untils:
        acc_sets.append(
            frozenset(n for n in range(len(tab.old)) if u not in tab.old[n] or u.right in tab.old[n])
        )
    edges = []
    for nid in range(len(tab.old)):
        label = tab.label(nid)
        for src in sorted(tab.incoming[nid]):
            edges.append((src, label, nid))
    return len(tab.old), edges, acc_sets


def _degeneralize(num_nodes: int, edges, acc_sets, max_nodes: int):
    """Counter construction from a generalized Büchi tableau.

    Tableau node ``-1`` is the initial pseudo node.  Returns an
    :class:`Automaton` over the reachable product states.
    """
    m = len(acc_sets)
    out: dict[int, list] = {}
    for src, g, dst in edges:
        out.setdefault(src, []).append((g, dst))

    def advance(node, i):
        if m == 0:
            return 0, True
        j = i
        while j < m and node in acc_sets[j]:
            j += 1
        if j == m:
            return 0, True
        return j, False

    index: dict[tuple, int] = {}
    accepting = set()
    new_edges = []
    start = (-1, 0)
    index[start] = 0
    if m == 0:
        accepting.add(0)
    queue = [start]
    while queue:
        node, i = queue.pop()
        sid = index[(node, i)]
        nxt_i, _ = advance(node, i) if node != -1 else (0, False)
        for g, dst in out.get(node, []):
            key = (dst, nxt_i)
            if key not in index:
                if len(index) >= max_nodes:
                    raise ResourceLimit(f"automaton exceeds {max_nodes} states")
                index[key] = len(index)
                if advance(dst, nxt_i)[1]:
                    accepting.add(index[key])
                queue.append(key)
            new_edges.append((sid, g, index[key]))
    return len(index), {0}, new_edges, accepting


def _closure(adj, sources, within=None) -> set:
    seen = set(sources)
    stack = list(seen)
    while stack:
        n = stack.pop()
        for m in adj[n]:
            if m not in seen and (within is None or m in within):
                seen.add(m)
                stack.append(m)
    return seen


def _prune_and_minimize(num, initial, edges, accepting) -> tuple:
    """Drop states that cannot reach an accepting cycle, merge bisimilar
    states and remove subsumed parallel edges."""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(num))
    for s, _, d in edges:
        graph.add_edge(s, d)
    good_cycle_nodes = set()
    for comp in nx.strongly_connected_components(graph):
        nontrivial = len(comp) > 1 or any(graph.has_edge(n, n) for n in comp)
        if nontrivial and comp & accepting:
            good_cycle_nodes |= comp
    live = _closure(graph.pred, good_cycle_nodes)
    reach = _closure(graph.succ, {q for q in initial if q in live}, live)
    keep = sorted(reach)
    edges = [(s, g, d) for s, g, d in edges if s in reach and d in reach]
    initial = {q for q in initial if q in reach}

    # bisimulation quotient
    out: dict[int, list] = {q: [] for q in keep}
    for s, g, d in edges:
        out[s].append((g, d))
    block = {q: (1 if q in accepting else 0) for q in keep}
    while True:
        numbering: dict[tuple, int] = {}
        new_block = {}
        for q in keep:
            sig = (block[q], frozenset((g, block[d]) for g, d in out[q]))
            new_block[q] = numbering.setdefault(sig, len(numbering))
        stable = len(numbering) == len(set(block.values()))
        block = new_block
        if stable:
            break

    # renumber blocks in order of first appearance from the initial states
    order: dict[int, int] = {}
    for q in sorted(initial) + keep:
        b = block[q]
        if b not in order:
            order[b] = len(order)
    by_pair: dict[tuple, set] = {}
    for s, g, d in edges:
        by_pair.setdefault((order[block[s]], order[block[d]]), set()).add(g)
    # a guard implied by another guard to the same target is redundant
    final_edges = []
    for (s, d), guards in sorted(by_pair.items()):
        for g in sorted(guards, key=guard_text):
            if any(g2 != g and g2 <= g for g2 in guards):
                continue
            final_edges.append((s, g, d))
    new_acc = frozenset(order[block[q]] for q in keep if q in accepting)
    new_init = frozenset(order[block[q]] for q in initial)
    return len(order), new_init, tuple(final_edges), new_acc


def split_disjuncts(f: Formula, limit: int = 64) -> list[Formula]:
    """Top-level disjuncts of an NNF formula, distributing one level of
    conjunction over disjunction while the count stays under ``limit``."""
    out = []
    for d in disjuncts(f):
        parts = conjuncts(d)
        combos = [[]]
        for p in parts:
            options = disjuncts(p)
            if len(combos) * len(options) > limit:
                options = [p]
            combos = [c + [o] for c in combos for o in options]
        for c in combos:
            formula = c[0]
            for x in c[1:]:
                formula = And(formula, x)
            out.append(formula)
    return out


def formula_aps(f: Formula) -> tuple[str, ...]:
    return tuple(sorted({n.name for n in walk(f) if isinstance(n, Atom)}))


def ltl_to_nba(
    f: Formula,
    aps: Sequence[str] | None = None,
    max_states: int = DEFAULT_MAX_NODES,
    timeout: float | None = None,
) -> Automaton:
    """Nondeterministic Büchi automaton for the LTL formula ``f``.

    Top-level disjuncts are translated separately and united, which keeps
    each degeneralization small.
    """
    aps = tuple(aps) if aps is not None else formula_aps(f)
    deadline = None if timeout is None else time.monotonic() + timeout
    normal = nnf(f)
    num = 0
    initial: set[int] = set()
    edges = []
    accepting: set[int] = set()
    seen = set()
    for part in split_disjuncts(normal):
        if part in seen:
            continue
        seen.add(part)
        n_nodes, tab_edges, acc_sets = _tableau_gba(part, max_states, deadline)
        n, init, part_edges, acc = _degeneralize(n_nodes, tab_edges, acc_sets, max_states)
        initial |= {q + num for q in init}
        edges += [(s + num, g, d + num) for s, g, d in part_edges]
        accepting |= {q + num for q in acc}
        num += n
        if num > max_states:
            raise ResourceLimit(f"automaton exceeds {max_states} states")
    num, init, edges, acc = _prune_and_minimize(num, initial, edges, accepting)
    return Automaton(num, init, edges, acc, aps)


def spec_to_ucw(
    f: Formula,
    aps: Sequence[str] | None = None,
    max_states: int = DEFAULT_MAX_NODES,
    timeout: float | None = None,
) -> Automaton:
    """Universal co-Büchi automaton accepting exactly the models of ``f``:
    the dual of the Büchi automaton for its negation."""
    aps = tuple(aps) if aps is not None else formula_aps(f)
    return ltl_to_nba(Not(f), aps, max_states, timeout).dual()


# --------------------------------------------------------------------------
# brute-force oracle


def lasso_check(f: Formula, prefix: Sequence, loop: Sequence) -> bool:
    """Does ``prefix . loop^omega`` satisfy ``f``?

    Evaluates the formula directly on the positions of the lasso, with
    least fixpoints for Until/Finally and greatest fixpoints for
    Release/Globally/WeakUntil.  No automata are involved.
    """
    if not loop:
        raise ValueError("loop must be nonempty")
    word = [valuation(v) for v in list(prefix) + list(loop)]
    n = len(word)
    start = len(prefix)
    succ = [i + 1 if i + 1 < n else start for i in range(n)]
    cache: dict[int, list[bool]] = {}  # by node identity; hashing trees is slow

    def fix(step, least: bool):
        cur = [not least] * n
        while True:
            changed = False
            for i in reversed(range(n)):
                val = step(i, cur)
                if val != cur[i]:
                    cur[i] = val
                    changed = True
            if not changed:
                return cur

    def ev(g: Formula) -> list[bool]:
        if id(g) in cache:
            return cache[id(g)]
        if isinstance(g, TrueF):
            res = [True] * n
        elif isinstance(g, FalseF):
            res = [False] * n
        elif isinstance(g, Atom):
            res = [g.name in w for w in word]
        elif isinstance(g, Not):
            res = [not x for x in ev(g.arg)]
        elif isinstance(g, And):
            a, b = ev(g.left), ev(g.right)
            res = [x and y for x, y in zip(a, b)]
        elif isinstance(g, Or):
            a, b = ev(g.left), ev(g.right)
            res = [x or y for x, y in zip(a, b)]
        elif isinstance(g, Implies):
            a, b = ev(g.left), ev(g.right)
            res = [(not x) or y for x, y in zip(a, b)]
        elif isinstance(g, Iff):
            a, b = ev(g.left), ev(g.right)
            res = [x == y for x, y in zip(a, b)]
        elif isinstance(g, Next):
            a = ev(g.arg)
            res = [a[succ[i]] for i in range(n)]
        elif isinstance(g, Finally):
            a = ev(g.arg)
            res = fix(lambda i, cur: a[i] or cur[succ[i]], least=True)
        elif isinstance(g, Globally):
            a = ev(g.arg)
            res = fix(lambda i, cur: a[i] and cur[succ[i]], least=False)
        elif isinstance(g, Until):
            a, b = ev(g.left), ev(g.right)
            res = fix(lambda i, cur: b[i] or (a[i] and cur[succ[i]]), least=True)
        elif isinstance(g, Release):
            a, b = ev(g.left), ev(g.right)
            res = fix(lambda i, cur: b[i] and (a[i] or cur[succ[i]]), least=False)
        elif isinstance(g, WeakUntil):
            a, b = ev(g.left), ev(g.right)
            res = fix(lambda i, cur: b[i] or (a[i] and cur[succ[i]]), least=False)
        else:
            raise TypeError(f"unsupported node in LTL formula: {g!r}")
        cache[id(g)] = res
        return res

    return ev(f)[0]


# --------------------------------------------------------------------------
# HOA output


def to_hoa(aut: Automaton, name: str = "") -> str:
    aps = list(aut.aps)
    idx = {ap: i for i, ap in enumerate(aps)}
    lines = ["HOA: v1"]
    if name:
        lines.append(f'name: "{name}"')
    lines.append(f"States: {aut.num_states}")
    init = sorted(aut.initial)
    if aut.branching == "universal" and len(init) > 1:
        lines.append("Start: " + "&".join(str(q) for q in init))
    else:
        lines.extend(f"Start: {q}" for q in init)
    lines.append(f"AP: {len(aps)}" + "".join(f' "{ap}"' for ap in aps))
    if aut.acceptance == "buchi":
        lines += ["acc-name: Buchi", "Acceptance: 1 Inf(0)"]
    else:
        lines += ["acc-name: co-Buchi", "Acceptance: 1 Fin(0)"]
    props = "properties: trans-labels explicit-labels state-acc"
    if aut.branching == "universal":
        props += " univ-branch"
    lines.append(props)
    lines.append("--BODY--")
    out = aut.out_edges()
    for q in aut.states:
        mark = " {0}" if q in aut.accepting else ""
        lines.append(f"State: {q}{mark}")
        for g, d in out[q]:
            if g:
                label = "&".join(
                    (str(idx[ap]) if pos else f"!{idx[ap]}") for ap, pos in sorted(g)
                )
            else:
                label = "t"
            lines.append(f"[{label}] {d}")
    lines.append("--END--")
    return "\n".join(lines) + "\n"
