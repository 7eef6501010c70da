"""Independent reference implementations used as test oracles.

Nothing here calls into the code under test except for data classes and,
in the Mealy enumeration, an automaton whose language the automata tests
check separately against :func:`holds`.
"""

from __future__ import annotations

import itertools

from tslforge.syntax import (
    And,
    Atom,
    FalseF,
    Finally,
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
)
from tslforge.synth import MealyMachine


def holds(f, prefix, loop, i=0) -> bool:
    """Truth of ``f`` at position ``i`` of ``prefix . loop^omega``.

    Unrolls the lasso explicitly: from any position, the positions reached
    within ``len(prefix) + len(loop)`` steps cover every suffix the word
    has, so bounded scans decide the unbounded operators.
    """
    word = [frozenset(v) for v in list(prefix) + list(loop)]
    n, start = len(word), len(prefix)

    def pos(j):
        return j if j < n else start + (j - start) % len(loop)

    def ev(g, j):
        j = pos(j)
        if isinstance(g, TrueF):
            return True
        if isinstance(g, FalseF):
            return False
        if isinstance(g, Atom):
            return g.name in word[j]
        if isinstance(g, Not):
            return not ev(g.arg, j)
        if isinstance(g, And):
            return ev(g.left, j) and ev(g.right, j)
        if isinstance(g, Or):
            return ev(g.left, j) or ev(g.right, j)
        if isinstance(g, Implies):
            return (not ev(g.left, j)) or ev(g.right, j)
        if isinstance(g, Iff):
            return ev(g.left, j) == ev(g.right, j)
        if isinstance(g, Next):
            return ev(g.arg, j + 1)
        horizon = range(j, j + n + 1)
        if isinstance(g, Finally):
            return any(ev(g.arg, m) for m in horizon)
        if isinstance(g, Globally):
            return all(ev(g.arg, m) for m in horizon)
        if isinstance(g, Until):
            for m in horizon:
                if ev(g.right, m):
                    return True
                if not ev(g.left, m):
                    return False
            return False
        if isinstance(g, WeakUntil):
            for m in horizon:
                if ev(g.right, m):
                    return True
                if not ev(g.left, m):
                    return False
            return True
        if isinstance(g, Release):
            for m in horizon:
                if not ev(g.right, m):
                    return False
                if ev(g.left, m):
                    return True
            return True
        raise TypeError(f"unexpected node {g!r}")

    return ev(f, i)


def letters(aps):
    aps = list(aps)
    return [frozenset(c) for r in range(len(aps) + 1) for c in itertools.combinations(aps, r)]


def lassos(aps, max_len=4):
    """All lasso words with ``len(prefix) + len(loop) <= max_len``."""
    alphabet = letters(aps)
    for total in range(1, max_len + 1):
        for loop_len in range(1, total + 1):
            for word in itertools.product(alphabet, repeat=total):
                yield list(word[: total - loop_len]), list(word[total - loop_len:])


def all_machines(k, inputs, outputs):
    """Every Mealy machine with exactly ``k`` states, initial state 0,
    reading valuations of ``inputs`` and writing valuations of ``outputs``."""
    in_letters = letters(inputs)
    out_letters = letters(outputs)
    keys = [(s, a) for s in range(k) for a in in_letters]
    choices = [(o, d) for o in out_letters for d in range(k)]
    for row in itertools.product(choices, repeat=len(keys)):
        yield MealyMachine(k, tuple(inputs), tuple(outputs), dict(zip(keys, row)))


def machine_violates(machine, nba) -> bool:
    """Does some infinite run of ``machine`` produce a word accepted by the
    Büchi automaton ``nba`` (the automaton of the negated property)?

    Explores the product of machine and automaton, then looks for an
    accepting product node that can reach itself.
    """
    rows = {}
    for (src, letter), (label, nxt) in machine.table.items():
        rows.setdefault(src, []).append((letter | label, nxt))
    edges = {}
    for qs, guard, qd in nba.edges:
        edges.setdefault(qs, []).append((guard, qd))
    adj = {}
    stack = [(machine.initial, q) for q in nba.initial]
    while stack:
        node = stack.pop()
        if node in adj:
            continue
        s, q = node
        adj[node] = succ = set()
        for word, nxt in rows.get(s, ()):
            for guard, qd in edges.get(q, ()):
                if all((ap in word) == pos for ap, pos in guard):
                    succ.add((nxt, qd))
        stack.extend(succ)
    for node in adj:
        if node[1] not in nba.accepting:
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


def exists_machine(nba_of_negation, k, inputs, outputs) -> bool:
    """Brute force: is there a machine with at most ``k`` states none of
    whose runs the negation's automaton accepts?"""
    for size in range(1, k + 1):
        for m in all_machines(size, inputs, outputs):
            if not machine_violates(m, nba_of_negation):
                return True
    return False

