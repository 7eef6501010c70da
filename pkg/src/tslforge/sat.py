"""Pluggable propositional satisfiability backends.

Clauses are lists of nonzero DIMACS integers.  A backend returns the set of
true variables for a satisfiable instance, ``None`` for an unsatisfiable
one, and raises :class:`ResourceLimit` when it runs out of time.

Backends are named by a string:

``cadical`` (default)
    CaDiCaL through the ``python-sat`` bindings.
``dpll``
    The embedded solver below; slow but dependency free.
``cmd:<path>``
    An external executable that reads DIMACS CNF on stdin and prints
    ``s SATISFIABLE`` / ``v ...`` lines in the SAT-competition format.

The environment variable ``TSLFORGE_SOLVER`` selects the default.
"""

from __future__ import annotations

import os
import subprocess
import threading
import time
from typing import Iterable, Sequence

from pysat.formula import IDPool

from .errors import ResourceLimit

SOLVER_ENV = "TSLFORGE_SOLVER"


class CNF:
    """Clause collector with named variables."""

    def __init__(self):
        self.pool = IDPool()
        self.clauses: list[list[int]] = []

    def var(self, *key) -> int:
        return self.pool.id(key)

    def fresh(self) -> int:
        return self.pool.id(("_aux", self.pool.top + 1))

    @property
    def num_vars(self) -> int:
        return self.pool.top

    def add(self, clause: Iterable[int]) -> None:
        self.clauses.append(list(clause))

    def exactly_one(self, lits: Sequence[int]) -> None:
        self.add(lits)
        self.at_most_one(lits)

    def at_most_one(self, lits: Sequence[int]) -> None:
        lits = list(lits)
        if len(lits) <= 5:
            for i in range(len(lits)):
                for j in range(i + 1, len(lits)):
                    self.add([-lits[i], -lits[j]])
            return
        # sequential counter
        prev = None
        for i, lit in enumerate(lits):
            if i == len(lits) - 1:
                if prev is not None:
                    self.add([-lit, -prev])
                break
            s = self.fresh()
            self.add([-lit, s])
            if prev is not None:
                self.add([-prev, s])
                self.add([-lit, -prev])
            prev = s

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        lines += [" ".join(map(str, c)) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"


def default_backend() -> str:
    return os.environ.get(SOLVER_ENV, "cadical") or "cadical"


def solve(
    clauses: Sequence[Sequence[int]],
    num_vars: int,
    backend: str | None = None,
    timeout: float | None = None,
) -> set[int] | None:
    backend = backend or default_backend()
    if backend == "cadical":
        return _solve_pysat(clauses, timeout)
    if backend == "dpll":
        return dpll(clauses, num_vars, timeout)
    if backend.startswith("cmd:"):
        return _solve_external(backend[4:], clauses, num_vars, timeout)
    raise ValueError(f"unknown satisfiability backend {backend!r}")


def _solve_pysat(clauses, timeout) -> set[int] | None:
    from pysat.solvers import Solver

    with Solver(name="cadical195", bootstrap_with=clauses) as solver:
        timer = None
        if timeout is not None:
            timer = threading.Timer(max(timeout, 0.0), solver.interrupt)
            timer.start()
        try:
            result = solver.solve_limited(expect_interrupt=timeout is not None)
        finally:
            if timer is not None:
                timer.cancel()
        if result is None:
            raise ResourceLimit(f"solver interrupted after {timeout:.1f}s")
        if not result:
            return None
        return {lit for lit in solver.get_model() if lit > 0}


def _solve_external(path, clauses, num_vars, timeout) -> set[int] | None:
    lines = [f"p cnf {num_vars} {len(clauses)}"]
    lines += [" ".join(map(str, c)) + " 0" for c in clauses]
    try:
        proc = subprocess.run(
            [path],
            input="\n".join(lines) + "\n",
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise ResourceLimit(f"external solver timed out after {timeout}s") from exc
    status = None
    model: set[int] = set()
    for line in proc.stdout.splitlines():
        if line.startswith("s "):
            status = line[2:].strip()
        elif line.startswith("v "):
            model |= {int(x) for x in line[2:].split() if int(x) > 0}
    if status == "SATISFIABLE":
        return model
    if status == "UNSATISFIABLE":
        return None
    raise ResourceLimit(f"external solver gave no verdict (exit {proc.returncode})")


# --------------------------------------------------------------------------
# embedded solver


def dpll(
    clauses: Sequence[Sequence[int]],
    num_vars: int,
    timeout: float | None = None,
) -> set[int] | None:
    """DPLL with two-watched-literal propagation and chronological
    backtracking.  Adequate for the small instances of the test suite."""
    deadline = None if timeout is None else time.monotonic() + timeout
    assign: dict[int, bool] = {}
    cls: list[list[int]] = []
    for c in clauses:
        c = list(dict.fromkeys(c))
        if any(-lit in c for lit in c):
            continue
        if not c:
            return None
        cls.append(c)
    watches: dict[int, list[int]] = {}
    units = []
    for idx, c in enumerate(cls):
        if len(c) == 1:
            units.append(c[0])
        else:
            watches.setdefault(c[0], []).append(idx)
            watches.setdefault(c[1], []).append(idx)

    def value(lit):
        v = assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    trail: list[int] = []

    def propagate(queue) -> bool:
        while queue:
            lit = queue.pop()
            val = value(lit)
            if val is False:
                return False
            if val is True:
                continue
            assign[abs(lit)] = lit > 0
            trail.append(abs(lit))
            false_lit = -lit
            watching = watches.get(false_lit, [])
            keep = []
            ok = True
            for pos, idx in enumerate(watching):
                if not ok:
                    keep.append(idx)
                    continue
                c = cls[idx]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                if value(c[0]) is True:
                    keep.append(idx)
                    continue
                for k in range(2, len(c)):
                    if value(c[k]) is not False:
                        c[1], c[k] = c[k], c[1]
                        watches.setdefault(c[1], []).append(idx)
                        break
                else:
                    keep.append(idx)
                    other = value(c[0])
                    if other is False:
                        ok = False
                    elif other is None:
                        queue.append(c[0])
            watches[false_lit] = keep
            if not ok:
                return False
        return True

    if not propagate(list(units)):
        return None
    # (trail length, decision literal, tried both)
    decisions: list[tuple[int, int, bool]] = []
    steps = 0
    while True:
        steps += 1
        if deadline is not None and steps % 256 == 0 and time.monotonic() > deadline:
            raise ResourceLimit(f"embedded solver exceeded {timeout:.1f}s")
        var = next((v for v in range(1, num_vars + 1) if v not in assign), None)
        if var is None:
            return {v for v, on in assign.items() if on}
        decisions.append((len(trail), var, False))
        ok = propagate([var])
        while not ok:
            while decisions and decisions[-1][2]:
                decisions.pop()
            if not decisions:
                return None
            mark, lit, _ = decisions.pop()
            for v in trail[mark:]:
                del assign[v]
            del trail[mark:]
            decisions.append((mark, -lit, True))
            ok = propagate([-lit])
