import itertools
import random
import stat
import sys

import pytest

from tslforge.errors import ResourceLimit
from tslforge.sat import CNF, dpll, solve


def brute_force(clauses, n):
    for bits in itertools.product((False, True), repeat=n):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            return True
    return False


def satisfied(model, clauses):
    return all(any((abs(l) in model) == (l > 0) for l in c) for c in clauses)


def random_cnf(rng, n, m):
    return [
        [v if rng.random() < 0.5 else -v for v in rng.sample(range(1, n + 1), 3)]
        for _ in range(m)
    ]


@pytest.mark.parametrize("backend", ["dpll", "cadical"])
def test_random_3cnf_against_truth_table(backend):
    rng = random.Random(7)
    for _ in range(150):
        n = rng.randint(3, 9)
        clauses = random_cnf(rng, n, rng.randint(2, 5 * n))
        model = solve(clauses, n, backend=backend)
        assert (model is not None) == brute_force(clauses, n)
        if model is not None:
            assert satisfied(model, clauses)


def test_empty_clause_is_unsat():
    assert dpll([[1], []], 1) is None


def test_tautologies_are_dropped():
    assert dpll([[1, -1]], 1) is not None


@pytest.mark.parametrize("size", [1, 2, 5, 6, 9])
def test_exactly_one(size):
    cnf = CNF()
    xs = [cnf.var("x", i) for i in range(size)]
    cnf.exactly_one(xs)
    n = cnf.num_vars
    for bits in itertools.product((False, True), repeat=size):
        fixed = cnf.clauses + [[x if b else -x] for x, b in zip(xs, bits)]
        assert (dpll(fixed, n) is not None) == (sum(bits) == 1)


def test_var_is_stable_per_key():
    cnf = CNF()
    a = cnf.var("tau", 0, 1)
    assert cnf.var("tau", 0, 1) == a
    assert cnf.fresh() != a
    assert cnf.num_vars == 2


def test_dimacs():
    cnf = CNF()
    a, b = cnf.var("a"), cnf.var("b")
    cnf.add([a, -b])
    assert cnf.to_dimacs() == "p cnf 2 1\n1 -2 0\n"


def test_unknown_backend():
    with pytest.raises(ValueError):
        solve([[1]], 1, backend="nope")


def test_dpll_timeout():
    rng = random.Random(3)
    # pigeonhole 9 into 8: hard for plain DPLL
    cnf = CNF()
    p = {(i, j): cnf.var(i, j) for i in range(9) for j in range(8)}
    for i in range(9):
        cnf.add([p[i, j] for j in range(8)])
    for j in range(8):
        for a, b in itertools.combinations(range(9), 2):
            cnf.add([-p[a, j], -p[b, j]])
    clauses = cnf.clauses[:]
    rng.shuffle(clauses)
    with pytest.raises(ResourceLimit):
        dpll(clauses, cnf.num_vars, timeout=0.2)


def test_external_backend(tmp_path):
    script = tmp_path / "solver"
    script.write_text(
        f"#!{sys.executable}\n"
        "import sys\n"
        "sys.path.insert(0, %r)\n"
        "from tslforge.sat import dpll\n"
        "lines = [l.split() for l in sys.stdin if l.strip() and not l.startswith('p')]\n"
        "clauses = [[int(x) for x in l[:-1]] for l in lines]\n"
        "n = max((abs(x) for c in clauses for x in c), default=0)\n"
        "m = dpll(clauses, n)\n"
        "if m is None:\n"
        "    print('s UNSATISFIABLE')\n"
        "else:\n"
        "    print('s SATISFIABLE')\n"
        "    print('v ' + ' '.join(str(v if v in m else -v) for v in range(1, n + 1)) + ' 0')\n"
        % str(__import__("pathlib").Path(__file__).parents[1] / "src")
    )
    script.chmod(script.stat().st_mode | stat.S_IEXEC)
    assert solve([[1, 2], [-1]], 2, backend=f"cmd:{script}") == {2}
    assert solve([[1], [-1]], 1, backend=f"cmd:{script}") is None
