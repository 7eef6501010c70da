import pytest

from tslforge import encode_parts, parse_spec, synthesize
from tslforge.automata import ltl_to_nba, spec_to_ucw
from tslforge.errors import CapacityError, NonExclusiveOutput
from tslforge.parser import parse_ltl
from tslforge.syntax import Not
from tslforge.synth import (
    Interface,
    MealyMachine,
    Realizable,
    Unknown,
    UnrealizableCertified,
    bounded_realizable,
    check_exclusive,
    instantiate_chain,
    is_monotone,
    minimal_realizable,
    verify_machine,
)

from oracles import machine_violates


def ucw_for(spec_text, hold_outputs=False):
    enc = encode_parts(parse_spec(spec_text), hold_outputs)
    return enc, spec_to_ucw(enc.core_formula, enc.aps.ids)


ALTERNATE = "ALWAYS GUARANTEE { F [o <- a()]; F [o <- b()]; }"


def test_constant_update_one_state():
    enc, ucw = ucw_for("ALWAYS GUARANTEE { [o <- a()]; }")
    m = bounded_realizable(ucw, enc.aps, 1)
    assert m is not None and m.num_states == 1
    (u,) = enc.aps.update_groups["o"]
    assert all(label == {u} for label, _ in m.table.values())


def test_alternator_needs_two_states():
    enc, ucw = ucw_for(ALTERNATE)
    assert bounded_realizable(ucw, enc.aps, 1) is None
    m = bounded_realizable(ucw, enc.aps, 2)
    assert m is not None
    labels = m.run([frozenset()] * 4)
    assert labels[0] != labels[1] and labels[0] == labels[2] and labels[1] == labels[3]
    assert {next(iter(l)) for l in labels} == set(enc.aps.update_groups["o"])


def test_predicate_copy_one_state():
    enc, ucw = ucw_for(
        "ALWAYS GUARANTEE { p x <-> [o <- f x]; !p x <-> [o <- g()]; }"
    )
    m = bounded_realizable(ucw, enc.aps, 1)
    assert m is not None
    (p,) = enc.aps.uncontrollable
    by_term = {e["term"]: e["id"] for e in enc.aps.to_json()}
    assert m.step(0, {p})[0] == {by_term["[o <- f x]"]}
    assert m.step(0, set())[0] == {by_term["[o <- g()]"]}


def test_verify_machine_alternator_and_constant():
    enc, ucw = ucw_for(ALTERNATE)
    ua, ub = enc.aps.update_groups["o"]
    e = frozenset()
    alternator = MealyMachine(2, (), (ua, ub), {(0, e): (frozenset({ua}), 1), (1, e): (frozenset({ub}), 0)})
    constant = MealyMachine(1, (), (ua, ub), {(0, e): (frozenset({ua}), 0)})
    assert verify_machine(alternator, ucw)
    assert not verify_machine(constant, ucw)
    nba = ltl_to_nba(Not(enc.core_formula), enc.aps.ids)
    assert not machine_violates(alternator, nba)
    assert machine_violates(constant, nba)


def test_synthesize_reports_minimal_bound():
    result = synthesize(parse_spec(ALTERNATE), max_k=4)
    assert isinstance(result, Realizable)
    assert result.bound == 2
    enc = encode_parts(parse_spec(ALTERNATE))
    ucw = spec_to_ucw(enc.core_formula, enc.aps.ids)
    assert bounded_realizable(ucw, enc.aps, result.bound - 1) is None
    assert verify_machine(result.machine, ucw)
    check_exclusive(result.machine, enc.aps)


def test_conflicting_updates_certified_unrealizable():
    result = synthesize(parse_spec("ALWAYS GUARANTEE { [o <- a()]; [o <- b()]; }"), max_k=2)
    assert isinstance(result, UnrealizableCertified)
    assert result.counter_machine.num_states >= 1


def test_unknown_without_dual():
    result = synthesize(
        parse_spec("ALWAYS GUARANTEE { [o <- a()]; [o <- b()]; }"), max_k=2, dual=False
    )
    assert isinstance(result, Unknown)
    assert result.bound_exhausted == 2
    assert not result.resource_limited


def test_prediction_is_unrealizable():
    # the system would have to know the next input
    result = synthesize(
        parse_spec("ALWAYS GUARANTEE { [o <- a()] <-> X p x; }"), max_k=3
    )
    assert isinstance(result, UnrealizableCertified)


def test_check_exclusive_rejects_double_write():
    iface = Interface((), ("u0", "u1"), (("u0", "u1"),))
    e = frozenset()
    bad = MealyMachine(1, (), ("u0", "u1"), {(0, e): (frozenset({"u0", "u1"}), 0)})
    with pytest.raises(NonExclusiveOutput):
        check_exclusive(bad, iface)


def test_input_cap():
    preds = " && ".join(f"p{i} x" for i in range(13))
    spec = parse_spec(f"ALWAYS GUARANTEE {{ {preds} -> [o <- a()]; }}")
    result = synthesize(spec, max_k=1)
    assert isinstance(result, Unknown) and result.resource_limited
    assert "13" in result.reason
    iface = Interface(tuple(f"p{i}" for i in range(13)), ("u0",), (("u0",),))
    with pytest.raises(CapacityError):
        bounded_realizable(spec_to_ucw(parse_ltl("true"), ()), iface, 1)


def test_machine_json_round_trip():
    result = synthesize(parse_spec(ALTERNATE), max_k=3)
    m = result.machine
    doc = m.to_json()
    assert set(doc) == {"states", "initial", "inputs", "outputs", "table"}
    assert MealyMachine.from_json(doc) == m
    assert m.dumps() == MealyMachine.from_json(doc).dumps()


def test_dpll_backend_agrees():
    enc, ucw = ucw_for(ALTERNATE)
    assert bounded_realizable(ucw, enc.aps, 1, backend="dpll") is None
    m = bounded_realizable(ucw, enc.aps, 2, backend="dpll")
    assert m is not None and verify_machine(m, ucw)


def test_chain_helpers():
    assert instantiate_chain("a -> {chain}b", 3) == "a -> X X X b"
    real = Realizable(MealyMachine(1, (), (), {}), 1)
    unk = Unknown(2)
    assert minimal_realizable({1: unk, 2: real, 3: real}) == 2
    assert is_monotone({1: unk, 2: real, 3: real})
    assert not is_monotone({1: real, 2: unk})
    with pytest.raises(ValueError):
        instantiate_chain("{chain}", -1)
