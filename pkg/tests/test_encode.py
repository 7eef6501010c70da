import pytest

from tslforge import ap_statistics, encode, encode_parts, lt_counts, parse_spec
from tslforge.encode import encoding_document
from tslforge.errors import EmptyUpdateGroup
from tslforge.parser import parse_ltl
from tslforge.syntax import Atom, walk

from oracles import holds


ALTERNATE = "ALWAYS GUARANTEE { F [o <- a()]; F [o <- b()]; }"


def test_two_eventualities_without_hold():
    formula, aps = encode(parse_spec(ALTERNATE), hold_outputs=False)
    assert aps.controllable == ("u0", "u1")
    assert aps.uncontrollable == ()
    assert aps.update_groups == {"o": ["u0", "u1"]}
    want = parse_ltl("G F u0 && G F u1 && G ((u0 || u1) && !(u0 && u1))")
    assert formula == want


def test_output_hold_adds_self_update():
    _, aps = encode(parse_spec(ALTERNATE))
    terms = {e["term"] for e in aps.to_json()}
    assert terms == {"[o <- a()]", "[o <- b()]", "[o <- o]"}


def test_cell_always_has_self_update():
    spec = parse_spec("ALWAYS GUARANTEE { p c -> [c <- f c]; }")
    _, aps = encode(spec, hold_outputs=False)
    group = aps.update_groups["c"]
    terms = {e["term"] for e in aps.to_json() if e["id"] in group}
    assert terms == {"[c <- f c]", "[c <- c]"}


def test_sensor_psi3_propositions():
    spec = parse_spec(
        """ALWAYS GUARANTEE {
          F [partControl <- accOn()];
          F [partControl <- gyrOn()];
          ![partControl <- initOn()] && !gyrFinished && !accFinished && !initFinished
            -> [partControl <- noCmd()];
        }"""
    )
    npreds, nupdates, groups = ap_statistics(spec)
    assert npreds == 3
    assert nupdates == 4
    assert sorted(groups["partControl"]) == sorted(
        ["[partControl <- accOn()]", "[partControl <- gyrOn()]",
         "[partControl <- initOn()]", "[partControl <- noCmd()]"]
    )
    _, aps = encode(spec, hold_outputs=False)
    assert len(aps.update_groups["partControl"]) == 4


def test_empty_update_group():
    with pytest.raises(EmptyUpdateGroup):
        encode(parse_spec("OUTPUTS { o } ALWAYS GUARANTEE { p x; }"))


@pytest.mark.parametrize(
    "text, expected",
    [
        ("ALWAYS GUARANTEE { [o <- a()]; }", (0, 1, {"o": ["[o <- a()]"]})),
        (
            "ALWAYS GUARANTEE { p x -> [o <- f x]; !p x -> [o <- g()]; }",
            (1, 2, {"o": ["[o <- f x]", "[o <- g()]"]}),
        ),
    ],
)
def test_statistics(text, expected):
    assert ap_statistics(parse_spec(text)) == expected


def test_shared_terms_share_propositions():
    spec = parse_spec(
        "ALWAYS GUARANTEE { p x -> [o <- f x]; X [o <- f x]; }"
    )
    _, aps = encode(spec, hold_outputs=False)
    assert len(aps.update_groups["o"]) == 1


def test_exactly_one_in_every_model():
    enc = encode_parts(parse_spec(ALTERNATE))
    ids = enc.aps.update_groups["o"]
    excl = enc.exclusivity[0]
    for bits in range(8):
        letter = {u for i, u in enumerate(ids) if bits >> i & 1}
        assert holds(excl, [], [letter]) == (len(letter) == 1)


def test_atoms_are_table_ids():
    enc = encode_parts(parse_spec("ALWAYS GUARANTEE { p x -> X [o <- f x]; }"))
    ids = set(enc.aps.ids)
    assert {n.name for n in walk(enc.formula) if isinstance(n, Atom)} <= ids


def test_encoding_document_shape():
    doc = encoding_document(encode_parts(parse_spec(ALTERNATE)))
    assert set(doc) == {"formula", "aps", "controllable", "uncontrollable"}
    assert all(set(e) == {"id", "kind", "term", "group"} for e in doc["aps"])


def test_lt_counts():
    spec = parse_spec(
        """ALWAYS ASSUME { F p x; }
        ALWAYS GUARANTEE { [o <- a()] && F [o <- b()]; p x -> [o <- b()]; }"""
    )
    assert lt_counts(spec) == {
        "guarantees": {"L": 2, "T": 1},
        "assumptions": {"L": 0, "T": 1},
    }
