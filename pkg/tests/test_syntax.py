import pytest

from tslforge.parser import parse_ltl
from tslforge.syntax import CORE, desugar, nnf, pretty, walk

from oracles import holds, lassos


@pytest.mark.parametrize(
    "text, expected",
    [
        ("F p", "true U p"),
        ("G p", "!(true U !p)"),
        ("p R q", "!(!p U !q)"),
    ],
)
def test_desugar_examples(text, expected):
    assert desugar(parse_ltl(text)) == parse_ltl(expected)


def test_weak_until_desugars_to_until_or_globally():
    got = desugar(parse_ltl("p W q"))
    want = desugar(parse_ltl("(p U q) || G p"))
    assert got == want


@pytest.mark.parametrize(
    "text",
    ["a W (b R X c)", "G F a <-> F G b", "(a -> b) U !c", "false || X (a R b)"],
)
def test_desugar_output_is_core(text):
    f = desugar(parse_ltl(text))
    assert all(isinstance(node, CORE) for node in walk(f)), pretty(f)


@pytest.mark.parametrize(
    "text",
    ["!(a U b)", "!(a W b)", "!G (a -> X b)", "!(a <-> F b)", "!(a R !b)"],
)
def test_nnf_preserves_meaning(text):
    f = parse_ltl(text)
    g = nnf(f)
    for node in walk(g):
        if node.__class__.__name__ == "Not":
            assert node.arg.__class__.__name__ == "Atom"
    for prefix, loop in lassos(["a", "b"], 3):
        assert holds(f, prefix, loop) == holds(g, prefix, loop)
