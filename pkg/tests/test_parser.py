import pytest

from tslforge import parse_formula, parse_spec, parse_term, pretty, pretty_term
from tslforge.errors import ArityConflict, ClassificationError, ParseError, SignalAsLiteral
from tslforge.parser import parse_ltl
from tslforge.syntax import (
    And,
    Apply,
    Atom,
    Globally,
    Iff,
    Implies,
    Next,
    Not,
    Or,
    Pred,
    SignalRef,
    Until,
    Upd,
    WeakUntil,
)


def test_update_with_constant():
    f = parse_formula("[o <- a()]")
    assert f == Upd("o", Apply("a"))
    assert pretty(f) == "[o <- a()]"


def test_application_by_juxtaposition():
    t = parse_term("f x (g y)")
    assert t == Apply("f", (SignalRef("x"), Apply("g", (SignalRef("y"),))))
    assert pretty_term(t) == "f x (g y)"


def test_predicate_leaf():
    assert parse_formula("p x") == Pred(Apply("p", (SignalRef("x"),)))


def test_precedence_iff_lowest():
    f = parse_formula("a <-> b -> c || d && e")
    a, b, c, d, e = (Pred(SignalRef(n)) for n in "abcde")
    assert f == Iff(a, Implies(b, Or(c, And(d, e))))


def test_binary_temporal_right_associative():
    f = parse_ltl("a U b W c")
    assert f == Until(Atom("a"), WeakUntil(Atom("b"), Atom("c")))


def test_unary_binds_tighter_than_until():
    f = parse_ltl("! a U X b")
    assert f == Until(Not(Atom("a")), Next(Atom("b")))


def test_implies_right_associative():
    f = parse_ltl("a -> b -> c")
    assert f == Implies(Atom("a"), Implies(Atom("b"), Atom("c")))


@pytest.mark.parametrize(
    "text, expected",
    [
        ("[c <- c + 1]", Upd("c", Apply("inc1", (SignalRef("c"),)))),
        ("[c <- c - 1]", Upd("c", Apply("dec1", (SignalRef("c"),)))),
        ("[c <- c + d]", Upd("c", Apply("add", (SignalRef("c"), SignalRef("d"))))),
        ("x = 0", Pred(Apply("eq", (SignalRef("x"), Apply("0"))))),
        ("x > 3", Pred(Apply("gt", (SignalRef("x"), Apply("3"))))),
    ],
)
def test_infix_sugar(text, expected):
    assert parse_formula(text) == expected


@pytest.mark.parametrize(
    "text",
    [
        "G ([o <- f x] -> X [o <- o])",
        "[o <- a()] U (p x && ! q y)",
        "F G (p x <-> [c <- inc1 c])",
        "(a R b) W X c",
        "! (p x || q y) -> [o <- g (h x) y]",
        "true && false || X true",
    ],
)
def test_round_trip_fixpoint(text):
    once = parse_formula(text)
    assert parse_formula(pretty(once)) == once
    assert pretty(parse_formula(pretty(once))) == pretty(once)


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_formula("G ([o <- ] )")
    err = info.value
    assert err.line == 1
    assert err.column is not None and err.column > 1


@pytest.mark.parametrize("text", ["[o <- ", "a && ", "(a", "[3 <- a()]", "a )"])
def test_syntax_errors(text):
    with pytest.raises(ParseError):
        parse_formula(text)


def test_arity_conflict():
    with pytest.raises(ParseError) as info:
        parse_spec("ALWAYS GUARANTEE { [o <- f x]; [o <- f x y]; }")
    assert info.value.kind == "arity"
    assert isinstance(info.value.__cause__, ArityConflict)


def test_signal_used_as_literal():
    with pytest.raises(ParseError) as info:
        parse_spec("ALWAYS GUARANTEE { [o <- x()]; [x <- a()]; }")
    assert info.value.kind == "classification"
    assert isinstance(info.value.__cause__, SignalAsLiteral)


def test_classification():
    spec = parse_spec(
        "ALWAYS GUARANTEE { [c <- inc1 c]; [o <- f i]; [h <- h]; }"
    )
    assert spec.signals.cells == {"c"}
    assert spec.signals.outputs == {"o", "h"}
    assert spec.signals.inputs == {"i"}


def test_declaration_override_checked():
    with pytest.raises(ParseError) as info:
        parse_spec("INPUTS { o } ALWAYS GUARANTEE { [o <- a()]; }")
    assert isinstance(info.value.__cause__, ClassificationError)


def test_sections_and_labels():
    spec = parse_spec(
        """
        INITIALLY ASSUME { p x; }
        ALWAYS ASSUME { F q x; }
        INITIALLY GUARANTEE { [o <- a()]; }
        ALWAYS GUARANTEE {
          //@ first
          [o <- a()] -> X [o <- b()];
          //@ second
          F [o <- b()];
        }
        """
    )
    assert len(spec.initial_assumptions) == 1
    assert len(spec.always_assumptions) == 1
    assert len(spec.initial_guarantees) == 1
    assert spec.labels == {
        "first": ("always_guarantees", 0),
        "second": ("always_guarantees", 1),
    }
    assert spec.labelled("second") == parse_formula("F [o <- b()]")


def test_parse_ltl_rejects_terms():
    with pytest.raises(ParseError):
        parse_ltl("f x")
    assert parse_ltl("G a") == Globally(Atom("a"))
