import pytest

from concretix.logic import (
    Atom,
    ParseError,
    SafetyError,
    Sym,
    Var,
    parse_program,
)
from concretix.logic.syntax import Comparison, Literal, render_term


def test_single_fact():
    program = parse_program('node("hdf5").')
    assert len(program) == 1
    rule = program.rules[0]
    assert rule.kind == "fact"
    assert rule.head == Atom("node", ("hdf5",))


def test_empty_text_gives_empty_program():
    assert len(parse_program("")) == 0
    assert len(parse_program("% only a comment\n")) == 0


def test_unsafe_negative_variable_rejected():
    with pytest.raises(SafetyError) as exc:
        parse_program("p(X) :- not q(X).")
    assert exc.value.variable == "X"


def test_unsafe_head_variable_rejected():
    with pytest.raises(SafetyError):
        parse_program("p(X, Y) :- q(X).")


def test_anonymous_variable_under_negation_rejected():
    with pytest.raises(SafetyError):
        parse_program("b(P) :- node(P), not hash(P, _).")


def test_anonymous_variable_positive_is_safe():
    program = parse_program("has(P) :- hash(P, _), node(P).")
    assert program.rules[0].kind == "normal"


def test_bare_and_quoted_constants_differ():
    program = parse_program('p(a). p("a").')
    heads = [r.head for r in program.rules]
    assert heads[0] != heads[1]
    assert heads[0].args == (Sym("a"),)
    assert heads[1].args == ("a",)


def test_normal_rule_structure():
    program = parse_program("node(D) :- node(P), depends_on(P, D).")
    rule = program.rules[0]
    assert rule.kind == "normal"
    assert rule.head.pred == "node"
    assert [item.atom.pred for item in rule.body] == ["node", "depends_on"]


def test_integrity_and_comparison():
    program = parse_program(":- foo(A), foo(B), A != B.")
    rule = program.rules[0]
    assert rule.kind == "integrity"
    cmp_item = rule.body[2]
    assert isinstance(cmp_item, Comparison)
    assert cmp_item.op == "!="
    assert cmp_item.left == Var("A")


def test_choice_rule_with_bounds():
    text = "1 { version(P, V) : declared(P, V) } 1 :- node(P)."
    rule = parse_program(text).rules[0]
    assert rule.kind == "choice"
    assert rule.head.lower == 1 and rule.head.upper == 1
    assert rule.head.elements[0].atom.pred == "version"
    assert rule.head.elements[0].condition[0].atom.pred == "declared"


def test_plain_choice_without_bounds():
    rule = parse_program("{ a; b }.").rules[0]
    assert rule.head.lower is None and rule.head.upper is None
    assert len(rule.head.elements) == 2


def test_invalid_choice_bounds():
    with pytest.raises(ParseError):
        parse_program("2 { a; b } 1.")


def test_minimize_statement():
    rule = parse_program("#minimize { W@3,P,V : weight(P, V, W) }.").rules[0]
    assert rule.kind == "minimize"
    assert rule.head.level == 3
    assert rule.head.weight == Var("W")
    assert rule.head.keys == (Var("P"), Var("V"))


def test_minimize_unbound_weight_rejected():
    with pytest.raises(SafetyError):
        parse_program("#minimize { W@3,P : weight(P) }.")


def test_syntax_error_carries_location():
    with pytest.raises(ParseError) as exc:
        parse_program("node(.")
    assert exc.value.line == 1
    assert exc.value.col >= 5


def test_negative_integers_and_strings():
    rule = parse_program('w(-3, "a b\\"c").').rules[0]
    assert rule.head.args[0] == -3
    assert rule.head.args[1] == 'a b"c'


def test_render_round_trip():
    text = (
        'node("hdf5").\n'
        "node(D) :- node(P), depends_on(P, D).\n"
        ":- path(A, B), path(B, A).\n"
        "1 { v(P, X) : d(P, X) } 1 :- node(P).\n"
        "#minimize { W@3,P : weight(P, W) }.\n"
    )
    program = parse_program(text)
    rendered = program.render()
    again = parse_program(rendered)
    assert rendered == again.render()
    assert [r.kind for r in again.rules] == ["fact", "normal", "integrity", "choice", "minimize"]


def test_render_term_quoting():
    assert render_term(Sym("abc")) == "abc"
    assert render_term("abc") == '"abc"'
    assert render_term(7) == "7"
