"""Unit tests for grounding, inference, queries, proofs and exports."""

import pytest

from normforge.engine import (
    explain,
    export_conclusions,
    export_proof_tree,
    ground,
    infer,
    literal_to_tuple,
    query,
)
from normforge.errors import NotProvableError, UnknownLiteralError
from normforge.facts import FactBase
from normforge.rules import parse_literal
from generators import tuples_to_core


def run(rules, overrides=frozenset(), facts=frozenset()):
    cp = tuples_to_core(rules, overrides)
    gp = ground(cp, FactBase(frozenset(facts)))
    return gp, infer(gp)


# -- grounding ----------------------------------------------------------------


def test_grounding_is_total_over_the_universe():
    # one variable over a two-constant universe yields two instances, even
    # though the body is underivable for one of them
    from normforge.rules import Atom, BodyLiteral, CoreProgram, Literal, Rule, Term

    schematic = Rule(
        "r1",
        "defeasible",
        Literal(Atom("p", (Term("X"),))),
        (BodyLiteral(Literal(Atom("q", (Term("X"),)))),),
    )
    cp = CoreProgram((schematic,), frozenset(), {"r1": "n1"})
    gp = ground(cp, FactBase(frozenset({("q", ("a",)), ("r", ("b",))})))
    assert {r.key for r in gp.rules} == {("r1", ("a",)), ("r1", ("b",))}
    cs = infer(gp)
    assert cs.tags(("p", ("a",), False)) == {"-D", "+d"}
    assert cs.tags(("p", ("b",), False)) == {"-D", "-d"}


def test_grounding_universe_includes_program_constants():
    from normforge.rules import Atom, BodyLiteral, CoreProgram, Literal, Rule, Term

    schematic = Rule(
        "r1",
        "defeasible",
        Literal(Atom("p", (Term("X"),))),
        (BodyLiteral(Literal(Atom("q", (Term("X"), Term("c"))))),),
    )
    cp = CoreProgram((schematic,), frozenset(), {"r1": "n1"})
    gp = ground(cp, FactBase(frozenset({("q", ("a", "c"))})))
    assert {r.key for r in gp.rules} == {("r1", ("a",)), ("r1", ("c",))}


# -- inference ----------------------------------------------------------------


def test_strict_chain_gives_definite_conclusions():
    rules = (
        ("r1", "strict", ("b", (), False), (("a", (), False),), ()),
        ("r2", "strict", ("c", (), False), (("b", (), False),), ()),
    )
    _, cs = run(rules, facts={("a", ())})
    for pred in ("a", "b", "c"):
        assert cs.tags((pred, (), False)) == {"+D", "+d"}


def test_defeater_attacks_but_never_supports():
    rules = (
        ("r1", "defeasible", ("p", (), False), (("a", (), False),), ()),
        ("r2", "defeater", ("p", (), True), (("b", (), False),), ()),
    )
    _, cs = run(rules, facts={("a", ()), ("b", ())})
    # the defeater blocks +d p but cannot establish +d ~p
    assert cs.tags(("p", (), False)) == {"-D", "-d"}
    assert cs.tags(("p", (), True)) == {"-D", "-d"}


def test_team_defeat():
    rules = (
        ("r1", "defeasible", ("p", (), False), (), ()),
        ("r2", "defeasible", ("p", (), False), (), ()),
        ("s1", "defeasible", ("p", (), True), (), ()),
        ("s2", "defeasible", ("p", (), True), (), ()),
    )
    overrides = frozenset({("r1", "s1"), ("r2", "s2")})
    _, cs = run(rules, overrides=overrides)
    assert cs.tags(("p", (), False)) == {"-D", "+d"}
    assert cs.tags(("p", (), True)) == {"-D", "-d"}
    # without the second override, s2 stands and blocks the team
    _, cs = run(rules, overrides=frozenset({("r1", "s1")}))
    assert cs.tags(("p", (), False)) == {"-D", "-d"}


def test_naf_reads_defeasible_refutation():
    rules = (
        ("r1", "defeasible", ("p", (), False), (), (("q", (), False),)),
        ("r2", "defeasible", ("q", (), False), (("a", (), False),), ()),
    )
    _, cs = run(rules)  # no a, so q fails and naf q holds
    assert cs.tags(("p", (), False)) == {"-D", "+d"}
    _, cs = run(rules, facts={("a", ())})
    assert cs.tags(("p", (), False)) == {"-D", "-d"}


def test_definite_conflict_is_reported_as_inconsistency():
    rules = (("r1", "strict", ("p", (), True), (("a", (), False),), ()),)
    _, cs = run(rules, facts={("a", ()), ("p", ())})
    assert cs.tags(("p", (), False)) == {"+D", "+d"}
    assert cs.tags(("p", (), True)) == {"+D", "+d"}
    assert cs.inconsistencies == ((("p", (), False), ("p", (), True)),)


# -- query / explain ------------------------------------------------------------


def test_query_rejects_literals_outside_the_vocabulary():
    rules = (("r1", "defeasible", ("p", ("a",), False), (), ()),)
    _, cs = run(rules)
    assert query(cs, ("p", ("a",), False)) == {"-D", "+d"}
    with pytest.raises(UnknownLiteralError):
        query(cs, ("ghost", ("a",), False))
    with pytest.raises(UnknownLiteralError):
        query(cs, ("p", ("a", "a"), False))  # wrong arity
    with pytest.raises(UnknownLiteralError):
        query(cs, ("p", ("zz",), False))  # unknown constant


def test_infer_extra_vocabulary_is_tagged():
    rules = (("r1", "defeasible", ("p", (), False), (), ()),)
    cp = tuples_to_core(rules, frozenset())
    gp = ground(cp, FactBase(frozenset()))
    goal = ("ghost", ("k",), False)
    cs = infer(gp, vocabulary=[goal])
    assert query(cs, goal) == {"-D", "-d"}


def test_explain_definite_and_defeasible_proofs():
    rules = (
        ("r1", "strict", ("b", (), False), (("a", (), False),), ()),
        ("r2", "defeasible", ("p", (), False), (("b", (), False),), (("q", (), False),)),
    )
    gp, cs = run(rules, facts={("a", ())})
    tree = explain(gp, cs, ("p", (), False))
    assert export_proof_tree(tree) == (
        "+d p <- r2\n"
        "  +D b <- r1\n"
        "    +D a <- fact\n"
        "  -d q <- naf\n"
    )
    with pytest.raises(NotProvableError):
        explain(gp, cs, ("q", (), False))


def test_explain_records_defeated_attackers():
    rules = (
        ("r1", "defeasible", ("p", (), False), (), ()),
        ("s1", "defeasible", ("p", (), True), (), ()),
    )
    gp, cs = run(rules, overrides=frozenset({("r1", "s1")}))
    tree = explain(gp, cs, ("p", (), False))
    assert tree.defeated_attackers == (("s1", "r1"),)
    assert "defeated s1 by r1" in export_proof_tree(tree)


# -- exports ----------------------------------------------------------------------


def test_export_conclusions_sorted_and_total():
    rules = (("r1", "defeasible", ("p", (), False), (("a", (), False),), ()),)
    _, cs = run(rules, facts={("a", ())})
    assert export_conclusions(cs) == (
        "+D a\n"
        "+d a\n"
        "+d p\n"
        "-D p\n"
        "-D ~a\n"
        "-D ~p\n"
        "-d ~a\n"
        "-d ~p\n"
    )


def test_literal_to_tuple():
    assert literal_to_tuple(parse_literal("~p(a,b)")) == ("p", ("a", "b"), True)
    with pytest.raises(UnknownLiteralError):
        literal_to_tuple(parse_literal("p(X)"))
