"""Goal-type language: grammar, normalization/comparability, the predicate
registry, and goal matching."""

import random

import pytest
from hypothesis import given, strategies as st

from psgraph.goaltypes import (
    Atom, Clause, DuplicatePredicate, GoalType, Gnode, Literal, ParseError,
    PredicateRegistry, UnknownPredicate, comparable, default_registry,
    explain_match, match_goal, normalize, parse_goaltype, register_predicate,
)
from psgraph.prover import Pnode, default_context
from psgraph.terms import parse_prop


def goaltypes():
    atoms = st.sampled_from([Atom("a"), Atom("b"), Atom("c"),
                             Atom("p", ("x",)), Atom("p", ("x", "y"))])
    literals = st.builds(Literal, atoms, st.booleans())
    clauses = st.builds(lambda ls: Clause(tuple(ls)),
                        st.lists(literals, min_size=1, max_size=3))
    return st.builds(lambda cs: GoalType(tuple(cs)),
                     st.lists(clauses, min_size=1, max_size=3))


class TestGrammar:
    def test_structure(self):
        gt = parse_goaltype("not a or b; c(x, y)")
        assert gt == GoalType((
            Clause((Literal(Atom("a"), True), Literal(Atom("b")))),
            Clause((Literal(Atom("c", ("x", "y"))),)),
        ))

    def test_str_roundtrip_examples(self):
        for text in ["any", "not is_eq", "a or b; not c",
                     "top_symbol(eq)", "p(x, y) or not q"]:
            gt = parse_goaltype(text)
            assert parse_goaltype(str(gt)) == gt

    @given(goaltypes())
    def test_str_roundtrip(self, gt):
        assert parse_goaltype(str(gt)) == gt

    def test_errors(self):
        for bad, pos in [("", 0), ("a or", 4), ("a;", 2), ("not", 3),
                         ("a b", 2), ("p(", 2), ("p(x", 3)]:
            with pytest.raises(ParseError) as exc:
                parse_goaltype(bad)
            assert exc.value.position == pos
        with pytest.raises(ParseError):
            parse_goaltype("a ? b")


class TestComparable:
    def test_commutative_and_idempotent(self):
        assert comparable(parse_goaltype("a; b"), parse_goaltype("b; a"))
        assert comparable(parse_goaltype("a or b"), parse_goaltype("b or a"))
        assert comparable(parse_goaltype("a; a"), parse_goaltype("a"))
        assert comparable(parse_goaltype("a or a or b"), parse_goaltype("b or a"))

    def test_double_negation(self):
        assert comparable(parse_goaltype("not not a"), parse_goaltype("a"))
        assert not comparable(parse_goaltype("not a"), parse_goaltype("a"))

    def test_syntactic_not_semantic(self):
        # Comparability is normalized syntactic equality, not logical
        # equivalence: these denote the same predicate set but differ.
        assert not comparable(parse_goaltype("a; a or b"), parse_goaltype("a"))

    @given(goaltypes())
    def test_reflexive_and_normalize_idempotent(self, gt):
        assert comparable(gt, gt)
        assert normalize(normalize(gt)) == normalize(gt)

    @given(goaltypes(), st.integers(0, 2 ** 30))
    def test_invariant_under_shuffle(self, gt, seed):
        rng = random.Random(seed)
        clauses = [Clause(tuple(rng.sample(c.literals, len(c.literals))))
                   for c in gt.clauses]
        rng.shuffle(clauses)
        shuffled = GoalType(tuple(clauses + [clauses[0]]))
        assert comparable(gt, shuffled)

    @given(goaltypes(), goaltypes(), goaltypes())
    def test_equivalence_relation(self, a, b, c):
        assert comparable(a, a)
        assert comparable(a, b) == comparable(b, a)
        if comparable(a, b) and comparable(b, c):
            assert comparable(a, c)


class TestRegistry:
    def test_unknown_predicate(self):
        with pytest.raises(UnknownPredicate):
            default_registry().lookup("no_such_pred")

    def test_duplicate_rejected(self):
        reg = default_registry()
        with pytest.raises(DuplicatePredicate):
            register_predicate(reg, "any", lambda *a: {})

    def test_register_is_pure(self):
        reg = default_registry()
        reg2 = register_predicate(reg, "custom", lambda *a: {})
        assert "custom" in reg2.names() and "custom" not in reg.names()


class TestMatching:
    def setup_method(self):
        self.ctx = default_context()
        self.reg = default_registry()
        self.prev = Gnode("|- 0 = 0", "g0")

    def match(self, text, pn):
        return match_goal(self.prev, parse_goaltype(text), pn, self.ctx,
                          self.reg)

    def test_builtins(self):
        plain = Pnode("g1", (), parse_prop("0 = 0"))
        hyped = Pnode("g2", (parse_prop("x + 0 = x"),),
                      parse_prop("S (x + 0) = S x"))
        imp = Pnode("g3", (), parse_prop("0 = 0 ==> 0 = 0"))
        quant = Pnode("g4", (), parse_prop("!x. x = x"))
        assert self.match("any", plain) is not None
        assert self.match("is_eq", plain) and not self.match("is_eq", imp)
        assert self.match("is_imp", imp) and not self.match("is_imp", plain)
        assert self.match("top_symbol(forall)", quant)
        assert self.match("top_symbol(eq)", plain)
        assert not self.match("top_symbol(eq)", quant)
        assert self.match("has_hyp", hyped) and not self.match("has_hyp", plain)
        assert self.match("hyp_embeds", hyped)
        assert not self.match("hyp_embeds", plain)
        # closed: reflexive equation or conclusion among hypotheses.
        assert self.match("closed", plain)
        assert self.match("closed", Pnode("g5", (parse_prop("0 = S 0"),),
                                          parse_prop("0 = S 0")))
        assert not self.match("closed", hyped)

    def test_connectives(self):
        imp = Pnode("g3", (), parse_prop("0 = 0 ==> 0 = 0"))
        assert self.match("is_eq or is_imp", imp)
        assert self.match("not is_eq; is_imp", imp)
        assert not self.match("is_eq; is_imp", imp)

    def test_match_produces_fresh_gnode(self):
        pn = Pnode("g7", (), parse_prop("S 0 = S 0"))
        gnode = self.match("any", pn)
        assert gnode.pnode_key == "g7" and gnode.goal_text == "|- S 0 = S 0"

    def test_annotations_accumulate(self):
        reg = register_predicate(self.reg, "tagger",
                                 lambda prev, args, p, ctx: {"tag": args[0]})
        prev = Gnode("|- 0 = 0", "g0", (("old", "kept"),))
        pn = Pnode("g1", (), parse_prop("0 = 0"))
        gnode = match_goal(prev, parse_goaltype("tagger(fresh)"), pn,
                           self.ctx, reg)
        assert gnode.annotation_dict() == {"old": "kept", "tag": "fresh"}

    def test_explain_reports_failing_clause(self):
        pn = Pnode("g1", (), parse_prop("0 = 0"))
        gnode, failed = explain_match(self.prev,
                                      parse_goaltype("is_eq; has_hyp or is_imp"),
                                      pn, self.ctx, self.reg)
        assert gnode is None and failed == "has_hyp or is_imp"
