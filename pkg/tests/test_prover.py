"""Prover backend: proof-state bookkeeping, the tactic suite, and journal
replay."""

import pytest

from psgraph.prover import (
    BUILTIN_THEOREMS, Context, OpenTermError, Pnode, Pplan, UnknownTactic,
    UnknownTheorem, apply_tactic, default_context, init_pplan, match_terms,
    parse_tactic_label, replay_journal, resolve_spec,
)
from psgraph.terms import parse_prop, parse_term, prop_to_str


def first(appf, pn, plan):
    return next(iter(appf(pn, plan)))


def all_branches(appf, pn, plan):
    return list(appf(pn, plan))


class TestState:
    def test_init(self):
        pn, plan = init_pplan(parse_prop("!x. x + 0 = x"))
        assert pn.id == "g0" and plan.open_goals == {"g0": pn}
        assert plan.counter == 1 and plan.journal == ()

    def test_open_goal_rejected(self):
        with pytest.raises(OpenTermError):
            init_pplan(parse_prop("x + 0 = x"))

    def test_pnode_text(self):
        pn = Pnode("g1", (parse_prop("x = x"),), parse_prop("S x = S x"))
        assert pn.text() == "x = x |- S x = S x"
        assert Pnode("g0", (), parse_prop("0 = 0")).text() == "|- 0 = 0"

    def test_match_terms(self):
        ctx = default_context()
        assert match_terms(ctx, (parse_term("0 + y"), parse_term("0 + S 0")))
        assert not match_terms(ctx, (parse_term("0 + y"), parse_term("S 0 + 0")))


class TestTactics:
    def setup_method(self):
        self.ctx = default_context()

    def tac(self, label):
        return resolve_spec(label, self.ctx)

    def test_induct_scheme(self):
        pn, plan = init_pplan(parse_prop("!x. x + 0 = x"))
        (base, step), plan2 = first(self.tac("induct"), pn, plan)
        assert base.text() == "|- 0 + 0 = 0"
        assert step.text() == "x + 0 = x |- S x + 0 = S x"
        assert plan2.counter == 3
        assert set(plan2.open_goals) == {base.id, step.id}

    def test_induct_avoids_hypothesis_capture(self):
        pn = Pnode("g0", (parse_prop("x = x"),), parse_prop("!x. x + 0 = x"))
        plan = Pplan(pn.conclusion, {"g0": pn}, (), 1)
        (base, step), _ = first(self.tac("induct"), pn, plan)
        # The induction variable is renamed away from the hypothesis variable.
        assert "x1" in step.text()

    def test_induct_needs_forall(self):
        pn, plan = init_pplan(parse_prop("0 = 0"))
        assert all_branches(self.tac("induct"), pn, plan) == []

    def test_intro_forall_and_imp(self):
        pn, plan = init_pplan(parse_prop("!x. x = x"))
        (child,), plan2 = first(self.tac("intro"), pn, plan)
        assert child.text() == "|- x = x"
        (child2,), _ = first(self.tac("intro"),
                             Pnode("g9", (), parse_prop("0 = 0 ==> S 0 = S 0")),
                             plan2)
        assert child2.text() == "0 = 0 |- S 0 = S 0"

    def test_refl(self):
        pn, plan = init_pplan(parse_prop("!x. x = x"))
        branches = all_branches(self.tac("refl"), pn, plan)
        assert len(branches) == 1 and branches[0][0] == []
        pn2, plan2 = init_pplan(parse_prop("0 + 0 = 0"))
        assert all_branches(self.tac("refl"), pn2, plan2) == []

    def test_assumption(self):
        hyp = parse_prop("x + 0 = x")
        pn = Pnode("g0", (hyp,), hyp)
        plan = Pplan(hyp, {"g0": pn}, (), 1)
        (goals, plan2) = first(self.tac("assumption"), pn, plan)
        assert goals == [] and plan2.open_goals == {}

    def test_id_and_fail(self):
        pn, plan = init_pplan(parse_prop("0 = 0"))
        (goals, _) = first(self.tac("id"), pn, plan)
        assert len(goals) == 1 and goals[0].conclusion == pn.conclusion
        assert all_branches(self.tac("fail"), pn, plan) == []

    def test_rewrite_single_redex(self):
        pn, plan = init_pplan(parse_prop("S 0 + 0 = S 0"))
        branches = all_branches(self.tac("rewrite[add_0,add_S]"), pn, plan)
        assert [g[0].text() for g, _ in branches] == ["|- S (0 + 0) = S 0"]

    def test_rewrite_enumerates_leftmost_outermost(self):
        pn, plan = init_pplan(parse_prop("0 + (0 + 0) = 0"))
        branches = all_branches(self.tac("rewrite[add_0]"), pn, plan)
        # Outer redex first, then the inner one; branch indices count up.
        assert [g[0].text() for g, _ in branches] == \
            ["|- 0 + 0 = 0", "|- 0 + 0 = 0"]
        assert [p.journal[-1].branch_index for _, p in branches] == [0, 1]

    def test_rewrite_rule_order_at_position(self):
        pn, plan = init_pplan(parse_prop("0 + 0 = 0"))
        a = all_branches(self.tac("rewrite[add_0,add_S]"), pn, plan)
        b = all_branches(self.tac("rewrite[add_S,add_0]"), pn, plan)
        assert len(a) == len(b) == 1
        assert a[0][0][0].conclusion == b[0][0][0].conclusion

    def test_fertilise_closes_trivial(self):
        hyp = parse_prop("x + 0 = x")
        pn = Pnode("g0", (hyp,), parse_prop("S (x + 0) = S x"))
        plan = Pplan(pn.conclusion, {"g0": pn}, (), 1)
        (goals, plan2) = first(self.tac("fertilise"), pn, plan)
        assert goals == [] and plan2.open_goals == {}

    def test_fertilise_leaves_residue(self):
        hyp = parse_prop("x + 0 = x")
        pn = Pnode("g0", (hyp,), parse_prop("x + 0 = 0"))
        plan = Pplan(pn.conclusion, {"g0": pn}, (), 1)
        (goals, _) = first(self.tac("fertilise"), pn, plan)
        assert [g.text() for g in goals] == ["x + 0 = x |- x = 0"]

    def test_fertilise_backchains_implication(self):
        hyp = parse_prop("0 = 0 ==> S 0 = S 0")
        pn = Pnode("g0", (hyp,), parse_prop("S 0 = S 0"))
        plan = Pplan(pn.conclusion, {"g0": pn}, (), 1)
        (goals, _) = first(self.tac("fertilise"), pn, plan)
        assert [prop_to_str(g.conclusion) for g in goals] == ["0 = 0"]

    def test_unknown_names(self):
        with pytest.raises(UnknownTactic):
            resolve_spec("frobnicate", self.ctx)
        with pytest.raises(UnknownTheorem):
            resolve_spec("rewrite[no_such_thm]", self.ctx)


class TestJournal:
    def test_labels(self):
        assert parse_tactic_label("rewrite[add_0, add_S]") == \
            ("rewrite", ("add_0", "add_S"))
        assert parse_tactic_label("induct") == ("induct", ())
        with pytest.raises(ValueError):
            parse_tactic_label("rewrite[add_0")

    def test_recording(self):
        ctx = default_context()
        pn, plan = init_pplan(parse_prop("!x. x + 0 = x"))
        _, plan2 = first(resolve_spec("induct", ctx), pn, plan)
        entry = plan2.journal[-1]
        assert entry.parent_id == "g0" and entry.tactic == "induct"
        assert entry.counter == 1 and plan2.counter == 3
        assert [c.id for c in entry.children] == ["g1", "g2"]

    def run_small_proof(self):
        ctx = default_context()
        pn, plan = init_pplan(parse_prop("!x. x + 0 = x"))
        (base, step), plan = first(resolve_spec("induct", ctx), pn, plan)
        (goals, plan) = first(resolve_spec("rewrite[add_0,add_S]", ctx),
                              base, plan)
        _, plan = first(resolve_spec("refl", ctx), goals[0], plan)
        (goals, plan) = first(resolve_spec("rewrite[add_0,add_S]", ctx),
                              step, plan)
        _, plan = first(resolve_spec("fertilise", ctx), goals[0], plan)
        assert plan.open_goals == {}
        return plan

    def test_replay_sound(self):
        plan = self.run_small_proof()
        assert replay_journal(plan)

    def test_replay_detects_tampering(self):
        plan = self.run_small_proof()
        entry = plan.journal[0]
        bad_children = (Pnode(entry.children[0].id, (), parse_prop("0 = S 0")),) \
            + entry.children[1:]
        tampered = Pplan(plan.root, plan.open_goals,
                         (entry.__class__(entry.parent_id, entry.hypotheses,
                                          entry.conclusion, entry.tactic,
                                          entry.branch_index, bad_children,
                                          entry.counter),) + plan.journal[1:],
                         plan.counter)
        assert not replay_journal(tampered)

    def test_replay_detects_wrong_branch(self):
        ctx = default_context()
        pn, plan = init_pplan(parse_prop("0 + (0 + 0) = 0"))
        branches = list(resolve_spec("rewrite[add_0]", ctx)(pn, plan))
        plan2 = branches[1][1]  # inner-redex branch
        entry = plan2.journal[-1]
        lied = Pplan(plan2.root, plan2.open_goals,
                     (entry.__class__(entry.parent_id, entry.hypotheses,
                                      entry.conclusion, entry.tactic, 5,
                                      entry.children, entry.counter),),
                     plan2.counter)
        assert not replay_journal(lied)

    def test_builtin_theorems_oriented(self):
        for thm in BUILTIN_THEOREMS.values():
            # Every rule's rhs variables come from its lhs (orientation sound).
            thm.__post_init__()
