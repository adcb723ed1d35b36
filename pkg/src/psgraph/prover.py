"""Built-in desk-scale prover: sequent goals over Peano arithmetic, a
partial-proof record with an audit journal, and the tactic suite
(induct / rewrite / fertilise / intro / refl / assumption / id / fail).

A tactic application maps (goal, partial proof) to a lazy sequence of
(subgoal-list, updated proof) alternatives; the empty sequence signals
that the tactic is not applicable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional, Sequence

from .terms import (
    Eq, Forall, Imp, Prop, Succ, Term, Var, Zero,
    apply_subst, embeds, free_vars, fresh_name, match_term, parse_prop,
    prop_to_str, rewrite_everywhere, subst_prop, term_positions, replace_at,
)


class ProverError(Exception):
    pass


class UnknownTactic(ProverError):
    pass


class UnknownTheorem(ProverError):
    pass


class OpenTermError(ProverError):
    pass


# ---------------------------------------------------------------------------
# Proof state


@dataclass(frozen=True)
class Thm:
    """Oriented rewrite rule lhs -> rhs; lhs variables are pattern variables."""
    name: str
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if not free_vars(self.rhs) <= free_vars(self.lhs):
            raise ValueError(f"theorem {self.name}: rhs has extra variables")


@dataclass(frozen=True)
class Pnode:
    id: str
    hypotheses: tuple[Prop, ...]
    conclusion: Prop

    def text(self) -> str:
        hyps = ", ".join(prop_to_str(h) for h in self.hypotheses)
        return f"{hyps} |- {prop_to_str(self.conclusion)}" if hyps \
            else f"|- {prop_to_str(self.conclusion)}"


@dataclass(frozen=True)
class JournalEntry:
    """Audit record for one tactic application (enough to replay it)."""
    parent_id: str
    hypotheses: tuple[Prop, ...]
    conclusion: Prop
    tactic: str
    branch_index: int
    children: tuple[Pnode, ...]
    counter: int  # id counter before the application


@dataclass(frozen=True)
class Pplan:
    root: Prop
    open_goals: dict[str, Pnode]
    journal: tuple[JournalEntry, ...] = ()
    counter: int = 0


Appf = Callable[[Pnode, "Pplan"], Iterator[tuple[list[Pnode], "Pplan"]]]
TacticImpl = Callable[[Sequence[Thm], Pnode, "Pplan"], Iterator[tuple[list[Pnode], "Pplan", int]]]


@dataclass
class Context:
    theorems: dict[str, Thm] = field(default_factory=dict)
    tactics: dict[str, TacticImpl] = field(default_factory=dict)


def init_pplan(goal: Prop) -> tuple[Pnode, Pplan]:
    if free_vars(goal):
        raise OpenTermError(f"goal has free variables: {sorted(free_vars(goal))}")
    pn = Pnode("g0", (), goal)
    return pn, Pplan(root=goal, open_goals={pn.id: pn}, counter=1)


def match_terms(ctx: Context, pair: tuple[Term, Term]) -> bool:
    """True iff the second term is an instance of the first (a pattern)."""
    pattern, target = pair
    return match_term(pattern, target) is not None


# ---------------------------------------------------------------------------
# Tactic plumbing


def _strip_foralls(p: Prop) -> tuple[tuple[str, ...], Prop]:
    binders: list[str] = []
    while isinstance(p, Forall):
        binders.append(p.var)
        p = p.body
    return tuple(binders), p


def _trivial(p: Prop) -> bool:
    _, core = _strip_foralls(p)
    return isinstance(core, Eq) and core.left == core.right


def _record(plan: Pplan, parent: Pnode, label: str, index: int,
            children: tuple[Pnode, ...]) -> Pplan:
    open_goals = {k: v for k, v in plan.open_goals.items() if k != parent.id}
    for c in children:
        open_goals[c.id] = c
    entry = JournalEntry(parent.id, parent.hypotheses, parent.conclusion,
                         label, index, children, plan.counter)
    counter = plan.counter + sum(1 for c in children if c.id != parent.id)
    return Pplan(plan.root, open_goals, plan.journal + (entry,), counter)


def _child(plan: Pplan, offset: int, hyps: tuple[Prop, ...], concl: Prop) -> Pnode:
    return Pnode(f"g{plan.counter + offset}", hyps, concl)


# ---------------------------------------------------------------------------
# Tactic suite


def tac_refl(thms, p: Pnode, plan: Pplan):
    if _trivial(p.conclusion):
        yield [], plan, 0


def tac_assumption(thms, p: Pnode, plan: Pplan):
    if p.conclusion in p.hypotheses:
        yield [], plan, 0


def tac_id(thms, p: Pnode, plan: Pplan):
    yield [p], plan, 0


def tac_fail(thms, p: Pnode, plan: Pplan):
    return
    yield  # pragma: no cover


def tac_intro(thms, p: Pnode, plan: Pplan):
    concl = p.conclusion
    if isinstance(concl, Forall):
        avoid = set()
        for h in p.hypotheses:
            avoid |= free_vars(h)
        var = fresh_name(concl.var, avoid)
        body = subst_prop(concl.body, concl.var, Var(var)) if var != concl.var \
            else concl.body
        yield [_child(plan, 0, p.hypotheses, body)], plan, 0
    elif isinstance(concl, Imp):
        child = _child(plan, 0, p.hypotheses + (concl.ante,), concl.cons)
        yield [child], plan, 0


def tac_induct(thms, p: Pnode, plan: Pplan):
    concl = p.conclusion
    if not isinstance(concl, Forall):
        return
    avoid = set()
    for h in p.hypotheses:
        avoid |= free_vars(h)
    var = fresh_name(concl.var, avoid)
    body = subst_prop(concl.body, concl.var, Var(var)) if var != concl.var \
        else concl.body
    base = _child(plan, 0, p.hypotheses, subst_prop(body, var, Zero()))
    step = _child(plan, 1, p.hypotheses + (body,),
                  subst_prop(body, var, Succ(Var(var))))
    yield [base, step], plan, 0


def tac_rewrite(thms, p: Pnode, plan: Pplan):
    """One branch per (position, rule) redex in the conclusion,
    leftmost-outermost, rules in argument order at each position."""
    index = 0
    for path, sub in term_positions(p.conclusion):
        for thm in thms:
            subst = match_term(thm.lhs, sub, free_vars(thm.lhs))
            if subst is None:
                continue
            concl = replace_at(p.conclusion, path, apply_subst(thm.rhs, subst))
            yield [_child(plan, 0, p.hypotheses, concl)], plan, index
            index += 1


def tac_fertilise(thms, p: Pnode, plan: Pplan):
    """Reduce the conclusion with a hypothesis equation (or implication),
    closing the goal when the residue is a trivial equality."""
    index = 0
    for hyp in p.hypotheses:
        binders, core = _strip_foralls(hyp)
        if isinstance(core, Eq):
            reduced = rewrite_everywhere(p.conclusion, core.left, core.right,
                                         set(binders))
            if reduced != p.conclusion:
                if _trivial(reduced):
                    yield [], plan, index
                else:
                    yield [_child(plan, 0, p.hypotheses, reduced)], plan, index
                index += 1
        elif isinstance(core, Imp) and not binders:
            if core.cons == p.conclusion:
                yield [_child(plan, 0, p.hypotheses, core.ante)], plan, index
                index += 1


BUILTIN_TACTICS: dict[str, TacticImpl] = {
    "induct": tac_induct,
    "rewrite": tac_rewrite,
    "fertilise": tac_fertilise,
    "intro": tac_intro,
    "refl": tac_refl,
    "assumption": tac_assumption,
    "id": tac_id,
    "fail": tac_fail,
}

BUILTIN_THEOREMS: dict[str, Thm] = {
    "add_0": Thm("add_0", parse_prop("0 + y = y").left, parse_prop("0 + y = y").right),
    "add_S": Thm("add_S", parse_prop("S x + y = S (x + y)").left,
                 parse_prop("S x + y = S (x + y)").right),
    "mul_0": Thm("mul_0", parse_prop("0 * y = 0").left, parse_prop("0 * y = 0").right),
    "mul_S": Thm("mul_S", parse_prop("S x * y = y + x * y").left,
                 parse_prop("S x * y = y + x * y").right),
}


def default_context() -> Context:
    return Context(theorems=dict(BUILTIN_THEOREMS), tactics=dict(BUILTIN_TACTICS))


def apply_tactic(thms: Sequence[Thm], tac: str, ctx: Optional[Context] = None) -> Appf:
    """Specialize a registered tactic to its theorem arguments."""
    ctx = ctx or default_context()
    impl = ctx.tactics.get(tac)
    if impl is None:
        raise UnknownTactic(tac)
    label = tac if not thms else f"{tac}[{','.join(t.name for t in thms)}]"

    def appf(p: Pnode, plan: Pplan) -> Iterator[tuple[list[Pnode], Pplan]]:
        for ps, plan2, index in impl(thms, p, plan):
            yield list(ps), _record(plan2, p, label, index, tuple(ps))

    return appf


def resolve_spec(label: str, ctx: Context) -> Appf:
    """Resolve a tactic label of the form ``name`` or ``name[thm,...]``."""
    name, thm_names = parse_tactic_label(label)
    thms = []
    for tn in thm_names:
        if tn not in ctx.theorems:
            raise UnknownTheorem(tn)
        thms.append(ctx.theorems[tn])
    return apply_tactic(thms, name, ctx)


def parse_tactic_label(label: str) -> tuple[str, tuple[str, ...]]:
    label = label.strip()
    if "[" in label:
        if not label.endswith("]"):
            raise ValueError(f"bad tactic spec: {label!r}")
        name, rest = label.split("[", 1)
        args = tuple(a.strip() for a in rest[:-1].split(",") if a.strip())
        return name.strip(), args
    return label, ()


# ---------------------------------------------------------------------------
# Journal replay


def replay_journal(plan: Pplan, ctx: Optional[Context] = None) -> bool:
    """Re-apply every journal entry to its recorded goal and check that it
    yields exactly the recorded children at the recorded branch index."""
    ctx = ctx or default_context()
    for entry in plan.journal:
        parent = Pnode(entry.parent_id, entry.hypotheses, entry.conclusion)
        synthetic = Pplan(plan.root, {parent.id: parent}, (), entry.counter)
        appf = resolve_spec(entry.tactic, ctx)
        found = None
        for ps, plan2 in appf(parent, synthetic):
            got = plan2.journal[-1]
            if got.branch_index == entry.branch_index:
                found = tuple(ps)
                break
        if found != entry.children:
            return False
    return True
