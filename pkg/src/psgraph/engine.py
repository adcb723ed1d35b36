"""Strategy-graph evaluation: goals flow along typed edges, tactic nodes
consume them, nested graph tactics push frames onto a per-branch stack.

Evaluation is a pure function of (state, context): every step returns a
new state and appends a snapshot to a bounded history, which backs the
interactive backtrack/replay commands.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Optional

from .goaltypes import (
    Gnode, GoalType, PredicateRegistry, default_registry, explain_match,
    match_goal, normalize,
)
from .graph import (
    Atomic, Boundary, Edge, NestedRef, OpenGraph, PSGraph, TacticNode,
    interface, validate,
)
from .prover import Context, Pnode, Pplan, default_context, resolve_spec


class EngineError(Exception):
    pass


class StepOnTerminated(EngineError):
    pass


class EmptyHistory(EngineError):
    pass


@dataclass
class EvalConfig:
    seq_cap: int = 64          # max tactic-sequence elements forced per application
    history_limit: int = 1000  # bounded snapshot stack


@dataclass
class EvalContext:
    prover: Context = field(default_factory=default_context)
    registry: PredicateRegistry = field(default_factory=default_registry)
    config: EvalConfig = field(default_factory=EvalConfig)


# ---------------------------------------------------------------------------
# Evaluation state


@dataclass(frozen=True)
class Frame:
    graph: OpenGraph
    origin: Optional[str] = None          # parent nested-node id; None at bottom
    alt_graphs: tuple[OpenGraph, ...] = ()  # pending ORELSE siblings
    entry_gnode: Optional[Gnode] = None
    entry_pplan: Optional[Pplan] = None


@dataclass(frozen=True)
class Branch:
    stack: tuple[Frame, ...]  # last element is the active frame
    pplan: Pplan


@dataclass(frozen=True)
class Status:
    kind: str  # "running" | "complete" | "failed"
    reason: str = ""
    report: Optional[dict] = None

    @property
    def running(self) -> bool:
        return self.kind == "running"


RUNNING = Status("running")


@dataclass(frozen=True)
class Snapshot:
    branches: tuple[Branch, ...]
    status: Status
    skip_choices: int
    selection: Optional[tuple[str, int]]


@dataclass(frozen=True)
class Eval:
    psgraph: PSGraph
    branches: tuple[Branch, ...]
    status: Status = RUNNING
    history: tuple[Snapshot, ...] = ()
    skip_choices: int = 0
    selection: Optional[tuple[str, int]] = None
    warnings: tuple[str, ...] = ()

    def snapshot(self) -> Snapshot:
        return Snapshot(self.branches, self.status, self.skip_choices,
                        self.selection)


# ---------------------------------------------------------------------------
# Graph queue helpers (value semantics)


def _push_goal(g: OpenGraph, eid: str, gnode: Gnode) -> OpenGraph:
    e = g.edges[eid]
    edges = dict(g.edges)
    edges[eid] = Edge(e.src, e.tgt, e.gtype, e.goals + (gnode,))
    return OpenGraph(dict(g.nodes), edges, g.next_id)


def _pop_goal(g: OpenGraph, eid: str, index: int = 0) -> tuple[OpenGraph, Gnode]:
    e = g.edges[eid]
    gnode = e.goals[index]
    edges = dict(g.edges)
    edges[eid] = Edge(e.src, e.tgt, e.gtype,
                      e.goals[:index] + e.goals[index + 1:])
    return OpenGraph(dict(g.nodes), edges, g.next_id), gnode


def _frame_complete(g: OpenGraph) -> bool:
    """All queued goals sit on output edges of the frame's graph."""
    for e in g.edges.values():
        if e.goals and not isinstance(g.nodes[e.tgt], Boundary):
            return False
    return True


# ---------------------------------------------------------------------------
# init / distribute


def init_eval(p: PSGraph, pn: Pnode, plan: Pplan, ctx: EvalContext) -> Eval:
    report = validate(p, ctx.prover)
    if report:
        raise EngineError("invalid strategy graph: "
                          + "; ".join(map(str, report.violations)))
    prev = Gnode(goal_text=pn.text(), pnode_key=pn.id)
    branches = []
    ins, _ = interface(p.graph)
    for eid, gt in ins:
        gnode = match_goal(prev, gt, pn, ctx.prover, ctx.registry)
        if gnode is not None:
            graph = _push_goal(p.graph, eid, gnode)
            branches.append(Branch((Frame(graph),), plan))
    if not branches:
        return Eval(p, (), Status("failed", "NoMatchingInput"))
    return Eval(p, tuple(branches))


def distribute(ps: list[Pnode], prev: Gnode,
               out_edges: list[tuple[str, GoalType]],
               ctx: EvalContext) -> list[list[tuple[str, Gnode]]]:
    """All total assignments of subgoals to matching output edges, in
    lexicographic order; the empty subgoal list has one empty assignment."""
    per_goal: list[list[tuple[str, Gnode]]] = []
    for p in ps:
        options = []
        for eid, gt in out_edges:
            gnode = match_goal(prev, gt, p, ctx.prover, ctx.registry)
            if gnode is not None:
                options.append((eid, gnode))
        if not options:
            return []
        per_goal.append(options)
    return [list(combo) for combo in itertools.product(*per_goal)]


def _rejection_info(ps: list[Pnode], prev: Gnode,
                    out_edges: list[tuple[str, GoalType]],
                    ctx: EvalContext) -> list[dict]:
    out = []
    for p in ps:
        rejected = []
        matched_any = False
        for eid, gt in out_edges:
            gnode, failed = explain_match(prev, gt, p, ctx.prover, ctx.registry)
            if gnode is None:
                rejected.append({"edge": eid, "gtype": str(gt),
                                 "failed_clause": failed})
            else:
                matched_any = True
        if not matched_any:
            out.append({"goal": p.text(), "rejected_edges": rejected})
    return out


# ---------------------------------------------------------------------------
# One evaluation step


def _typed_out_edges(g: OpenGraph, node_id: str) -> list[tuple[str, GoalType]]:
    return [(eid, g.edges[eid].gtype) for eid in g.out_edges(node_id)]


def _enter_nested(b: Branch, base_graph: OpenGraph, node_id: str,
                  gnode: Gnode, pnode: Pnode, subgraphs: list[OpenGraph],
                  alts: tuple[OpenGraph, ...], ctx: EvalContext) -> list[Branch]:
    """Branches for moving a goal onto matching input edges of nested graphs."""
    parent_frame = replace(b.stack[-1], graph=base_graph)
    branches = []
    for sub in subgraphs:
        ins, _ = interface(sub)
        for eid, gt in ins:
            matched = match_goal(gnode, gt, pnode, ctx.prover, ctx.registry)
            if matched is None:
                continue
            child = Frame(_push_goal(sub, eid, matched), origin=node_id,
                          alt_graphs=alts, entry_gnode=gnode,
                          entry_pplan=b.pplan)
            branches.append(Branch(b.stack[:-1] + (parent_frame, child), b.pplan))
    return branches


def _pop_frame(b: Branch, ctx: EvalContext) -> Optional[Branch]:
    """Return the branch with the completed top frame popped and its output
    goals routed onto the parent nested node's output edges; None when some
    goal cannot be routed."""
    child = b.stack[-1]
    parent = b.stack[-2]
    parent_graph = parent.graph
    parent_outs = _typed_out_edges(parent_graph, child.origin)
    _, child_outs = interface(child.graph)

    # Positional pairing within each normalized-type class; falls back to a
    # fresh match against the parent's output edges.
    by_type: dict[str, list[str]] = {}
    for eid, gt in parent_outs:
        by_type.setdefault(str(normalize(gt)), []).append(eid)
    seen_per_type: dict[str, int] = {}
    for eid, gt in child_outs:
        key = str(normalize(gt))
        idx = seen_per_type.get(key, 0)
        seen_per_type[key] = idx + 1
        candidates = by_type.get(key, [])
        target = candidates[idx] if idx < len(candidates) \
            else (candidates[0] if candidates else None)
        for gnode in child.graph.edges[eid].goals:
            dest = target
            if dest is None:
                for peid, pgt in parent_outs:
                    pn = b.pplan.open_goals.get(gnode.pnode_key)
                    if pn is not None and match_goal(
                            gnode, pgt, pn, ctx.prover, ctx.registry) is not None:
                        dest = peid
                        break
            if dest is None:
                return None
            parent_graph = _push_goal(parent_graph, dest, gnode)
    new_parent = replace(parent, graph=parent_graph)
    return Branch(b.stack[:-2] + (new_parent,), b.pplan)


def _resurrect(b: Branch, ctx: EvalContext) -> list[Branch]:
    """On branch failure, re-enter the next pending ORELSE alternative of the
    topmost frame that still has one."""
    for k in range(len(b.stack) - 1, 0, -1):
        frame = b.stack[k]
        alts = frame.alt_graphs
        while alts:
            sub, rest = alts[0], alts[1:]
            base = Branch(b.stack[:k], frame.entry_pplan)
            branches = _enter_nested(base, b.stack[k - 1].graph, frame.origin,
                                     frame.entry_gnode,
                                     frame.entry_pplan.open_goals.get(
                                         frame.entry_gnode.pnode_key),
                                     [sub], rest, ctx)
            if branches:
                return branches
            alts = rest
    return []


def _fail_branch(e: Eval, report: Optional[dict], ctx: EvalContext) -> Eval:
    b = e.branches[0]
    revived = _resurrect(b, ctx) if b.stack else []
    branches = tuple(revived) + e.branches[1:]
    if branches:
        return replace(e, branches=branches, skip_choices=0,
                       history=_hist(e, ctx), status=RUNNING)
    return replace(e, branches=(), skip_choices=0, history=_hist(e, ctx),
                   status=Status("failed", "StepFailure" if report else "NoBranches",
                                 report))


def _hist(e: Eval, ctx: EvalContext) -> tuple[Snapshot, ...]:
    hist = e.history + (e.snapshot(),)
    return hist[-ctx.config.history_limit:]


def step(e: Eval, ctx: EvalContext) -> Eval:
    if not e.status.running:
        raise StepOnTerminated(e.status.kind)
    config = ctx.config
    b = e.branches[0]
    top = b.stack[-1]

    # Frame completion first: pop, or finish the evaluation.
    if _frame_complete(top.graph):
        if len(b.stack) == 1:
            return replace(e, history=_hist(e, ctx),
                           status=Status("complete"))
        popped = _pop_frame(b, ctx)
        if popped is None:
            return _fail_branch(e, {
                "branch": 0, "frame_depth": len(b.stack),
                "node": top.origin, "consumed_goal": None,
                "unmatched_subgoals": []}, ctx)
        return replace(e, branches=(popped,) + e.branches[1:],
                       history=_hist(e, ctx), skip_choices=0)

    # Select a goal on an in-edge of a tactic node.
    graph = top.graph
    eid, index = None, 0
    if e.selection is not None:
        sel_eid, sel_idx = e.selection
        edge = graph.edges.get(sel_eid)
        if edge is not None and sel_idx < len(edge.goals) \
                and isinstance(graph.nodes[edge.tgt], TacticNode):
            eid, index = sel_eid, sel_idx
    if eid is None:
        for cand in graph.sorted_edge_ids():
            edge = graph.edges[cand]
            if edge.goals and isinstance(graph.nodes[edge.tgt], TacticNode):
                eid = cand
                break
    base_graph, gnode = _pop_goal(graph, eid, index)
    node_id = graph.edges[eid].tgt
    node = graph.nodes[node_id]
    pnode = b.pplan.open_goals[gnode.pnode_key]
    warnings = e.warnings

    if isinstance(node.app, Atomic):
        spec = e.psgraph.atomics[node.app.tactic_name]
        appf = resolve_spec(str(spec), ctx.prover)
        out_edges = _typed_out_edges(base_graph, node_id)
        new_branches: list[Branch] = []
        rejection: Optional[list[dict]] = None
        elements = list(itertools.islice(appf(pnode, b.pplan), config.seq_cap + 1))
        if len(elements) > config.seq_cap:
            elements = elements[:config.seq_cap]
            warnings = warnings + (
                f"tactic {spec} on {gnode.pnode_key}: sequence capped at "
                f"{config.seq_cap} elements",)
        for ps, plan2 in elements:
            assignments = distribute(ps, gnode, out_edges, ctx)
            if not assignments:
                if rejection is None:
                    rejection = _rejection_info(ps, gnode, out_edges, ctx)
                continue
            for assignment in assignments:
                g2 = base_graph
                for dest, matched in assignment:
                    g2 = _push_goal(g2, dest, matched)
                frame2 = replace(top, graph=g2)
                new_branches.append(Branch(b.stack[:-1] + (frame2,), plan2))
    else:
        gt_def = e.psgraph.graph_tactics[node.app.graphtactic_name]
        if gt_def.mode == "orelse":
            subgraphs, alts = [gt_def.graphs[0]], tuple(gt_def.graphs[1:])
        else:
            subgraphs, alts = list(gt_def.graphs), ()
        new_branches = _enter_nested(b, base_graph, node_id, gnode, pnode,
                                     subgraphs, alts, ctx)
        rejection = [{"goal": pnode.text(),
                      "rejected_edges": [
                          {"edge": ie, "gtype": str(it), "failed_clause": None}
                          for sub in gt_def.graphs
                          for ie, it in interface(sub)[0]]}] \
            if not new_branches else None

    # Backtracking: drop choices already explored.
    new_branches = new_branches[e.skip_choices:]

    if not new_branches:
        report = {
            "branch": 0,
            "frame_depth": len(b.stack),
            "node": node_id,
            "consumed_goal": {"goal_text": gnode.goal_text,
                              "pnode_key": gnode.pnode_key},
            "unmatched_subgoals": rejection or [],
        }
        return replace(_fail_branch(e, report, ctx), warnings=warnings)

    return replace(e, branches=tuple(new_branches) + e.branches[1:],
                   history=_hist(e, ctx), skip_choices=0, selection=None,
                   warnings=warnings)


# ---------------------------------------------------------------------------
# Drivers and interactive controls


def run_auto(e: Eval, ctx: EvalContext, fuel: int = 10000) -> Eval:
    while e.status.running and fuel > 0:
        e = step(e, ctx)
        fuel -= 1
    if e.status.running:
        return replace(e, status=Status("failed", "FuelExhausted"))
    return e


def backtrack(e: Eval) -> Eval:
    """Undo the last step and mark its choice exhausted, so the next step
    explores the next alternative."""
    if not e.history:
        raise EmptyHistory()
    prev = e.history[-1]
    return Eval(e.psgraph, prev.branches, prev.status, e.history[:-1],
                prev.skip_choices + 1, prev.selection, e.warnings)


def replay(e: Eval, ctx: EvalContext) -> Eval:
    """Restore the previous snapshot and re-execute the same step."""
    if not e.history:
        raise EmptyHistory()
    prev = e.history[-1]
    restored = Eval(e.psgraph, prev.branches, prev.status, e.history[:-1],
                    prev.skip_choices, prev.selection, e.warnings)
    return step(restored, ctx)


def terminate(e: Eval, ctx: Optional[EvalContext] = None) -> Eval:
    ctx = ctx or EvalContext()
    return replace(e, status=Status("failed", "UserTerminated"),
                   history=_hist(e, ctx))


def select_goal(e: Eval, edge_id: str, index: int) -> Eval:
    return replace(e, selection=(edge_id, index))


# ---------------------------------------------------------------------------
# Invariant checks (used by tests and the protocol server)


def queued_keys(b: Branch) -> list[str]:
    keys = []
    for frame in b.stack:
        for eid in frame.graph.sorted_edge_ids():
            keys.extend(g.pnode_key for g in frame.graph.edges[eid].goals)
    return keys


def check_branch_invariant(e: Eval) -> bool:
    from collections import Counter
    for b in e.branches:
        if Counter(queued_keys(b)) != Counter({k: 1 for k in b.pplan.open_goals}):
            return False
    return True


def check_type_honesty(e: Eval, ctx: EvalContext) -> bool:
    for b in e.branches:
        for frame in b.stack:
            for edge in frame.graph.edges.values():
                for gnode in edge.goals:
                    pn = b.pplan.open_goals.get(gnode.pnode_key)
                    if pn is None:
                        return False
                    if match_goal(gnode, edge.gtype, pn, ctx.prover,
                                  ctx.registry) is None:
                        return False
    return True
