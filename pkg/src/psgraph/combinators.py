"""Typed graph-combinator algebra over strategy graphs.

A combinator value is a function that appends its construction onto a
given strategy graph, drawing fresh names from the graph's counter so
that node names and lookup-table keys never collide.  Composition plugs
output edges into input edges of comparable goal type; a maximal
plugging is always performed and any unplugged boundary edges survive
as boundary edges of the composite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

from .goaltypes import GoalType, ParseError, comparable, parse_goaltype
from .graph import (
    Boundary, Edge, GraphTactic, NestedRef, OpenGraph, PSGraph, Atomic,
    TacticSpec, add_boundary, add_edge, add_tactic_node, empty_psgraph,
    interface, validate,
)


class CombinatorError(Exception):
    pass


class BadGoalType(CombinatorError):
    pass


class InterfaceMismatch(CombinatorError):
    pass


class InvalidChild(CombinatorError):
    pass


class NoAlphaOutput(CombinatorError):
    pass


class NoAlphaInput(CombinatorError):
    pass


# Interface of the component a combinator contributed: ordered
# (edge id, goal type) pairs.
Iface = tuple[list[tuple[str, GoalType]], list[tuple[str, GoalType]]]


@dataclass(frozen=True)
class PSGraphFun:
    build: Callable[[PSGraph], tuple[PSGraph, Iface]]

    def __call__(self, p: PSGraph) -> PSGraph:
        return self.build(p)[0]


def apply_fun(f: PSGraphFun, p: PSGraph = None) -> PSGraph:
    return f(p if p is not None else empty_psgraph())


def _as_gtype(gt: Union[str, GoalType]) -> GoalType:
    if isinstance(gt, GoalType):
        return gt
    try:
        return parse_goaltype(gt)
    except ParseError as exc:
        raise BadGoalType(str(exc))


def _as_spec(tac: Union[str, TacticSpec]) -> TacticSpec:
    return tac if isinstance(tac, TacticSpec) else TacticSpec.parse(tac)


# ---------------------------------------------------------------------------
# lift / tensor


def lift(node_nm: str, tac: Union[str, TacticSpec],
         ins: Sequence[Union[str, GoalType]],
         outs: Sequence[Union[str, GoalType]]) -> PSGraphFun:
    in_types = [_as_gtype(t) for t in ins]
    out_types = [_as_gtype(t) for t in outs]
    spec = _as_spec(tac)

    def build(p: PSGraph) -> tuple[PSGraph, Iface]:
        n = p.fresh_counter
        fresh = f"{node_nm}{n}"
        g, node = add_tactic_node(p.graph, fresh, Atomic(fresh))
        in_edges, out_edges = [], []
        for t in in_types:
            g, b = add_boundary(g)
            g, e = add_edge(g, b, node, t)
            in_edges.append((e, t))
        for t in out_types:
            g, b = add_boundary(g)
            g, e = add_edge(g, node, b, t)
            out_edges.append((e, t))
        atomics = dict(p.atomics)
        atomics[fresh] = spec
        return (PSGraph(g, atomics, dict(p.graph_tactics), n + 1),
                (in_edges, out_edges))

    return PSGraphFun(build)


def identity_fun() -> PSGraphFun:
    """Contributes nothing; unit for tensor."""
    def build(p: PSGraph) -> tuple[PSGraph, Iface]:
        return p, ([], [])
    return PSGraphFun(build)


def tensor(f: PSGraphFun, g: PSGraphFun) -> PSGraphFun:
    def build(p: PSGraph) -> tuple[PSGraph, Iface]:
        p1, (fi, fo) = f.build(p)
        p2, (gi, go) = g.build(p1)
        return p2, (fi + gi, fo + go)
    return PSGraphFun(build)


# ---------------------------------------------------------------------------
# THEN and maximal pluggings


def maximal_matchings(out_types: Sequence[GoalType],
                      in_types: Sequence[GoalType]) -> list[list[tuple[int, int]]]:
    """All maximal matchings of the type-compatibility bipartite graph, in
    deterministic (pair-before-skip, ascending-index) order."""
    compat = [[comparable(o, i) for i in in_types] for o in out_types]
    results: list[list[tuple[int, int]]] = []

    def is_maximal(pairs: list[tuple[int, int]]) -> bool:
        used_o = {i for i, _ in pairs}
        used_i = {j for _, j in pairs}
        for i in range(len(out_types)):
            if i in used_o:
                continue
            for j in range(len(in_types)):
                if j not in used_i and compat[i][j]:
                    return False
        return True

    def go(i: int, pairs: list[tuple[int, int]], used_i: set[int]) -> None:
        if i == len(out_types):
            if is_maximal(pairs):
                results.append(list(pairs))
            return
        for j in range(len(in_types)):
            if j not in used_i and compat[i][j]:
                pairs.append((i, j))
                used_i.add(j)
                go(i + 1, pairs, used_i)
                used_i.discard(j)
                pairs.pop()
        go(i + 1, pairs, used_i)

    go(0, [], set())
    return results


def _fuse(g: OpenGraph, out_eid: str, in_eid: str) -> OpenGraph:
    """Plug an output edge into an input edge: drop both boundary vertices
    and replace the pair with a single internal edge."""
    out_e, in_e = g.edges[out_eid], g.edges[in_eid]
    nodes = {k: v for k, v in g.nodes.items() if k not in (out_e.tgt, in_e.src)}
    edges = {k: v for k, v in g.edges.items() if k not in (out_eid, in_eid)}
    eid = f"e{g.next_id}"
    edges[eid] = Edge(out_e.src, in_e.tgt, out_e.gtype, out_e.goals + in_e.goals)
    return OpenGraph(nodes, edges, g.next_id + 1)


def _then_with(f: PSGraphFun, g: PSGraphFun,
               matching_index: int) -> PSGraphFun:
    def build(p: PSGraph) -> tuple[PSGraph, Iface]:
        p1, (fi, fo) = f.build(p)
        p2, (gi, go) = g.build(p1)
        matchings = maximal_matchings([t for _, t in fo], [t for _, t in gi])
        pairs = matchings[matching_index]
        graph = p2.graph
        for i, j in pairs:
            graph = _fuse(graph, fo[i][0], gi[j][0])
        plugged_o = {i for i, _ in pairs}
        plugged_i = {j for _, j in pairs}
        ins = fi + [x for j, x in enumerate(gi) if j not in plugged_i]
        outs = [x for i, x in enumerate(fo) if i not in plugged_o] + go
        return PSGraph(graph, p2.atomics, p2.graph_tactics, p2.fresh_counter), (ins, outs)
    return PSGraphFun(build)


def then_all(f: PSGraphFun, g: PSGraphFun) -> list[PSGraphFun]:
    """All distinct maximal pluggings of f's outputs into g's inputs."""
    probe, (_, fo) = f.build(empty_psgraph())
    _, (gi, _) = g.build(probe)
    count = len(maximal_matchings([t for _, t in fo], [t for _, t in gi]))
    return [_then_with(f, g, k) for k in range(count)]


def then_pick(f: PSGraphFun, g: PSGraphFun) -> PSGraphFun:
    """First maximal plugging under the deterministic order."""
    return _then_with(f, g, 0)


# ---------------------------------------------------------------------------
# REPEAT (feedback edge)


def repeat_alpha(f: PSGraphFun, alpha: Union[str, GoalType]) -> PSGraphFun:
    gt = _as_gtype(alpha)

    def build(p: PSGraph) -> tuple[PSGraph, Iface]:
        p1, (fi, fo) = f.build(p)
        out_idx = next((i for i, (_, t) in enumerate(fo) if comparable(t, gt)), None)
        if out_idx is None:
            raise NoAlphaOutput(str(gt))
        in_idx = next((j for j, (_, t) in enumerate(fi) if comparable(t, gt)), None)
        if in_idx is None:
            raise NoAlphaInput(str(gt))
        graph = _fuse(p1.graph, fo[out_idx][0], fi[in_idx][0])
        ins = [x for j, x in enumerate(fi) if j != in_idx]
        outs = [x for i, x in enumerate(fo) if i != out_idx]
        return PSGraph(graph, p1.atomics, p1.graph_tactics, p1.fresh_counter), (ins, outs)

    return PSGraphFun(build)


# ---------------------------------------------------------------------------
# Hierarchy: NEST / OR / ORELSE


def _build_child(f: PSGraphFun, p: PSGraph) -> tuple[PSGraph, OpenGraph, Iface]:
    """Build f against an empty graph sharing p's lookup tables."""
    scratch = PSGraph(OpenGraph(), dict(p.atomics), dict(p.graph_tactics),
                      p.fresh_counter)
    p1, iface = f.build(scratch)
    child = p1.graph
    check = PSGraph(child, p1.atomics, p1.graph_tactics, p1.fresh_counter)
    report = validate(check)
    if report:
        raise InvalidChild("; ".join(map(str, report.violations)))
    return p1, child, iface


def _nested_node(parent_graph: OpenGraph, key: str,
                 iface: Iface) -> tuple[OpenGraph, Iface]:
    g, node = add_tactic_node(parent_graph, key, NestedRef(key))
    in_edges, out_edges = [], []
    for _, t in iface[0]:
        g, b = add_boundary(g)
        g, e = add_edge(g, b, node, t)
        in_edges.append((e, t))
    for _, t in iface[1]:
        g, b = add_boundary(g)
        g, e = add_edge(g, node, b, t)
        out_edges.append((e, t))
    return g, (in_edges, out_edges)


def nest(name: str, f: PSGraphFun) -> PSGraphFun:
    def build(p: PSGraph) -> tuple[PSGraph, Iface]:
        p1, child, iface = _build_child(f, p)
        key = f"{name}{p1.fresh_counter}"
        graph, new_iface = _nested_node(p.graph, key, iface)
        gts = dict(p1.graph_tactics)
        gts[key] = GraphTactic("single", (child,))
        return PSGraph(graph, p1.atomics, gts, p1.fresh_counter + 1), new_iface
    return PSGraphFun(build)


def _iface_types(iface: Iface) -> tuple[list[str], list[str]]:
    from .goaltypes import normalize
    return ([str(normalize(t)) for _, t in iface[0]],
            [str(normalize(t)) for _, t in iface[1]])


def _alt_comb(name: str, f: PSGraphFun, g: PSGraphFun, mode: str) -> PSGraphFun:
    def build(p: PSGraph) -> tuple[PSGraph, Iface]:
        p1, child_f, iface_f = _build_child(f, p)
        p2, child_g, iface_g = _build_child(g, p1)
        tf, tg = _iface_types(iface_f), _iface_types(iface_g)
        if (sorted(tf[0]), sorted(tf[1])) != (sorted(tg[0]), sorted(tg[1])):
            raise InterfaceMismatch(f"{tf} vs {tg}")
        key = f"{name}{p2.fresh_counter}"
        graph, new_iface = _nested_node(p.graph, key, iface_f)
        gts = dict(p2.graph_tactics)
        gts[key] = GraphTactic(mode, (child_f, child_g))
        return PSGraph(graph, p2.atomics, gts, p2.fresh_counter + 1), new_iface
    return PSGraphFun(build)


def or_comb(name: str, f: PSGraphFun, g: PSGraphFun) -> PSGraphFun:
    return _alt_comb(name, f, g, "or")


def orelse_comb(name: str, f: PSGraphFun, g: PSGraphFun) -> PSGraphFun:
    return _alt_comb(name, f, g, "orelse")


# ---------------------------------------------------------------------------
# Strategy-expression language (.psx)


@dataclass(frozen=True)
class Lift:
    name: str
    tac: TacticSpec
    ins: tuple[str, ...]
    outs: tuple[str, ...]


@dataclass(frozen=True)
class Then:
    left: "StrategyExpr"
    right: "StrategyExpr"


@dataclass(frozen=True)
class Tensor:
    left: "StrategyExpr"
    right: "StrategyExpr"


@dataclass(frozen=True)
class Repeat:
    body: "StrategyExpr"
    gtype: str


@dataclass(frozen=True)
class Nest:
    name: str
    body: "StrategyExpr"


@dataclass(frozen=True)
class OrExpr:
    name: str
    left: "StrategyExpr"
    right: "StrategyExpr"


@dataclass(frozen=True)
class OrElseExpr:
    name: str
    left: "StrategyExpr"
    right: "StrategyExpr"


@dataclass(frozen=True)
class EmptyRef:
    pass


StrategyExpr = Union[Lift, Then, Tensor, Repeat, Nest, OrExpr, OrElseExpr, EmptyRef]


class StrategyParseError(CombinatorError):
    def __init__(self, position: int, expected: str):
        super().__init__(f"parse error at {position}: expected {expected}")
        self.position = position
        self.expected = expected


class _S:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def ws(self) -> None:
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def expect(self, ch: str) -> None:
        self.ws()
        if not self.text.startswith(ch, self.i):
            raise StrategyParseError(self.i, repr(ch))
        self.i += len(ch)

    def ident(self) -> str:
        self.ws()
        j = self.i
        while j < len(self.text) and (self.text[j].isalnum() or self.text[j] == "_"):
            j += 1
        if j == self.i:
            raise StrategyParseError(self.i, "identifier")
        word = self.text[self.i:j]
        self.i = j
        return word

    def chunk(self, stops: str) -> str:
        """Raw text until an unnested stop character; respects (), [], quotes."""
        self.ws()
        depth, j = 0, self.i
        while j < len(self.text):
            c = self.text[j]
            if c == '"':
                j += 1
                while j < len(self.text) and self.text[j] != '"':
                    j += 1
                if j >= len(self.text):
                    raise StrategyParseError(j, "closing quote")
            elif c in "([":
                depth += 1
            elif c in ")]":
                if depth == 0 and c in stops:
                    break
                depth -= 1
                if depth < 0:
                    raise StrategyParseError(j, "balanced brackets")
            elif depth == 0 and c in stops:
                break
            j += 1
        out = self.text[self.i:j].strip()
        self.i = j
        return out


def _unquote(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
        return text[1:-1]
    return text


def _parse_gtype_list(s: _S) -> tuple[str, ...]:
    s.expect("[")
    items: list[str] = []
    s.ws()
    if s.text.startswith("]", s.i):
        s.i += 1
        return ()
    while True:
        items.append(_unquote(s.chunk(",]")))
        s.ws()
        if s.text.startswith(",", s.i):
            s.i += 1
            continue
        s.expect("]")
        return tuple(items)


def _parse_expr(s: _S) -> StrategyExpr:
    s.ws()
    head = s.ident().upper()
    if head == "EMPTY":
        return EmptyRef()
    s.expect("(")
    if head == "LIFT":
        name = s.ident()
        s.expect(",")
        tac = TacticSpec.parse(s.chunk(","))
        s.expect(",")
        ins = _parse_gtype_list(s)
        s.expect(",")
        outs = _parse_gtype_list(s)
        s.expect(")")
        return Lift(name, tac, ins, outs)
    if head in ("THEN", "TENSOR"):
        left = _parse_expr(s)
        s.expect(",")
        right = _parse_expr(s)
        s.expect(")")
        return Then(left, right) if head == "THEN" else Tensor(left, right)
    if head == "REPEAT":
        body = _parse_expr(s)
        s.expect(",")
        gt = _unquote(s.chunk(")"))
        s.expect(")")
        return Repeat(body, gt)
    if head == "NEST":
        name = s.ident()
        s.expect(",")
        body = _parse_expr(s)
        s.expect(")")
        return Nest(name, body)
    if head in ("OR", "ORELSE"):
        name = s.ident()
        s.expect(",")
        left = _parse_expr(s)
        s.expect(",")
        right = _parse_expr(s)
        s.expect(")")
        cls = OrExpr if head == "OR" else OrElseExpr
        return cls(name, left, right)
    raise StrategyParseError(s.i, "combinator name")


def parse_strategy(text: str) -> StrategyExpr:
    s = _S(text)
    expr = _parse_expr(s)
    s.ws()
    if s.i < len(s.text):
        raise StrategyParseError(s.i, "end of input")
    return expr


def elaborate(expr: StrategyExpr) -> PSGraphFun:
    if isinstance(expr, Lift):
        return lift(expr.name, expr.tac, list(expr.ins), list(expr.outs))
    if isinstance(expr, Then):
        return then_pick(elaborate(expr.left), elaborate(expr.right))
    if isinstance(expr, Tensor):
        return tensor(elaborate(expr.left), elaborate(expr.right))
    if isinstance(expr, Repeat):
        return repeat_alpha(elaborate(expr.body), expr.gtype)
    if isinstance(expr, Nest):
        return nest(expr.name, elaborate(expr.body))
    if isinstance(expr, OrExpr):
        return or_comb(expr.name, elaborate(expr.left), elaborate(expr.right))
    if isinstance(expr, OrElseExpr):
        return orelse_comb(expr.name, elaborate(expr.left), elaborate(expr.right))
    if isinstance(expr, EmptyRef):
        return identity_fun()
    raise TypeError(expr)


def compile_strategy(text: str) -> PSGraph:
    return apply_fun(elaborate(parse_strategy(text)))
