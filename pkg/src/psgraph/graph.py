"""Open-graph representation of proof strategies.

Nodes are tactic nodes or boundary ("dummy") vertices realizing dangling
edges; edges carry a goal type and an ordered FIFO queue of goal nodes.
A strategy value couples one graph with lookup tables for atomic tactics
and nested graph tactics.  All operations have value semantics: inputs
are never mutated.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .goaltypes import Gnode, GoalType, comparable, parse_goaltype, ParseError
from .prover import Context, parse_tactic_label


class GraphError(Exception):
    pass


class DuplicateName(GraphError):
    pass


class UnknownNode(GraphError):
    pass


class BoundaryToBoundary(GraphError):
    pass


class SchemaError(GraphError):
    def __init__(self, path: str, reason: str = "invalid"):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


# ---------------------------------------------------------------------------
# Node / edge data


@dataclass(frozen=True)
class Atomic:
    tactic_name: str  # key into PSGraph.atomics


@dataclass(frozen=True)
class NestedRef:
    graphtactic_name: str  # key into PSGraph.graph_tactics


AppData = Union[Atomic, NestedRef]


@dataclass(frozen=True)
class TacticNode:
    name: str
    app: AppData
    meta: Optional[tuple[float, float]] = None  # optional layout coordinates


@dataclass(frozen=True)
class Boundary:
    meta: Optional[tuple[float, float]] = None


NodeData = Union[TacticNode, Boundary]


@dataclass(frozen=True)
class Edge:
    src: str
    tgt: str
    gtype: GoalType
    goals: tuple[Gnode, ...] = ()


@dataclass(frozen=True)
class TacticSpec:
    """Backend tactic identifier plus optional theorem-name arguments."""
    tactic: str
    thms: tuple[str, ...] = ()

    def __str__(self) -> str:
        return self.tactic if not self.thms else f"{self.tactic}[{','.join(self.thms)}]"

    @staticmethod
    def parse(text: str) -> "TacticSpec":
        name, thms = parse_tactic_label(text)
        return TacticSpec(name, thms)


def _id_key(ident: str) -> tuple[str, int]:
    m = re.match(r"^(.*?)(\d*)$", ident)
    return (m.group(1), int(m.group(2)) if m.group(2) else -1)


@dataclass(frozen=True)
class OpenGraph:
    nodes: dict[str, NodeData] = field(default_factory=dict)
    edges: dict[str, Edge] = field(default_factory=dict)
    next_id: int = field(default=0, compare=False)

    def sorted_edge_ids(self) -> list[str]:
        return sorted(self.edges, key=_id_key)

    def sorted_node_ids(self) -> list[str]:
        return sorted(self.nodes, key=_id_key)

    def in_edges(self, node_id: str) -> list[str]:
        return [e for e in self.sorted_edge_ids() if self.edges[e].tgt == node_id]

    def out_edges(self, node_id: str) -> list[str]:
        return [e for e in self.sorted_edge_ids() if self.edges[e].src == node_id]

    def degree(self, node_id: str) -> int:
        return sum(1 for e in self.edges.values()
                   if e.src == node_id or e.tgt == node_id)

    def tactic_node_names(self) -> dict[str, str]:
        return {d.name: nid for nid, d in self.nodes.items()
                if isinstance(d, TacticNode)}


@dataclass(frozen=True)
class GraphTactic:
    mode: str  # "single" | "or" | "orelse"
    graphs: tuple[OpenGraph, ...]


@dataclass(frozen=True)
class PSGraph:
    graph: OpenGraph = field(default_factory=OpenGraph)
    atomics: dict[str, TacticSpec] = field(default_factory=dict)
    graph_tactics: dict[str, GraphTactic] = field(default_factory=dict)
    fresh_counter: int = 0


def empty_psgraph() -> PSGraph:
    return PSGraph()


# ---------------------------------------------------------------------------
# Construction (value semantics)


def add_tactic_node(g: OpenGraph, name: str, app: AppData,
                    meta: Optional[tuple[float, float]] = None) -> tuple[OpenGraph, str]:
    if name in g.tactic_node_names():
        raise DuplicateName(name)
    nid = f"v{g.next_id}"
    nodes = dict(g.nodes)
    nodes[nid] = TacticNode(name, app, meta)
    return OpenGraph(nodes, dict(g.edges), g.next_id + 1), nid


def add_boundary(g: OpenGraph,
                 meta: Optional[tuple[float, float]] = None) -> tuple[OpenGraph, str]:
    nid = f"v{g.next_id}"
    nodes = dict(g.nodes)
    nodes[nid] = Boundary(meta)
    return OpenGraph(nodes, dict(g.edges), g.next_id + 1), nid


def add_edge(g: OpenGraph, src: str, tgt: str, gt: GoalType) -> tuple[OpenGraph, str]:
    for endpoint in (src, tgt):
        if endpoint not in g.nodes:
            raise UnknownNode(endpoint)
    if isinstance(g.nodes[src], Boundary) and isinstance(g.nodes[tgt], Boundary):
        raise BoundaryToBoundary(f"{src} -> {tgt}")
    eid = f"e{g.next_id}"
    edges = dict(g.edges)
    edges[eid] = Edge(src, tgt, gt)
    return OpenGraph(dict(g.nodes), edges, g.next_id + 1), eid


def delete_item(g: OpenGraph, ident: str) -> OpenGraph:
    if ident in g.edges:
        edges = {k: v for k, v in g.edges.items() if k != ident}
        return OpenGraph(dict(g.nodes), edges, g.next_id)
    if ident in g.nodes:
        nodes = {k: v for k, v in g.nodes.items() if k != ident}
        edges = {k: v for k, v in g.edges.items()
                 if v.src != ident and v.tgt != ident}
        return OpenGraph(nodes, edges, g.next_id)
    raise UnknownNode(ident)


def interface(g: OpenGraph) -> tuple[list[tuple[str, GoalType]], list[tuple[str, GoalType]]]:
    """Input edges (boundary source) and output edges (boundary target),
    each identifier-sorted."""
    inputs, outputs = [], []
    for eid in g.sorted_edge_ids():
        e = g.edges[eid]
        if isinstance(g.nodes.get(e.src), Boundary):
            inputs.append((eid, e.gtype))
        if isinstance(g.nodes.get(e.tgt), Boundary):
            outputs.append((eid, e.gtype))
    return inputs, outputs


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.code}({self.subject})" + (f": {self.detail}" if self.detail else "")


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.violations)

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


def _validate_graph(g: OpenGraph, p: PSGraph, where: str,
                    out: list[Violation], ctx: Optional[Context]) -> None:
    names_seen: set[str] = set()
    for nid, data in g.nodes.items():
        if isinstance(data, TacticNode):
            if data.name in names_seen:
                out.append(Violation("DuplicateName", data.name, where))
            names_seen.add(data.name)
            if isinstance(data.app, Atomic):
                if data.app.tactic_name not in p.atomics:
                    out.append(Violation("UnresolvedTactic", data.app.tactic_name, where))
            else:
                gt = p.graph_tactics.get(data.app.graphtactic_name)
                if gt is None:
                    out.append(Violation("UnresolvedGraphTactic",
                                         data.app.graphtactic_name, where))
        else:
            if g.degree(nid) != 1:
                out.append(Violation("BoundaryDegree", nid,
                                     f"{where}: degree {g.degree(nid)}"))
    for eid, e in g.edges.items():
        if e.src not in g.nodes or e.tgt not in g.nodes:
            out.append(Violation("DanglingEndpoint", eid, where))
            continue
        if isinstance(g.nodes[e.src], Boundary) and isinstance(g.nodes[e.tgt], Boundary):
            out.append(Violation("BoundaryToBoundary", eid, where))
    if ctx is not None:
        pass  # tactic registry resolution is checked below, once per table


def _iface_shape(g: OpenGraph) -> tuple[list[str], list[str]]:
    ins, outs = interface(g)
    from .goaltypes import normalize
    return ([str(normalize(t)) for _, t in ins], [str(normalize(t)) for _, t in outs])


def validate(p: PSGraph, ctx: Optional[Context] = None) -> ValidationReport:
    out: list[Violation] = []
    _validate_graph(p.graph, p, "graph", out, ctx)
    for name, gt in p.graph_tactics.items():
        if gt.mode == "single" and len(gt.graphs) != 1:
            out.append(Violation("BadGraphCount", name,
                                 f"single requires 1 graph, got {len(gt.graphs)}"))
        if gt.mode in ("or", "orelse") and len(gt.graphs) < 2:
            out.append(Violation("BadGraphCount", name,
                                 f"{gt.mode} requires >=2 graphs, got {len(gt.graphs)}"))
        if gt.mode not in ("single", "or", "orelse"):
            out.append(Violation("BadMode", name, gt.mode))
        if gt.mode in ("or", "orelse") and len(gt.graphs) >= 2:
            shapes = [_iface_shape(g) for g in gt.graphs]
            ref = (sorted(shapes[0][0]), sorted(shapes[0][1]))
            for shape in shapes[1:]:
                if (sorted(shape[0]), sorted(shape[1])) != ref:
                    out.append(Violation("InterfaceMismatch", name))
                    break
        for i, g in enumerate(gt.graphs):
            _validate_graph(g, p, f"graph_tactics/{name}/{i}", out, ctx)
    if ctx is not None:
        for key, spec in p.atomics.items():
            if spec.tactic not in ctx.tactics:
                out.append(Violation("UnknownBackendTactic", spec.tactic, key))
            for thm in spec.thms:
                if thm not in ctx.theorems:
                    out.append(Violation("UnknownTheorem", thm, key))
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# JSON serialization (.psg)


def _gnode_to_json(g: Gnode) -> dict:
    return {"goal_text": g.goal_text, "pnode_key": g.pnode_key,
            "annotations": g.annotation_dict()}


def _graph_to_json(g: OpenGraph) -> dict:
    nodes = []
    for nid in g.sorted_node_ids():
        data = g.nodes[nid]
        node: dict = {"id": nid}
        if isinstance(data, TacticNode):
            node["kind"] = "tactic"
            node["name"] = data.name
            if isinstance(data.app, Atomic):
                node["app"] = {"atomic": data.app.tactic_name}
            else:
                node["app"] = {"nested": data.app.graphtactic_name}
        else:
            node["kind"] = "boundary"
        if data.meta is not None:
            node["meta"] = {"x": data.meta[0], "y": data.meta[1]}
        nodes.append(node)
    edges = []
    for eid in g.sorted_edge_ids():
        e = g.edges[eid]
        edges.append({"id": eid, "src": e.src, "tgt": e.tgt,
                      "gtype": str(e.gtype),
                      "goals": [_gnode_to_json(x) for x in e.goals]})
    return {"nodes": nodes, "edges": edges}


def to_json(p: PSGraph) -> str:
    report = validate(p)
    if report:
        raise GraphError("cannot serialize: " + "; ".join(map(str, report.violations)))
    doc = {
        "version": 1,
        "graph": _graph_to_json(p.graph),
        "atomics": {k: str(v) for k, v in sorted(p.atomics.items())},
        "graph_tactics": {
            k: {"mode": v.mode, "graphs": [_graph_to_json(g) for g in v.graphs]}
            for k, v in sorted(p.graph_tactics.items())
        },
        "fresh_counter": p.fresh_counter,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _require(doc: dict, key: str, path: str):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"{path}/{key}", "missing")
    return doc[key]


def _graph_from_json(doc: dict, path: str) -> OpenGraph:
    nodes: dict[str, NodeData] = {}
    max_num = -1
    for i, node in enumerate(_require(doc, "nodes", path)):
        npath = f"{path}/nodes/{i}"
        nid = _require(node, "id", npath)
        kind = _require(node, "kind", npath)
        meta = None
        if "meta" in node:
            meta = (node["meta"].get("x", 0.0), node["meta"].get("y", 0.0))
        if kind == "tactic":
            app = _require(node, "app", npath)
            if "atomic" in app:
                data: AppData = Atomic(app["atomic"])
            elif "nested" in app:
                data = NestedRef(app["nested"])
            else:
                raise SchemaError(f"{npath}/app", "needs atomic or nested")
            nodes[nid] = TacticNode(_require(node, "name", npath), data, meta)
        elif kind == "boundary":
            nodes[nid] = Boundary(meta)
        else:
            raise SchemaError(f"{npath}/kind", f"unknown kind {kind!r}")
        m = re.search(r"(\d+)$", nid)
        if m:
            max_num = max(max_num, int(m.group(1)))
    edges: dict[str, Edge] = {}
    for i, edge in enumerate(_require(doc, "edges", path)):
        epath = f"{path}/edges/{i}"
        eid = _require(edge, "id", epath)
        try:
            gtype = parse_goaltype(_require(edge, "gtype", epath))
        except ParseError as exc:
            raise SchemaError(f"{epath}/gtype", str(exc))
        goals = tuple(
            Gnode(goal_text=_require(gj, "goal_text", f"{epath}/goals/{j}"),
                  pnode_key=_require(gj, "pnode_key", f"{epath}/goals/{j}"),
                  annotations=tuple(sorted(gj.get("annotations", {}).items())))
            for j, gj in enumerate(edge.get("goals", [])))
        edges[eid] = Edge(_require(edge, "src", epath), _require(edge, "tgt", epath),
                          gtype, goals)
        m = re.search(r"(\d+)$", eid)
        if m:
            max_num = max(max_num, int(m.group(1)))
    return OpenGraph(nodes, edges, max_num + 1)


def from_json(text: str) -> PSGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("/", f"not JSON: {exc}")
    if not isinstance(doc, dict):
        raise SchemaError("/", "expected object")
    graph = _graph_from_json(_require(doc, "graph", ""), "/graph")
    atomics_doc = _require(doc, "atomics", "")
    atomics = {}
    for key, spec in atomics_doc.items():
        try:
            atomics[key] = TacticSpec.parse(spec)
        except ValueError as exc:
            raise SchemaError(f"/atomics/{key}", str(exc))
    gts = {}
    for key, entry in _require(doc, "graph_tactics", "").items():
        mode = _require(entry, "mode", f"/graph_tactics/{key}")
        graphs = tuple(_graph_from_json(g, f"/graph_tactics/{key}/graphs/{i}")
                       for i, g in enumerate(_require(entry, "graphs",
                                                      f"/graph_tactics/{key}")))
        gts[key] = GraphTactic(mode, graphs)
    counter = _require(doc, "fresh_counter", "")
    if not isinstance(counter, int):
        raise SchemaError("/fresh_counter", "expected integer")
    return PSGraph(graph, atomics, gts, counter)
