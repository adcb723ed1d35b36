"""Client/server JSON protocol between the engine core and user interfaces.

Transport is newline-delimited JSON over TCP; connections that open with an
HTTP GET are upgraded to WebSocket and carry the same messages as text
frames.  A request has fields ``id``, ``command`` and ``input``; the
response echoes ``id`` and ``command`` and adds ``status`` and ``output``.
One session per connection; sessions are fully isolated.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import socket
import socketserver
import struct
import threading
from dataclasses import dataclass, field
from typing import Optional

from . import graph as G
from .engine import (
    EmptyHistory, Eval, EvalContext, StepOnTerminated, backtrack,
    check_branch_invariant, init_eval, replay, run_auto, select_goal, step,
    terminate,
)
from .goaltypes import ParseError as GTParseError, parse_goaltype
from .graph import (
    Atomic, Boundary, NestedRef, PSGraph, TacticSpec, _graph_to_json,
    add_boundary, add_edge, add_tactic_node, delete_item, from_json, to_json,
    validate,
)
from .prover import init_pplan
from .terms import TermParseError, parse_prop

DEFAULT_PORT = 1779
CURRENT = "<current>"


class CommandError(Exception):
    def __init__(self, reason: str, detail: Optional[dict] = None):
        super().__init__(reason)
        self.reason = reason
        self.detail = detail or {}


def render_state(ev: Eval) -> dict:
    branch = ev.branches[0] if ev.branches else None
    frames = []
    path = []
    if branch is not None:
        for frame in branch.stack:
            frames.append({"graph": _graph_to_json(frame.graph),
                           "origin": frame.origin})
            if frame.origin is not None:
                path.append(frame.origin)
    goals = []
    if branch is not None:
        for gid in sorted(branch.pplan.open_goals):
            goals.append({"id": gid, "text": branch.pplan.open_goals[gid].text()})
    return {
        "status": ev.status.kind,
        "reason": ev.status.reason,
        "failure_report": ev.status.report,
        "branch_count": len(ev.branches),
        "open_goals": len(branch.pplan.open_goals) if branch else 0,
        "frames": frames,
        "hierarchy_path": path,
        "goals": goals,
        "history_depth": len(ev.history),
        "warnings": list(ev.warnings),
    }


@dataclass
class Session:
    ctx: EvalContext = field(default_factory=EvalContext)
    graphs: dict[str, PSGraph] = field(default_factory=dict)
    eval: Optional[Eval] = None

    # -- helpers -----------------------------------------------------------

    def _graph_for_edit(self, params: dict) -> tuple[str, PSGraph]:
        name = params.get("graph", CURRENT)
        if self.eval is not None and self.eval.status.running:
            raise CommandError("eval_running")
        if name not in self.graphs:
            if name == CURRENT:
                self.graphs[name] = G.empty_psgraph()
            else:
                raise CommandError("unknown_graph", {"name": name})
        return name, self.graphs[name]

    def _require_eval(self) -> Eval:
        if self.eval is None:
            raise CommandError("no_active_eval")
        return self.eval

    def _parse_gtype(self, text: str):
        try:
            return parse_goaltype(text)
        except GTParseError as exc:
            raise CommandError("bad_goaltype",
                              {"position": exc.position, "expected": exc.expected})

    # -- command handlers --------------------------------------------------

    def handle(self, command: str, params: dict) -> dict:
        handler = getattr(self, f"cmd_{command}", None)
        if handler is None:
            raise CommandError("unknown_command", {"command": command})
        return handler(params or {})

    def cmd_ping(self, params):
        return {}

    def cmd_load_graph(self, params):
        name = params.get("name")
        doc = params.get("psgraph")
        if not name or doc is None:
            raise CommandError("missing_field", {"fields": ["name", "psgraph"]})
        text = doc if isinstance(doc, str) else json.dumps(doc)
        try:
            self.graphs[name] = from_json(text)
        except G.SchemaError as exc:
            raise CommandError("schema_error", {"path": exc.path,
                                               "reason": exc.reason})
        return {}

    def cmd_list_graphs(self, params):
        return {"names": sorted(self.graphs)}

    def cmd_save_graph(self, params):
        name = params.get("name", CURRENT)
        if name not in self.graphs:
            raise CommandError("unknown_graph", {"name": name})
        try:
            return {"psgraph": json.loads(to_json(self.graphs[name]))}
        except G.GraphError as exc:
            raise CommandError("invalid_graph", {"detail": str(exc)})

    def cmd_check_graph(self, params):
        name = params.get("name", CURRENT)
        if name not in self.graphs:
            raise CommandError("unknown_graph", {"name": name})
        report = validate(self.graphs[name], self.ctx.prover)
        return {"violations": [str(v) for v in report.violations]}

    def cmd_start_eval(self, params):
        name = params.get("graph", CURRENT)
        goal_text = params.get("goal")
        mode = params.get("mode", "interactive")
        if name not in self.graphs:
            raise CommandError("unknown_graph", {"name": name})
        if not goal_text:
            raise CommandError("missing_field", {"fields": ["goal"]})
        try:
            goal = parse_prop(goal_text)
        except TermParseError as exc:
            raise CommandError("bad_goal", {"position": exc.position,
                                            "expected": exc.expected})
        try:
            pn, plan = init_pplan(goal)
            ev = init_eval(self.graphs[name], pn, plan, self.ctx)
        except Exception as exc:
            raise CommandError("init_failed", {"detail": str(exc)})
        if mode == "auto":
            ev = run_auto(ev, self.ctx, fuel=int(params.get("fuel", 10000)))
        self.eval = ev
        return render_state(ev)

    def cmd_step(self, params):
        ev = self._require_eval()
        try:
            self.eval = step(ev, self.ctx)
        except StepOnTerminated:
            raise CommandError("eval_terminated")
        return render_state(self.eval)

    def cmd_backtrack(self, params):
        ev = self._require_eval()
        try:
            self.eval = backtrack(ev)
        except EmptyHistory:
            raise CommandError("empty_history")
        return render_state(self.eval)

    def cmd_replay(self, params):
        ev = self._require_eval()
        try:
            self.eval = replay(ev, self.ctx)
        except EmptyHistory:
            raise CommandError("empty_history")
        return render_state(self.eval)

    def cmd_terminate(self, params):
        ev = self._require_eval()
        self.eval = terminate(ev, self.ctx)
        return render_state(self.eval)

    def cmd_state(self, params):
        ev = self._require_eval()
        if ev.branches and not check_branch_invariant(ev):
            raise CommandError("invariant_violation")
        return render_state(ev)

    def cmd_select_goal(self, params):
        ev = self._require_eval()
        edge_id = params.get("edge_id")
        index = int(params.get("index", 0))
        if not ev.branches:
            raise CommandError("no_branches")
        top = ev.branches[0].stack[-1].graph
        edge = top.edges.get(edge_id)
        if edge is None or index >= len(edge.goals):
            raise CommandError("bad_selection", {"edge_id": edge_id,
                                                 "index": index})
        self.eval = select_goal(ev, edge_id, index)
        return render_state(self.eval)

    def cmd_add_node(self, params):
        name, p = self._graph_for_edit(params)
        kind = params.get("kind", "tactic")
        meta = None
        if "meta" in params:
            meta = (params["meta"].get("x", 0.0), params["meta"].get("y", 0.0))
        if kind == "boundary":
            g, nid = add_boundary(p.graph, meta)
            self.graphs[name] = G.PSGraph(g, p.atomics, p.graph_tactics,
                                          p.fresh_counter)
            return {"node_id": nid}
        node_name = params.get("name")
        if not node_name:
            raise CommandError("missing_field", {"fields": ["name"]})
        app = params.get("app", {"atomic": node_name})
        atomics = dict(p.atomics)
        gts = dict(p.graph_tactics)
        if "atomic" in app:
            key = app["atomic"]
            atomics.setdefault(key, TacticSpec.parse(key))
            data: G.AppData = Atomic(key)
        elif "nested" in app:
            data = NestedRef(app["nested"])
        else:
            raise CommandError("bad_app")
        try:
            g, nid = add_tactic_node(p.graph, node_name, data, meta)
        except G.DuplicateName:
            raise CommandError("duplicate_name", {"name": node_name})
        self.graphs[name] = G.PSGraph(g, atomics, gts, p.fresh_counter)
        return {"node_id": nid}

    def cmd_add_edge(self, params):
        name, p = self._graph_for_edit(params)
        gt = self._parse_gtype(params.get("gtype", "any"))
        try:
            g, eid = add_edge(p.graph, params.get("src"), params.get("tgt"), gt)
        except G.UnknownNode as exc:
            raise CommandError("unknown_node", {"node": str(exc)})
        except G.BoundaryToBoundary:
            raise CommandError("boundary_to_boundary")
        self.graphs[name] = G.PSGraph(g, p.atomics, p.graph_tactics,
                                      p.fresh_counter)
        return {"edge_id": eid}

    def cmd_delete_item(self, params):
        name, p = self._graph_for_edit(params)
        try:
            g = delete_item(p.graph, params.get("id"))
        except G.UnknownNode:
            raise CommandError("unknown_item", {"id": params.get("id")})
        self.graphs[name] = G.PSGraph(g, p.atomics, p.graph_tactics,
                                      p.fresh_counter)
        return {}

    def cmd_set_node_data(self, params):
        name, p = self._graph_for_edit(params)
        nid = params.get("id")
        node = p.graph.nodes.get(nid)
        if node is None:
            raise CommandError("unknown_item", {"id": nid})
        atomics = dict(p.atomics)
        if isinstance(node, G.TacticNode):
            new_name = params.get("name", node.name)
            app = node.app
            if "app" in params:
                spec = params["app"]
                if "atomic" in spec:
                    atomics.setdefault(spec["atomic"], TacticSpec.parse(spec["atomic"]))
                    app = Atomic(spec["atomic"])
                elif "nested" in spec:
                    app = NestedRef(spec["nested"])
            meta = node.meta
            if "meta" in params:
                meta = (params["meta"].get("x", 0.0), params["meta"].get("y", 0.0))
            nodes = dict(p.graph.nodes)
            nodes[nid] = G.TacticNode(new_name, app, meta)
            g = G.OpenGraph(nodes, dict(p.graph.edges), p.graph.next_id)
        else:
            meta = node.meta
            if "meta" in params:
                meta = (params["meta"].get("x", 0.0), params["meta"].get("y", 0.0))
            nodes = dict(p.graph.nodes)
            nodes[nid] = Boundary(meta)
            g = G.OpenGraph(nodes, dict(p.graph.edges), p.graph.next_id)
        self.graphs[name] = G.PSGraph(g, atomics, p.graph_tactics,
                                      p.fresh_counter)
        return {}

    def cmd_set_edge_type(self, params):
        name, p = self._graph_for_edit(params)
        eid = params.get("id")
        edge = p.graph.edges.get(eid)
        if edge is None:
            raise CommandError("unknown_item", {"id": eid})
        gt = self._parse_gtype(params.get("gtype", ""))
        edges = dict(p.graph.edges)
        edges[eid] = G.Edge(edge.src, edge.tgt, gt, edge.goals)
        g = G.OpenGraph(dict(p.graph.nodes), edges, p.graph.next_id)
        self.graphs[name] = G.PSGraph(g, p.atomics, p.graph_tactics,
                                      p.fresh_counter)
        return {}

    def cmd_hierarchy(self, params):
        node_id = params.get("node_id")
        p = None
        if self.eval is not None:
            p = self.eval.psgraph
        elif CURRENT in self.graphs:
            p = self.graphs[CURRENT]
        if p is None:
            raise CommandError("no_active_eval")
        node = p.graph.nodes.get(node_id)
        if node is None:
            for gt in p.graph_tactics.values():
                for g in gt.graphs:
                    if node_id in g.nodes:
                        node = g.nodes[node_id]
                        break
        if not isinstance(node, G.TacticNode) or not isinstance(node.app, NestedRef):
            raise CommandError("not_nested", {"node_id": node_id})
        entry = p.graph_tactics[node.app.graphtactic_name]
        return {"name": node.app.graphtactic_name,
                "mode": entry.mode,
                "graphs": [_graph_to_json(g) for g in entry.graphs]}


def process_line(session: Session, line: str) -> str:
    try:
        msg = json.loads(line)
        msg_id = msg.get("id", -1)
        command = msg.get("command", "")
    except (json.JSONDecodeError, AttributeError):
        return json.dumps({"id": -1, "command": None, "status": "error",
                           "output": {"reason": "bad_json"}})
    try:
        output = session.handle(command, msg.get("input") or {})
        resp = {"id": msg_id, "command": command, "status": "ok",
                "output": output}
    except CommandError as exc:
        resp = {"id": msg_id, "command": command, "status": "error",
                "output": {"reason": exc.reason, **exc.detail}}
    except Exception as exc:  # defensive: never kill the connection
        resp = {"id": msg_id, "command": command, "status": "error",
                "output": {"reason": "internal_error", "detail": str(exc)}}
    return json.dumps(resp)


# ---------------------------------------------------------------------------
# WebSocket framing (minimal RFC 6455 server side, text frames only)

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def _ws_handshake(conn: socket.socket, request: bytes) -> bool:
    headers = {}
    for line in request.decode("latin-1").split("\r\n")[1:]:
        if ":" in line:
            k, v = line.split(":", 1)
            headers[k.strip().lower()] = v.strip()
    key = headers.get("sec-websocket-key")
    if key is None:
        conn.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
        return False
    accept = base64.b64encode(
        hashlib.sha1((key + _WS_GUID).encode()).digest()).decode()
    conn.sendall((
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\nConnection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode())
    return True


def _ws_recv_frame(conn: socket.socket) -> Optional[tuple[int, bytes]]:
    head = _read_exact(conn, 2)
    if head is None:
        return None
    opcode = head[0] & 0x0F
    masked = head[1] & 0x80
    length = head[1] & 0x7F
    if length == 126:
        ext = _read_exact(conn, 2)
        if ext is None:
            return None
        length = struct.unpack(">H", ext)[0]
    elif length == 127:
        ext = _read_exact(conn, 8)
        if ext is None:
            return None
        length = struct.unpack(">Q", ext)[0]
    mask = b"\x00" * 4
    if masked:
        mask = _read_exact(conn, 4)
        if mask is None:
            return None
    payload = _read_exact(conn, length) if length else b""
    if payload is None:
        return None
    if masked:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return opcode, payload


def _ws_send_frame(conn: socket.socket, opcode: int, payload: bytes) -> None:
    header = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        header += bytes([n])
    elif n < 1 << 16:
        header += bytes([126]) + struct.pack(">H", n)
    else:
        header += bytes([127]) + struct.pack(">Q", n)
    conn.sendall(header + payload)


def _read_exact(conn: socket.socket, n: int) -> Optional[bytes]:
    buf = b""
    while len(buf) < n:
        chunk = conn.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


# ---------------------------------------------------------------------------
# Server


class _Handler(socketserver.BaseRequestHandler):
    def handle(self) -> None:
        server: PSGraphServer = self.server  # type: ignore[assignment]
        session = server.make_session()
        conn = self.request
        first = conn.recv(4, socket.MSG_PEEK)
        if first.startswith(b"GET"):
            self._handle_ws(conn, session)
        else:
            self._handle_ndjson(conn, session)

    def _handle_ndjson(self, conn: socket.socket, session: Session) -> None:
        buf = b""
        while True:
            chunk = conn.recv(65536)
            if not chunk:
                return
            buf += chunk
            while b"\n" in buf:
                line, buf = buf.split(b"\n", 1)
                if not line.strip():
                    continue
                resp = process_line(session, line.decode("utf-8"))
                conn.sendall(resp.encode("utf-8") + b"\n")

    def _handle_ws(self, conn: socket.socket, session: Session) -> None:
        request = b""
        while b"\r\n\r\n" not in request:
            chunk = conn.recv(65536)
            if not chunk:
                return
            request += chunk
        if not _ws_handshake(conn, request):
            return
        while True:
            frame = _ws_recv_frame(conn)
            if frame is None:
                return
            opcode, payload = frame
            if opcode == 0x8:  # close
                _ws_send_frame(conn, 0x8, b"")
                return
            if opcode == 0x9:  # ping
                _ws_send_frame(conn, 0xA, payload)
                continue
            if opcode in (0x1, 0x2):
                resp = process_line(session, payload.decode("utf-8"))
                _ws_send_frame(conn, 0x1, resp.encode("utf-8"))


class PSGraphServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, port: Optional[int] = None,
                 preload: Optional[dict[str, PSGraph]] = None,
                 host: str = "127.0.0.1"):
        if port is None:
            port = int(os.environ.get("PSGRAPH_PORT", DEFAULT_PORT))
        self.preload = dict(preload or {})
        try:
            super().__init__((host, port), _Handler)
        except OSError as exc:
            raise RuntimeError(f"cannot bind port {port}: {exc}")

    def make_session(self) -> Session:
        return Session(graphs=dict(self.preload))

    @property
    def port(self) -> int:
        return self.server_address[1]


def serve(port: Optional[int] = None,
          preload: Optional[dict[str, PSGraph]] = None) -> None:
    server = PSGraphServer(port, preload)
    server.serve_forever()


def serve_background(port: int = 0,
                     preload: Optional[dict[str, PSGraph]] = None) -> PSGraphServer:
    """Start a server on a background thread (port 0 picks a free port)."""
    server = PSGraphServer(port, preload)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
