"""Protocol server: message handling, the NDJSON and WebSocket transports,
session isolation, and graph editing commands."""

import base64
import hashlib
import json
import os
import socket
import struct

import pytest

from conftest import STRATEGIES
from psgraph.combinators import compile_strategy
from psgraph.graph import from_json, to_json
from psgraph.protocol import (
    CURRENT, DEFAULT_PORT, PSGraphServer, Session, process_line,
    serve_background,
)


def call(session, command, params=None, msg_id=1):
    resp = json.loads(process_line(
        session, json.dumps({"id": msg_id, "command": command,
                             "input": params or {}})))
    assert resp["id"] == msg_id and resp["command"] == command
    return resp


def ok(session, command, params=None, msg_id=1):
    resp = call(session, command, params, msg_id)
    assert resp["status"] == "ok", resp
    return resp["output"]


def err(session, command, params=None, msg_id=1):
    resp = call(session, command, params, msg_id)
    assert resp["status"] == "error", resp
    return resp["output"]


@pytest.fixture(scope="module")
def fig_doc():
    p = compile_strategy((STRATEGIES / "induct_ripple.psx").read_text())
    return json.loads(to_json(p))


class TestMessages:
    def test_ping_echoes_id(self):
        s = Session()
        for msg_id in (0, 7, 12345):
            assert ok(s, "ping", msg_id=msg_id) == {}

    def test_bad_json(self):
        resp = json.loads(process_line(Session(), "{{{not json"))
        assert resp == {"id": -1, "command": None, "status": "error",
                        "output": {"reason": "bad_json"}}

    def test_unknown_command(self):
        out = err(Session(), "frobnicate")
        assert out["reason"] == "unknown_command"


class TestEval:
    def test_auto_mode(self, fig_doc):
        s = Session()
        ok(s, "load_graph", {"name": "fig", "psgraph": fig_doc})
        out = ok(s, "start_eval", {"graph": "fig", "goal": "!x. x + 0 = x",
                                   "mode": "auto"})
        assert out["status"] == "complete" and out["open_goals"] == 0

    def test_interactive_stepping(self, fig_doc):
        s = Session()
        ok(s, "load_graph", {"name": "fig", "psgraph": fig_doc})
        out = ok(s, "start_eval", {"graph": "fig", "goal": "!x. x + 0 = x"})
        steps = 0
        while out["status"] == "running":
            out = ok(s, "step")
            steps += 1
            assert steps < 200
        assert out["status"] == "complete" and out["goals"] == []
        state = ok(s, "state")
        assert state["status"] == "complete"

    def test_backtrack_and_replay(self, fig_doc):
        s = Session()
        ok(s, "load_graph", {"name": "fig", "psgraph": fig_doc})
        ok(s, "start_eval", {"graph": "fig", "goal": "!x. x + 0 = x"})
        a = ok(s, "step")
        ok(s, "step")
        b = ok(s, "backtrack")
        assert b["history_depth"] == a["history_depth"]
        # Replay re-executes the first step and lands in the same state.
        c = ok(s, "replay")
        assert c["goals"] == a["goals"]
        assert c["history_depth"] == a["history_depth"]
        out = err(s, "backtrack") if not s.eval.history else None
        assert out is None or out["reason"] == "empty_history"

    def test_terminate_and_errors(self, fig_doc):
        s = Session()
        assert err(s, "step")["reason"] == "no_active_eval"
        ok(s, "load_graph", {"name": "fig", "psgraph": fig_doc})
        ok(s, "start_eval", {"graph": "fig", "goal": "!x. x + 0 = x"})
        out = ok(s, "terminate")
        assert out["status"] == "failed" and out["reason"] == "UserTerminated"
        assert err(s, "step")["reason"] == "eval_terminated"

    def test_bad_goal_reports_position(self, fig_doc):
        s = Session()
        ok(s, "load_graph", {"name": "fig", "psgraph": fig_doc})
        out = err(s, "start_eval", {"graph": "fig", "goal": "x + ="})
        assert out["reason"] == "bad_goal" and "position" in out

    def test_unknown_graph(self):
        out = err(Session(), "start_eval", {"graph": "nope", "goal": "0 = 0"})
        assert out["reason"] == "unknown_graph"


class TestEditing:
    def build_two_node(self, s):
        b_in = ok(s, "add_node", {"kind": "boundary"})["node_id"]
        v = ok(s, "add_node", {"name": "close",
                               "app": {"atomic": "refl"}})["node_id"]
        b_out = ok(s, "add_node", {"kind": "boundary"})["node_id"]
        ok(s, "add_edge", {"src": b_in, "tgt": v, "gtype": "any"})
        ok(s, "add_edge", {"src": v, "tgt": b_out, "gtype": "any"})
        return v

    def test_draw_save_check_eval(self):
        s = Session()
        self.build_two_node(s)
        assert ok(s, "check_graph") == {"violations": []}
        doc = ok(s, "save_graph")["psgraph"]
        assert from_json(json.dumps(doc)) == s.graphs[CURRENT]
        out = ok(s, "start_eval", {"goal": "0 = 0", "mode": "auto"})
        assert out["status"] == "complete"

    def test_validation_reports_violations(self):
        s = Session()
        ok(s, "add_node", {"kind": "boundary"})
        out = ok(s, "check_graph")
        assert any("BoundaryDegree" in v for v in out["violations"])

    def test_set_edge_type_and_delete(self):
        s = Session()
        v = self.build_two_node(s)
        eid = next(iter(s.graphs[CURRENT].graph.edges))
        ok(s, "set_edge_type", {"id": eid, "gtype": "is_eq"})
        assert str(s.graphs[CURRENT].graph.edges[eid].gtype) == "is_eq"
        out = err(s, "set_edge_type", {"id": eid, "gtype": "a ? b"})
        assert out["reason"] == "bad_goaltype" and "position" in out
        ok(s, "delete_item", {"id": v})
        assert v not in s.graphs[CURRENT].graph.nodes

    def test_set_node_data(self):
        s = Session()
        v = self.build_two_node(s)
        ok(s, "set_node_data", {"id": v, "meta": {"x": 10, "y": 20}})
        assert s.graphs[CURRENT].graph.nodes[v].meta == (10, 20)

    def test_edits_rejected_while_running(self, fig_doc):
        s = Session()
        ok(s, "load_graph", {"name": "fig", "psgraph": fig_doc})
        ok(s, "start_eval", {"graph": "fig", "goal": "!x. x + 0 = x"})
        out = err(s, "add_node", {"kind": "boundary"})
        assert out["reason"] == "eval_running"
        ok(s, "terminate")
        ok(s, "add_node", {"kind": "boundary"})  # allowed again

    def test_hierarchy_lookup(self, fig_doc):
        s = Session()
        ok(s, "load_graph", {"name": "fig", "psgraph": fig_doc})
        ok(s, "start_eval", {"graph": "fig", "goal": "!x. x + 0 = x"})
        p = s.eval.psgraph
        nested = next(nid for nid, d in p.graph.nodes.items()
                      if getattr(getattr(d, "app", None), "graphtactic_name",
                                 None))
        out = ok(s, "hierarchy", {"node_id": nested})
        assert out["mode"] in ("single", "or", "orelse") and out["graphs"]


# ---------------------------------------------------------------------------
# Transports


class NdjsonClient:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port))
        self.buf = b""
        self.next_id = 0

    def request(self, command, params=None):
        self.next_id += 1
        msg = {"id": self.next_id, "command": command, "input": params or {}}
        self.sock.sendall(json.dumps(msg).encode() + b"\n")
        while b"\n" not in self.buf:
            chunk = self.sock.recv(65536)
            assert chunk, "server closed connection"
            self.buf += chunk
        line, self.buf = self.buf.split(b"\n", 1)
        resp = json.loads(line)
        assert resp["id"] == self.next_id and resp["command"] == command
        return resp

    def close(self):
        self.sock.close()


class WsClient:
    """Minimal RFC 6455 client (masked text frames, as browsers send)."""

    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port))
        key = base64.b64encode(os.urandom(16)).decode()
        self.sock.sendall((
            f"GET / HTTP/1.1\r\nHost: 127.0.0.1:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        ).encode())
        resp = b""
        while b"\r\n\r\n" not in resp:
            resp += self.sock.recv(65536)
        assert b"101" in resp.split(b"\r\n", 1)[0]
        guid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
        expect = base64.b64encode(
            hashlib.sha1((key + guid).encode()).digest()).decode()
        assert expect.encode() in resp
        self.next_id = 0

    def _send_text(self, payload: bytes):
        mask = os.urandom(4)
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        n = len(payload)
        if n < 126:
            head = bytes([0x81, 0x80 | n])
        else:
            head = bytes([0x81, 0x80 | 126]) + struct.pack(">H", n)
        self.sock.sendall(head + mask + masked)

    def _recv_exact(self, n):
        buf = b""
        while len(buf) < n:
            chunk = self.sock.recv(n - len(buf))
            assert chunk
            buf += chunk
        return buf

    def _recv_text(self) -> bytes:
        head = self._recv_exact(2)
        length = head[1] & 0x7F
        if length == 126:
            length = struct.unpack(">H", self._recv_exact(2))[0]
        elif length == 127:
            length = struct.unpack(">Q", self._recv_exact(8))[0]
        return self._recv_exact(length)

    def request(self, command, params=None):
        self.next_id += 1
        msg = {"id": self.next_id, "command": command, "input": params or {}}
        self._send_text(json.dumps(msg).encode())
        resp = json.loads(self._recv_text())
        assert resp["id"] == self.next_id and resp["command"] == command
        return resp

    def close(self):
        self.sock.close()


@pytest.fixture(scope="module")
def server(fig_doc):
    p = from_json(json.dumps(fig_doc))
    srv = serve_background(0, preload={"fig": p})
    yield srv
    srv.shutdown()


class TestTransports:
    def test_ndjson_roundtrip(self, server):
        c = NdjsonClient(server.port)
        try:
            assert c.request("ping")["status"] == "ok"
            assert c.request("list_graphs")["output"]["names"] == ["fig"]
            out = c.request("start_eval", {"graph": "fig", "mode": "auto",
                                           "goal": "!x. x + 0 = x"})["output"]
            assert out["status"] == "complete"
        finally:
            c.close()

    def test_sessions_are_isolated(self, server):
        a, b = NdjsonClient(server.port), NdjsonClient(server.port)
        try:
            a.request("add_node", {"kind": "boundary"})
            names_b = b.request("list_graphs")["output"]["names"]
            assert names_b == ["fig"]  # A's scratch graph is invisible to B
        finally:
            a.close()
            b.close()

    def test_websocket_same_protocol(self, server):
        c = WsClient(server.port)
        try:
            assert c.request("ping")["status"] == "ok"
            out = c.request("start_eval", {"graph": "fig", "mode": "auto",
                                           "goal": "!x. x + 0 = x"})["output"]
            assert out["status"] == "complete"
        finally:
            c.close()

    def test_default_port_from_environment(self):
        assert DEFAULT_PORT == 1779
        os.environ["PSGRAPH_PORT"] = "0"
        try:
            srv = PSGraphServer()
            srv.server_close()
        finally:
            del os.environ["PSGRAPH_PORT"]
